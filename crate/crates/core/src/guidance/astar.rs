use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Vec2;

use super::costmap::{CellIndex, Costmap};
use super::GuidanceError;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub cells: Vec<CellIndex>,
    /// Cell centers from start to goal.
    pub waypoints: Vec<Vec2>,
    pub cost: f64,
}

/// 8-connected moves. Diagonals may not cut a blocked corner.
pub struct Neighborhood;

impl Neighborhood {
    pub const OFFSETS: [(isize, isize); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];

    /// Reachable neighbors of `c` with their edge costs.
    pub fn expand(grid: &Costmap, c: CellIndex) -> impl Iterator<Item = (CellIndex, f64)> + '_ {
        Self::OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let n = offset(grid, c, dx, dy)?;
            if grid.blocked(n) {
                return None;
            }
            if dx != 0 && dy != 0 {
                let side_a = offset(grid, c, dx, 0)?;
                let side_b = offset(grid, c, 0, dy)?;
                if grid.blocked(side_a) || grid.blocked(side_b) {
                    return None;
                }
            }
            let len = grid.cell_size * ((dx * dx + dy * dy) as f64).sqrt();
            Some((n, len * (1.0 + grid.cost_weight * grid.prob(n))))
        })
    }
}

fn offset(grid: &Costmap, c: CellIndex, dx: isize, dy: isize) -> Option<CellIndex> {
    let x = c.ix as isize + dx;
    let y = c.iy as isize + dy;
    (x >= 0 && y >= 0 && (x as usize) < grid.width && (y as usize) < grid.height).then_some(
        CellIndex {
            ix: x as usize,
            iy: y as usize,
        },
    )
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    cell: CellIndex,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then larger g first, then cell for determinism
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* over the weighted grid with the Euclidean heuristic (admissible since
/// every edge costs at least its length).
pub fn astar_plan(grid: &Costmap, start: Vec2, goal: Vec2) -> Result<PlannedPath, GuidanceError> {
    let blocked_err = |which, point| GuidanceError::BlockedEndpoint { which, point };
    let s = grid.cell_of(start).ok_or(blocked_err("start", start))?;
    let g = grid.cell_of(goal).ok_or(blocked_err("goal", goal))?;
    if grid.blocked(s) {
        return Err(blocked_err("start", start));
    }
    if grid.blocked(g) {
        return Err(blocked_err("goal", goal));
    }

    let n = grid.width * grid.height;
    let id = |c: CellIndex| c.iy * grid.width + c.ix;
    let goal_center = grid.center(g);
    let h = |c: CellIndex| grid.center(c).distance(goal_center);

    let mut best = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<CellIndex>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    best[id(s)] = 0.0;
    open.push(Open {
        f: h(s),
        g: 0.0,
        cell: s,
    });

    while let Some(Open { g: cost, cell, .. }) = open.pop() {
        if closed[id(cell)] {
            continue;
        }
        closed[id(cell)] = true;
        if cell == g {
            let mut cells = vec![cell];
            let mut cur = cell;
            while let Some(p) = parent[id(cur)] {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            let waypoints = cells.iter().map(|&c| grid.center(c)).collect();
            return Ok(PlannedPath {
                cells,
                waypoints,
                cost,
            });
        }
        for (next, step) in Neighborhood::expand(grid, cell) {
            let cand = cost + step;
            let k = id(next);
            if !closed[k] && cand < best[k] {
                best[k] = cand;
                parent[k] = Some(cell);
                open.push(Open {
                    f: cand + h(next),
                    g: cand,
                    cell: next,
                });
            }
        }
    }
    Err(GuidanceError::NoPath { start, goal })
}
