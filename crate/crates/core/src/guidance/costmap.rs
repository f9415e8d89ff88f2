use crate::geometry::Vec2;
use crate::world::Scenario;

use super::astar::{astar_plan, PlannedPath};
use super::GuidanceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub ix: usize,
    pub iy: usize,
}

/// Obstacle-probability grid over a scenario's bounds.
///
/// A cell is blocked for planning when its center lies inside an obstacle or
/// its smoothed probability reaches `hard_threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Costmap {
    pub origin: Vec2,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    binary: Vec<bool>,
    prob: Vec<f64>,
    pub cost_weight: f64,
    pub hard_threshold: f64,
}

impl Costmap {
    /// Grid with the given binary occupancy, smoothed by a normalized Gaussian of
    /// `sigma` meters (zero padding outside the grid).
    pub fn from_binary(
        origin: Vec2,
        cell_size: f64,
        width: usize,
        height: usize,
        binary: Vec<bool>,
        sigma: f64,
    ) -> Self {
        assert_eq!(binary.len(), width * height);
        let raw: Vec<f64> = binary.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let prob = gaussian_smooth(&raw, width, height, sigma / cell_size)
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect();
        Costmap {
            origin,
            cell_size,
            width,
            height,
            binary,
            prob,
            cost_weight: 10.0,
            hard_threshold: 0.5,
        }
    }

    pub fn with_planning(mut self, cost_weight: f64, hard_threshold: f64) -> Self {
        self.cost_weight = cost_weight;
        self.hard_threshold = hard_threshold;
        self
    }

    fn idx(&self, c: CellIndex) -> usize {
        c.iy * self.width + c.ix
    }

    pub fn cell_of(&self, p: Vec2) -> Option<CellIndex> {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        (ix < self.width && iy < self.height).then_some(CellIndex { ix, iy })
    }

    pub fn center(&self, c: CellIndex) -> Vec2 {
        self.origin
            + Vec2::new(
                (c.ix as f64 + 0.5) * self.cell_size,
                (c.iy as f64 + 0.5) * self.cell_size,
            )
    }

    pub fn prob(&self, c: CellIndex) -> f64 {
        self.prob[self.idx(c)]
    }

    pub fn occupied(&self, c: CellIndex) -> bool {
        self.binary[self.idx(c)]
    }

    pub fn blocked(&self, c: CellIndex) -> bool {
        self.occupied(c) || self.prob(c) >= self.hard_threshold
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn binary(&self) -> &[bool] {
        &self.binary
    }

    /// Overrides cell probabilities (values are clamped to `[0, 1]`).
    pub fn set_prob(&mut self, c: CellIndex, p: f64) {
        let i = self.idx(c);
        self.prob[i] = p.clamp(0.0, 1.0);
    }

    pub fn set_occupied(&mut self, c: CellIndex, occupied: bool) {
        let i = self.idx(c);
        self.binary[i] = occupied;
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.height).flat_map(move |iy| (0..self.width).map(move |ix| CellIndex { ix, iy }))
    }

    /// Nearest unblocked cell by Chebyshev ring search.
    pub fn nearest_free(&self, c: CellIndex) -> Option<CellIndex> {
        if !self.blocked(c) {
            return Some(c);
        }
        let max_r = self.width.max(self.height);
        for r in 1..=max_r as isize {
            let mut best: Option<(f64, CellIndex)> = None;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let (x, y) = (c.ix as isize + dx, c.iy as isize + dy);
                    if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
                        continue;
                    }
                    let n = CellIndex {
                        ix: x as usize,
                        iy: y as usize,
                    };
                    if !self.blocked(n) {
                        let d = (dx * dx + dy * dy) as f64;
                        if best.is_none_or(|(bd, bc)| d < bd || (d == bd && n < bc)) {
                            best = Some((d, n));
                        }
                    }
                }
            }
            if let Some((_, n)) = best {
                return Some(n);
            }
        }
        None
    }

    /// Plans between the points, first moving blocked or out-of-grid endpoints
    /// to the nearest free cell.
    pub fn plan_snapped(&self, start: Vec2, goal: Vec2) -> Result<PlannedPath, GuidanceError> {
        let snap = |p: Vec2, which: &'static str| {
            let clamped = Vec2::new(
                p.x.clamp(self.origin.x, self.origin.x + self.width as f64 * self.cell_size - 1e-9),
                p.y.clamp(self.origin.y, self.origin.y + self.height as f64 * self.cell_size - 1e-9),
            );
            self.cell_of(clamped)
                .and_then(|c| self.nearest_free(c))
                .map(|c| self.center(c))
                .ok_or(GuidanceError::BlockedEndpoint { which, point: p })
        };
        let s = snap(start, "start")?;
        let g = snap(goal, "goal")?;
        astar_plan(self, s, g)
    }

    /// Binary PGM (P5) export; 255 = free, 0 = certain obstacle, row 0 at the top.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for iy in (0..self.height).rev() {
            for ix in 0..self.width {
                let p = self.prob(CellIndex { ix, iy });
                out.push((255.0 * (1.0 - p)).round() as u8);
            }
        }
        out
    }
}

/// Rasterizes obstacles (cell center inside a polygon = 1) and smooths them.
pub fn build_costmap(scenario: &Scenario, cell_size: f64, sigma: f64) -> Costmap {
    assert!(cell_size > 0.0, "cell size must be positive");
    let b = scenario.bounds;
    let width = ((b.width() / cell_size).ceil() as usize).max(1);
    let height = ((b.height() / cell_size).ceil() as usize).max(1);
    let mut binary = vec![false; width * height];
    for iy in 0..height {
        for ix in 0..width {
            let c = b.min
                + Vec2::new(
                    (ix as f64 + 0.5) * cell_size,
                    (iy as f64 + 0.5) * cell_size,
                );
            binary[iy * width + ix] = scenario.obstacles.iter().any(|o| o.contains(c));
        }
    }
    Costmap::from_binary(b.min, cell_size, width, height, binary, sigma)
}

/// Normalized separable Gaussian blur with `sigma` in cells; identity as sigma → 0.
fn gaussian_smooth(src: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 1e-12 {
        return src.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);

    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let xx = x as isize + k as isize - radius;
                if xx >= 0 && (xx as usize) < width {
                    acc += w * src[y * width + xx as usize];
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let yy = y as isize + k as isize - radius;
                if yy >= 0 && (yy as usize) < height {
                    acc += w * tmp[yy as usize * width + x];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use crate::world::{AgentTask, Bounds, DomainTag};

    fn scenario(obstacles: Vec<Polygon>) -> Scenario {
        Scenario {
            id: "c".into(),
            bounds: Bounds::new(0.0, 0.0, 10.0, 10.0),
            obstacles,
            tasks: vec![AgentTask::new(Vec2::new(0.5, 0.5), Vec2::new(9.5, 9.5))],
            domain_tag: DomainTag::G,
            expert: None,
            layout: Default::default(),
        }
    }

    #[test]
    fn empty_is_zero() {
        let m = build_costmap(&scenario(vec![]), 0.5, 0.5);
        assert!(m.probabilities().iter().all(|&p| p == 0.0));
        assert_eq!((m.width, m.height), (20, 20));
    }

    #[test]
    fn zero_sigma_is_binary() {
        let sq = Polygon::rect(Vec2::new(3.0, 3.0), Vec2::new(5.0, 5.0));
        let m = build_costmap(&scenario(vec![sq]), 0.5, 0.0);
        for (p, b) in m.probabilities().iter().zip(m.binary()) {
            assert_eq!(*p, if *b { 1.0 } else { 0.0 });
        }
        assert_eq!(m.binary().iter().filter(|b| **b).count(), 16);
    }

    #[test]
    fn pgm_header() {
        let m = build_costmap(&scenario(vec![]), 1.0, 0.0);
        let pgm = m.to_pgm();
        assert!(pgm.starts_with(b"P5\n10 10\n255\n"));
        assert_eq!(pgm.len(), b"P5\n10 10\n255\n".len() + 100);
    }
}
