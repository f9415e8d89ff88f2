//! Local-guidance providers.
//!
//! A provider answers "which way should this agent head right now" from the
//! static environment alone; it never sees other agents. Three strategies
//! exist: GP flow regression fitted on expert logs, A* routes with
//! furthest-visible-waypoint selection, and a fixed preferred velocity.
//! [`ProviderKind`] names them for configuration and CLI selection.

mod astar;
mod costmap;
mod gp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_seg_distance, seg_seg_distance, Polygon, Segment, Vec2};
use crate::world::{Scenario, WorldView};

pub use astar::{astar_plan, Neighborhood, PlannedPath};
pub use costmap::{build_costmap, CellIndex, Costmap};
pub use gp::{fit_gp, GpHyper, GpModel, GpSample};

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("kernel matrix is numerically singular")]
    DegenerateKernel,
    #[error("no expert samples to fit")]
    NoData,
    #[error("no path from {start:?} to {goal:?}")]
    NoPath { start: Vec2, goal: Vec2 },
    #[error("{which} cell at {point:?} is blocked")]
    BlockedEndpoint { which: &'static str, point: Vec2 },
    #[error("agent {0} has no guidance entry")]
    UnknownAgent(usize),
}

/// Strategy interface: the local guidance velocity (m/s) for one agent.
pub trait GuidanceProvider: Send + Sync {
    fn name(&self) -> &'static str;
    fn local_guidance(&self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, GuidanceError>;
}

/// Unit vector toward the final goal scaled by `max_speed`.
pub fn global_guidance(position: Vec2, goal: Vec2, max_speed: f64) -> Vec2 {
    (goal - position).normalized() * max_speed
}

/// A* route planning on a smoothed costmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub cell_size: f64,
    pub smoothing_sigma: f64,
    pub cost_weight: f64,
    pub hard_threshold: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            cell_size: 0.5,
            smoothing_sigma: 0.5,
            cost_weight: 10.0,
            hard_threshold: 0.5,
        }
    }
}

/// Compass guidance: straight toward the goal.
pub struct GlobalGuidance;

impl GuidanceProvider for GlobalGuidance {
    fn name(&self) -> &'static str {
        "global"
    }

    fn local_guidance(&self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, GuidanceError> {
        let t = view.task(agent);
        Ok(global_guidance(
            view.states[agent].position,
            t.goal,
            view.config.max_speed,
        ))
    }
}

/// Fixed per-agent preferred velocities, as in the random-snapshot domain.
pub struct PreferredVelocity {
    pub velocities: Vec<Vec2>,
}

impl GuidanceProvider for PreferredVelocity {
    fn name(&self) -> &'static str {
        "preferred"
    }

    fn local_guidance(&self, _view: &WorldView<'_>, agent: usize) -> Result<Vec2, GuidanceError> {
        self.velocities
            .get(agent)
            .copied()
            .ok_or(GuidanceError::UnknownAgent(agent))
    }
}

/// GP flow guidance with fallback to the compass when the posterior is too uncertain.
pub struct GpGuidance {
    pub model: GpModel,
    pub fallback_std: f64,
}

impl GuidanceProvider for GpGuidance {
    fn name(&self) -> &'static str {
        "gp"
    }

    fn local_guidance(&self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, GuidanceError> {
        let pos = view.states[agent].position;
        let (mean, var) = self.model.predict(pos, view.time());
        let max_speed = view.config.max_speed;
        if var.sqrt() > self.fallback_std {
            Ok(global_guidance(pos, view.task(agent).goal, max_speed))
        } else {
            Ok(mean.clamp_norm(max_speed))
        }
    }
}

/// Per-agent A* routes fixed at construction; the visible waypoint is chosen each step.
pub struct AStarGuidance {
    pub grid: Costmap,
    pub routes: Vec<Vec<Vec2>>,
    obstacles: Vec<Polygon>,
    radii: Vec<f64>,
}

impl AStarGuidance {
    /// Plans one route per agent. Agents without a path fall back to a direct
    /// start→goal route and a warning is logged.
    pub fn plan(scenario: &Scenario, config: &PlannerConfig) -> Self {
        let grid = build_costmap(scenario, config.cell_size, config.smoothing_sigma)
            .with_planning(config.cost_weight, config.hard_threshold);
        let routes = scenario
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| match grid.plan_snapped(t.start, t.goal) {
                Ok(p) => p.waypoints,
                Err(e) => {
                    log::warn!("scenario {}: agent {i}: {e}; using direct route", scenario.id);
                    vec![t.start, t.goal]
                }
            })
            .collect();
        AStarGuidance {
            grid,
            routes,
            obstacles: scenario.obstacles.clone(),
            radii: scenario.tasks.iter().map(|t| t.radius).collect(),
        }
    }
}

impl GuidanceProvider for AStarGuidance {
    fn name(&self) -> &'static str {
        "astar"
    }

    fn local_guidance(&self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, GuidanceError> {
        let route = self
            .routes
            .get(agent)
            .ok_or(GuidanceError::UnknownAgent(agent))?;
        let pos = view.states[agent].position;
        let (_, waypoint) = local_goal(pos, route, &self.obstacles, self.radii[agent]);
        Ok((waypoint - pos).normalized() * view.config.max_speed)
    }
}

/// Furthest waypoint whose sight line from `position` clears every obstacle
/// edge by more than `radius`. Falls back to the nearest waypoint not yet reached.
///
/// An agent already closer than `radius` to an edge only needs its sight line
/// to keep its current clearance, otherwise nothing would ever be visible from
/// next to a wall.
///
/// Returns the waypoint index and position.
pub fn local_goal(
    position: Vec2,
    waypoints: &[Vec2],
    obstacles: &[Polygon],
    radius: f64,
) -> (usize, Vec2) {
    assert!(!waypoints.is_empty(), "local_goal needs at least one waypoint");
    let edges: Vec<Segment> = obstacles.iter().flat_map(|o| o.edges()).collect();
    let own_clearance = edges
        .iter()
        .map(|e| point_seg_distance(position, e))
        .fold(f64::INFINITY, f64::min);
    let required = radius.min(own_clearance - 1e-6);
    for (i, &w) in waypoints.iter().enumerate().rev() {
        let sight = Segment::new(position, w);
        if edges.iter().all(|e| seg_seg_distance(&sight, e) > required) {
            return (i, w);
        }
    }
    let (mut i, _) = waypoints
        .iter()
        .enumerate()
        .min_by(|a, b| position.distance(*a.1).total_cmp(&position.distance(*b.1)))
        .expect("non-empty");
    if position.distance(waypoints[i]) < 1e-6 && i + 1 < waypoints.len() {
        i += 1;
    }
    (i, waypoints[i])
}

/// Guidance local velocity scaled like [`AStarGuidance`].
pub fn local_goal_velocity(
    position: Vec2,
    waypoints: &[Vec2],
    obstacles: &[Polygon],
    radius: f64,
    max_speed: f64,
) -> Vec2 {
    let (_, w) = local_goal(position, waypoints, obstacles, radius);
    (w - position).normalized() * max_speed
}

/// Names of the registered provider strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Gp,
    Astar,
    Preferred,
    Global,
}

impl ProviderKind {
    pub const ALL: [ProviderKind; 4] = [
        ProviderKind::Gp,
        ProviderKind::Astar,
        ProviderKind::Preferred,
        ProviderKind::Global,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProviderKind::Gp => "gp",
            ProviderKind::Astar => "astar",
            ProviderKind::Preferred => "preferred",
            ProviderKind::Global => "global",
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProviderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ProviderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown guidance provider {s:?}"))
    }
}
