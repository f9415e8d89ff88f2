use serde::{Deserialize, Serialize};

use super::lp::{safest_velocity, solve_lp2d, HalfPlane};
use crate::geometry::{Polygon, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrcaParams {
    pub time_horizon: f64,
    pub time_horizon_obstacles: f64,
    pub neighbor_radius: f64,
    pub max_speed: f64,
    /// Share of the avoidance each agent takes on.
    pub responsibility: f64,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams {
            time_horizon: 2.0,
            time_horizon_obstacles: 1.0,
            neighbor_radius: 10.0,
            max_speed: 1.5,
            responsibility: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrcaAgent {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// One half-plane per neighbor in range.
pub fn agent_constraints(
    me: &OrcaAgent,
    neighbors: &[OrcaAgent],
    params: &OrcaParams,
    dt: f64,
) -> Vec<HalfPlane> {
    let inv_tau = 1.0 / params.time_horizon;
    let mut lines = Vec::with_capacity(neighbors.len());
    for other in neighbors {
        let rel_pos = other.position - me.position;
        if rel_pos.norm() > params.neighbor_radius {
            continue;
        }
        let rel_vel = me.velocity - other.velocity;
        let dist_sq = rel_pos.norm_sq();
        let combined = me.radius + other.radius;
        let combined_sq = combined * combined;

        let (direction, u) = if dist_sq > combined_sq {
            let w = rel_vel - rel_pos * inv_tau;
            let w_len_sq = w.norm_sq();
            let dot1 = w.dot(rel_pos);
            if dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq {
                // closest to the cut-off circle
                let w_len = w_len_sq.sqrt();
                let unit_w = w / w_len;
                (
                    Vec2::new(unit_w.y, -unit_w.x),
                    unit_w * (combined * inv_tau - w_len),
                )
            } else {
                // closest to one of the cone legs
                let leg = (dist_sq - combined_sq).sqrt();
                let direction = if rel_pos.cross(w) > 0.0 {
                    Vec2::new(
                        rel_pos.x * leg - rel_pos.y * combined,
                        rel_pos.x * combined + rel_pos.y * leg,
                    ) / dist_sq
                } else {
                    -Vec2::new(
                        rel_pos.x * leg + rel_pos.y * combined,
                        -rel_pos.x * combined + rel_pos.y * leg,
                    ) / dist_sq
                };
                let dot2 = rel_vel.dot(direction);
                (direction, direction * dot2 - rel_vel)
            }
        } else {
            // already overlapping: resolve within one step
            let inv_dt = 1.0 / dt;
            let w = rel_vel - rel_pos * inv_dt;
            let w_len = w.norm();
            let unit_w = if w_len > 0.0 { w / w_len } else { Vec2::new(1.0, 0.0) };
            (
                Vec2::new(unit_w.y, -unit_w.x),
                unit_w * (combined * inv_dt - w_len),
            )
        };
        lines.push(HalfPlane {
            point: me.velocity + u * params.responsibility,
            direction,
        });
    }
    lines
}

/// Half-planes keeping the agent from reaching the nearest point of each
/// nearby obstacle edge within the obstacle horizon.
pub fn obstacle_constraints(me: &OrcaAgent, obstacles: &[Polygon], params: &OrcaParams) -> Vec<HalfPlane> {
    let reach = params.max_speed * params.time_horizon_obstacles + me.radius;
    let mut lines = Vec::new();
    for o in obstacles {
        let inside = o.contains(me.position);
        for e in o.edges() {
            let q = e.closest_point(me.position);
            let away = me.position - q;
            let d = away.norm();
            if d > reach || d <= 1e-12 {
                continue;
            }
            let n = if inside { -away / d } else { away / d };
            let gap = if inside { 0.0 } else { d - me.radius };
            let offset = if gap > 0.0 {
                -gap / params.time_horizon_obstacles
            } else {
                0.0
            };
            lines.push(HalfPlane::from_normal(n, offset));
        }
    }
    lines
}

/// ORCA velocity: nearest feasible point to `preferred`, or the least-violating
/// velocity when the half-planes do not intersect inside the speed disc.
pub fn orca_velocity(
    me: &OrcaAgent,
    neighbors: &[OrcaAgent],
    obstacles: &[Polygon],
    preferred: Vec2,
    params: &OrcaParams,
    dt: f64,
) -> Vec2 {
    let mut lines = obstacle_constraints(me, obstacles, params);
    let hard = lines.len();
    lines.extend(agent_constraints(me, neighbors, params, dt));
    match solve_lp2d(&lines, preferred, params.max_speed) {
        Ok(v) => v,
        Err(inf) => safest_velocity(&lines, hard, inf.failed_at, params.max_speed, inf.partial),
    }
}
