use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Polygon, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocialForceParams {
    pub relaxation_time: f64,
    pub desired_speed: f64,
    pub repulsion_strength: f64,
    pub repulsion_range: f64,
    pub obstacle_strength: f64,
    pub obstacle_range: f64,
    /// Edges farther than this from the agent exert no force.
    pub obstacle_cutoff: f64,
    pub max_speed: f64,
}

impl Default for SocialForceParams {
    fn default() -> Self {
        SocialForceParams {
            relaxation_time: 0.5,
            desired_speed: 1.34,
            repulsion_strength: 2.0,
            repulsion_range: 0.3,
            obstacle_strength: 4.0,
            obstacle_range: 0.2,
            obstacle_cutoff: 3.0,
            max_speed: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// Goal attraction plus exponential agent and obstacle repulsion (m/s²).
///
/// Coincident agents push along a random unit vector drawn from `rng`.
pub fn social_force_acceleration<R: Rng + ?Sized>(
    me: &Body,
    neighbors: &[Body],
    obstacles: &[Polygon],
    goal_direction: Vec2,
    params: &SocialForceParams,
    rng: &mut R,
) -> Vec2 {
    let desired = goal_direction * params.desired_speed;
    let mut acc = (desired - me.velocity) / params.relaxation_time;

    for other in neighbors {
        let diff = me.position - other.position;
        let d = diff.norm();
        let n = if d > 1e-12 {
            diff / d
        } else {
            Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU))
        };
        let mag = params.repulsion_strength
            * ((me.radius + other.radius - d) / params.repulsion_range).exp();
        acc += n * mag;
    }

    for o in obstacles {
        let inside = o.contains(me.position);
        for e in o.edges() {
            let q = e.closest_point(me.position);
            let diff = me.position - q;
            let d = diff.norm();
            if d > params.obstacle_cutoff || d <= 1e-12 {
                continue;
            }
            let n = if inside { -diff / d } else { diff / d };
            let mag = params.obstacle_strength * ((me.radius - d) / params.obstacle_range).exp();
            acc += n * mag;
        }
    }
    acc
}

/// One explicit Euler velocity update, clamped to `max_speed`.
pub fn social_force_velocity<R: Rng + ?Sized>(
    me: &Body,
    neighbors: &[Body],
    obstacles: &[Polygon],
    goal_direction: Vec2,
    params: &SocialForceParams,
    dt: f64,
    rng: &mut R,
) -> Vec2 {
    let acc = social_force_acceleration(me, neighbors, obstacles, goal_direction, params, rng);
    (me.velocity + acc * dt).clamp_norm(params.max_speed)
}
