//! Egocentric observation: 360 one-degree range and radial-velocity bins plus
//! local and global guidance velocities.
//!
//! Bins are world-aligned: bin `k` looks along heading `k` degrees. Radial
//! velocity is the hit entity's velocity relative to the observer, projected
//! on the ray; positive means receding. Arrived agents are not visible.

use serde::{Deserialize, Serialize};

use crate::geometry::{ray_circle, ray_segment, Circle, Polygon, Segment, Vec2};
use crate::guidance::{global_guidance, GuidanceError, GuidanceProvider};
use crate::world::WorldView;

pub const BINS: usize = 360;
/// Length of [`encode`]'s output.
pub const FEATURE_LEN: usize = 2 * BINS + 4;
/// Bumped whenever the feature layout changes.
pub const FEATURE_LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionConfig {
    pub max_range: f64,
    pub max_speed: f64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            max_range: 10.0,
            max_speed: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub range_map: Vec<f64>,
    pub radial_velocity_map: Vec<f64>,
    pub local_guidance: Vec2,
    pub global_guidance: Vec2,
}

/// Precomputed unit directions for the bins.
fn ray_dirs() -> &'static [Vec2; BINS] {
    use std::sync::OnceLock;
    static DIRS: OnceLock<[Vec2; BINS]> = OnceLock::new();
    DIRS.get_or_init(|| {
        std::array::from_fn(|k| Vec2::from_angle((k as f64).to_radians()))
    })
}

/// Bins whose heading lies in the angular interval `[lo, hi]` (radians),
/// padded so boundary rays are always included.
fn bins_between(lo: f64, hi: f64) -> std::ops::Range<usize> {
    const PAD_DEG: f64 = 1e-6;
    let a = (lo.to_degrees() - PAD_DEG).ceil() as i64;
    let b = (hi.to_degrees() + PAD_DEG).floor() as i64;
    if b < a {
        return 0..0;
    }
    (a.rem_euclid(BINS as i64) as usize)..(a.rem_euclid(BINS as i64) as usize + (b - a + 1) as usize)
}

/// Candidate bins for rays that may hit `e`; all bins when `origin` is on it.
fn edge_bins(origin: Vec2, e: &Segment) -> impl Iterator<Item = usize> {
    let (pa, pb) = (e.a - origin, e.b - origin);
    let range = if crate::geometry::point_seg_distance(origin, e) < 1e-9 {
        0..BINS
    } else {
        let ta = pa.y.atan2(pa.x);
        let mut delta = pb.y.atan2(pb.x) - ta;
        if delta > std::f64::consts::PI {
            delta -= std::f64::consts::TAU;
        } else if delta < -std::f64::consts::PI {
            delta += std::f64::consts::TAU;
        }
        bins_between(ta.min(ta + delta), ta.max(ta + delta))
    };
    range.map(|k| k % BINS)
}

fn disc_bins(origin: Vec2, c: &Circle) -> impl Iterator<Item = usize> {
    let rel = c.center - origin;
    let d = rel.norm();
    let range = if d <= c.radius {
        0..BINS
    } else {
        let mid = rel.y.atan2(rel.x);
        let half = (c.radius / d).asin();
        bins_between(mid - half, mid + half)
    };
    range.map(|k| k % BINS)
}

/// A moving disc visible to the observer.
#[derive(Debug, Clone, Copy)]
pub struct VisibleDisc {
    pub disc: Circle,
    pub velocity: Vec2,
}

/// Casts all bins from `origin` against obstacles and discs.
///
/// Obstacles and discs entirely beyond `max_range` are culled before casting.
/// An origin inside a polygon sees that polygon at distance 0 in every bin.
#[allow(clippy::too_many_arguments)]
pub fn scan(
    origin: Vec2,
    own_velocity: Vec2,
    obstacles: &[Polygon],
    discs: &[VisibleDisc],
    local_guidance: Vec2,
    global: Vec2,
    config: &PerceptionConfig,
) -> Observation {
    let max_range = config.max_range;
    let mut range_map = vec![max_range; BINS];
    let mut radial_velocity_map = vec![0.0; BINS];
    let dirs = ray_dirs();

    if obstacles.iter().any(|o| o.contains(origin)) {
        for (k, d) in dirs.iter().enumerate() {
            range_map[k] = 0.0;
            radial_velocity_map[k] = (-own_velocity).dot(*d);
        }
        return Observation {
            range_map,
            radial_velocity_map,
            local_guidance,
            global_guidance: global,
        };
    }

    let edges: Vec<Segment> = obstacles
        .iter()
        .flat_map(|o| o.edges())
        .filter(|e| crate::geometry::point_seg_distance(origin, e) < max_range)
        .collect();
    let near: Vec<&VisibleDisc> = discs
        .iter()
        .filter(|d| d.disc.center.distance(origin) - d.disc.radius < max_range)
        .collect();

    let mut hit: [Option<Vec2>; BINS] = [None; BINS];
    for e in &edges {
        for k in edge_bins(origin, e) {
            if let Some(t) = ray_segment(origin, dirs[k], e) {
                if t < range_map[k] {
                    range_map[k] = t;
                    hit[k] = Some(Vec2::ZERO);
                }
            }
        }
    }
    for d in &near {
        for k in disc_bins(origin, &d.disc) {
            if let Some(t) = ray_circle(origin, dirs[k], &d.disc) {
                if t < range_map[k] {
                    range_map[k] = t;
                    hit[k] = Some(d.velocity);
                }
            }
        }
    }
    for (k, h) in hit.iter().enumerate() {
        if let Some(v) = h {
            radial_velocity_map[k] = (*v - own_velocity).dot(dirs[k]);
        }
    }
    Observation {
        range_map,
        radial_velocity_map,
        local_guidance,
        global_guidance: global,
    }
}

/// Observation of `agent` from the snapshot, with local guidance from `provider`.
pub fn sense(
    view: &WorldView<'_>,
    agent: usize,
    provider: &dyn GuidanceProvider,
    config: &PerceptionConfig,
) -> Result<Observation, GuidanceError> {
    let local = provider.local_guidance(view, agent)?;
    Ok(sense_with_guidance(view, agent, local, config))
}

/// Observation of `agent` with an explicitly supplied local guidance velocity.
pub fn sense_with_guidance(
    view: &WorldView<'_>,
    agent: usize,
    local_guidance: Vec2,
    config: &PerceptionConfig,
) -> Observation {
    let me = &view.states[agent];
    let discs: Vec<VisibleDisc> = view
        .neighbor_discs(agent)
        .into_iter()
        .map(|(j, disc)| VisibleDisc {
            disc,
            velocity: view.states[j].velocity,
        })
        .collect();
    let global = global_guidance(me.position, view.task(agent).goal, config.max_speed);
    scan(
        me.position,
        me.velocity,
        &view.scenario.obstacles,
        &discs,
        local_guidance.clamp_norm(config.max_speed),
        global,
        config,
    )
}

/// Fixed-layout feature vector: normalized ranges, normalized radial
/// velocities, then local and global guidance over `max_speed`.
pub fn encode(obs: &Observation, config: &PerceptionConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_LEN);
    encode_into(obs, config, &mut out);
    out
}

pub fn encode_into(obs: &Observation, config: &PerceptionConfig, out: &mut Vec<f64>) {
    out.clear();
    out.extend(obs.range_map.iter().map(|r| r / config.max_range));
    let vscale = 2.0 * config.max_speed;
    out.extend(
        obs.radial_velocity_map
            .iter()
            .map(|v| (v / vscale).clamp(-1.0, 1.0)),
    );
    for g in [obs.local_guidance, obs.global_guidance] {
        out.push(g.x / config.max_speed);
        out.push(g.y / config.max_speed);
    }
}

/// Inverse of [`encode`].
pub fn decode(features: &[f64], config: &PerceptionConfig) -> Option<Observation> {
    if features.len() != FEATURE_LEN {
        return None;
    }
    let vscale = 2.0 * config.max_speed;
    let g = &features[2 * BINS..];
    Some(Observation {
        range_map: features[..BINS].iter().map(|r| r * config.max_range).collect(),
        radial_velocity_map: features[BINS..2 * BINS].iter().map(|v| v * vscale).collect(),
        local_guidance: Vec2::new(g[0], g[1]) * config.max_speed,
        global_guidance: Vec2::new(g[2], g[3]) * config.max_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_world_is_clear() {
        let cfg = PerceptionConfig::default();
        let o = scan(Vec2::ZERO, Vec2::new(1.0, 0.0), &[], &[], Vec2::ZERO, Vec2::ZERO, &cfg);
        assert!(o.range_map.iter().all(|&r| r == cfg.max_range));
        assert!(o.radial_velocity_map.iter().all(|&v| v == 0.0));
        let f = encode(&o, &cfg);
        assert_eq!(f.len(), FEATURE_LEN);
        assert!(f[..BINS].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn neighbor_disc_in_bin_zero() {
        let cfg = PerceptionConfig::default();
        let d = VisibleDisc {
            disc: Circle {
                center: Vec2::new(3.0, 0.0),
                radius: 0.5,
            },
            velocity: Vec2::ZERO,
        };
        let o = scan(Vec2::ZERO, Vec2::ZERO, &[], &[d], Vec2::ZERO, Vec2::ZERO, &cfg);
        assert!((o.range_map[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn approaching_wall_is_negative() {
        let cfg = PerceptionConfig::default();
        let wall = Polygon::rect(Vec2::new(4.0, -20.0), Vec2::new(5.0, 20.0));
        let o = scan(
            Vec2::ZERO,
            Vec2::new(1.0, 0.0),
            &[wall],
            &[],
            Vec2::ZERO,
            Vec2::ZERO,
            &cfg,
        );
        assert!((o.radial_velocity_map[0] + 1.0).abs() < 1e-12);
        // bin 60 still hits the wall: closing speed is the projection cos(60 deg)
        assert!((o.radial_velocity_map[60] + 0.5).abs() < 1e-12);
        // bin 180 looks away and sees nothing
        assert_eq!(o.radial_velocity_map[180], 0.0);
    }
}
