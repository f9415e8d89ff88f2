//! Slow, obviously-correct reference implementations shared by the test targets.
#![allow(dead_code)]

use crowdgen_core::learning::Mlp;
use crowdgen_core::world::TrajectoryLog;
use crowdgen_core::{Segment, Vec2};

/// Distance from `p` to segment `s`, minimized over `n + 1` evenly spaced points of `s`.
pub fn point_seg_dense(p: Vec2, s: &Segment, n: usize) -> f64 {
    (0..=n)
        .map(|k| p.distance(s.a.lerp(s.b, k as f64 / n as f64)))
        .fold(f64::INFINITY, f64::min)
}

/// Exact distance to a segment, written out independently of the library:
/// the projection parameter clamped to the segment.
pub fn point_seg_projection(p: Vec2, s: &Segment) -> f64 {
    let (dx, dy) = (s.b.x - s.a.x, s.b.y - s.a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (s.a.x + t * dx, s.a.y + t * dy);
    ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
}

/// Segment distance by sampling `s1` densely against exact projection onto `s2`.
pub fn seg_seg_dense(s1: &Segment, s2: &Segment, n: usize) -> f64 {
    let a = (0..=n)
        .map(|k| point_seg_projection(s1.a.lerp(s1.b, k as f64 / n as f64), s2))
        .fold(f64::INFINITY, f64::min);
    let b = (0..=n)
        .map(|k| point_seg_projection(s2.a.lerp(s2.b, k as f64 / n as f64), s1))
        .fold(f64::INFINITY, f64::min);
    a.min(b)
}

/// First sampled time in `[0, 1]` (spacing `dt`) at which the moving disc
/// touches the segment, plus the smallest clearance seen over the sweep.
pub fn swept_dense(c0: Vec2, c1: Vec2, radius: f64, s: &Segment, dt: f64) -> (Option<f64>, f64) {
    let n = (1.0 / dt).round() as usize;
    let mut first = None;
    let mut min_gap = f64::INFINITY;
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let gap = point_seg_projection(c0.lerp(c1, t), s) - radius;
        min_gap = min_gap.min(gap);
        if first.is_none() && gap <= 0.0 {
            first = Some(t);
        }
    }
    (first, min_gap)
}

/// Agent-agent contact episodes by dense sampling of each step interval.
///
/// Two agents are in contact over a step when both are recorded at it and
/// their linearly moving centers come within `combined - tol` at any sampled
/// instant. Consecutive contact steps form one episode.
pub fn aa_dense(log: &TrajectoryLog, radii: &[f64], samples: usize, tol: f64) -> u64 {
    let first = log
        .agents
        .iter()
        .filter_map(|a| a.records.first().map(|r| r.step))
        .min()
        .unwrap_or(0);
    let last = log
        .agents
        .iter()
        .filter_map(|a| a.records.last().map(|r| r.step))
        .max()
        .unwrap_or(0);
    let mut count = 0;
    for i in 0..log.agents.len() {
        for j in (i + 1)..log.agents.len() {
            let (a, b) = (&log.agents[i], &log.agents[j]);
            let reach = radii[a.agent_id] + radii[b.agent_id] - tol;
            let mut prev = false;
            for step in first..=last {
                let ra = a.records.iter().find(|r| r.step == step);
                let rb = b.records.iter().find(|r| r.step == step);
                let touching = match (ra, rb) {
                    (Some(ra), Some(rb)) => (0..=samples).any(|k| {
                        let t = log.dt * k as f64 / samples as f64;
                        let pa = ra.position + ra.velocity * t;
                        let pb = rb.position + rb.velocity * t;
                        pa.distance(pb) <= reach
                    }),
                    _ => false,
                };
                if touching && !prev {
                    count += 1;
                }
                prev = touching;
            }
        }
    }
    count
}

/// DTW by enumerating every monotone alignment path, normalized by the expert length.
pub fn dtw_exhaustive(model: &[Vec2], expert: &[Vec2]) -> f64 {
    fn walk(i: usize, j: usize, acc: f64, model: &[Vec2], expert: &[Vec2], best: &mut f64) {
        let acc = acc + model[i].distance(expert[j]);
        if i + 1 == model.len() && j + 1 == expert.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < model.len() {
            walk(i + 1, j, acc, model, expert, best);
        }
        if j + 1 < expert.len() {
            walk(i, j + 1, acc, model, expert, best);
        }
        if i + 1 < model.len() && j + 1 < expert.len() {
            walk(i + 1, j + 1, acc, model, expert, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(0, 0, 0.0, model, expert, &mut best);
    best / expert.len() as f64
}

/// Central finite-difference gradient of `f` over the flat parameters of `mlp`.
pub fn fd_gradient(mlp: &Mlp, h: f64, f: impl Fn(&Mlp) -> f64) -> Vec<f64> {
    let theta = mlp.to_flat();
    let mut probe = mlp.clone();
    let mut out = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] = theta[k] + h;
        probe.set_flat(&t);
        let up = f(&probe);
        t[k] = theta[k] - h;
        probe.set_flat(&t);
        let down = f(&probe);
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
