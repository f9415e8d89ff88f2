//! Trajectory metrics: min-match DTW, episode-counted agent-agent (AA) and
//! agent-obstacle (AO) collisions, and per-metric rank aggregation.
//!
//! A contact episode is a maximal run of steps in contact; it contributes one
//! count. An episode closes after one full contact-free step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{swept_circle_vs_segment, Polygon, Vec2, EPS};
use crate::world::TrajectoryLog;

/// Contacts must penetrate by more than this to count; tangency is not a collision.
pub const CONTACT_TOL: f64 = EPS;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("model {model} has no report for scenario {scenario}")]
    MissingReport { model: String, scenario: String },
    #[error("duplicate report for model {model} on scenario {scenario}")]
    DuplicateReport { model: String, scenario: String },
    #[error("no reports to rank")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenario_id: String,
    pub model_id: String,
    pub dtw: f64,
    pub aa: u64,
    pub ao: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Dtw,
    Aa,
    Ao,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Dtw, Metric::Aa, Metric::Ao];

    pub fn value(&self, r: &MetricReport) -> f64 {
        match self {
            Metric::Dtw => r.dtw,
            Metric::Aa => r.aa as f64,
            Metric::Ao => r.ao as f64,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Dtw => "dtw",
            Metric::Aa => "aa",
            Metric::Ao => "ao",
        })
    }
}

/// Dynamic time warping over Euclidean node distances, every node of both
/// sequences matched at least once, normalized by the expert length.
pub fn dtw_min_match(model: &[Vec2], expert: &[Vec2]) -> f64 {
    assert!(
        !model.is_empty() && !expert.is_empty(),
        "DTW needs non-empty sequences"
    );
    let m = expert.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, p) in model.iter().enumerate() {
        for (j, q) in expert.iter().enumerate() {
            let d = p.distance(*q);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = d + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1] / m as f64
}

/// Mean DTW over agents paired by id. Agents missing from either log are skipped.
pub fn scenario_dtw(model: &TrajectoryLog, expert: &TrajectoryLog) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for e in &expert.agents {
        let Some(m) = model.agents.iter().find(|a| a.agent_id == e.agent_id) else {
            continue;
        };
        if m.records.is_empty() || e.records.is_empty() {
            continue;
        }
        total += dtw_min_match(&m.positions(), &e.positions());
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Whether two discs moving linearly over one step come closer than `combined`.
///
/// Solves `|p_rel + v_rel dt t|² = combined²` for `t` in `[0, 1]`.
pub fn agents_in_contact(
    p_i: Vec2,
    v_i: Vec2,
    p_j: Vec2,
    v_j: Vec2,
    combined: f64,
    dt: f64,
) -> bool {
    let r = combined - CONTACT_TOL;
    let p = p_j - p_i;
    let v = (v_j - v_i) * dt;
    let c = p.norm_sq() - r * r;
    if c < 0.0 {
        return true;
    }
    let a = v.norm_sq();
    let b = p.dot(v);
    if a <= 0.0 || b >= 0.0 {
        return false;
    }
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return false;
    }
    let t = (-b - disc.sqrt()) / a;
    t <= 1.0
}

/// Agent-agent collision count with the episode rule.
pub fn count_aa(log: &TrajectoryLog, radii: &[f64]) -> u64 {
    let n = log.agents.len();
    let last = log.last_step();
    let first = log
        .agents
        .iter()
        .filter_map(|a| a.records.first().map(|r| r.step))
        .min()
        .unwrap_or(0);
    let mut count = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let (ai, aj) = (&log.agents[i], &log.agents[j]);
            let combined = radii[ai.agent_id] + radii[aj.agent_id];
            let mut in_episode = false;
            for step in first..=last {
                let contact = match (ai.record_at(step), aj.record_at(step)) {
                    (Some(ri), Some(rj)) => agents_in_contact(
                        ri.position,
                        ri.velocity,
                        rj.position,
                        rj.velocity,
                        combined,
                        log.dt,
                    ),
                    _ => false,
                };
                if contact && !in_episode {
                    count += 1;
                }
                in_episode = contact;
            }
        }
    }
    count
}

/// Whether the disc sweeping from `p0` to `p1` touches `obstacle` (any edge, or
/// either endpoint inside it).
pub fn obstacle_contact(p0: Vec2, p1: Vec2, radius: f64, obstacle: &Polygon) -> bool {
    if obstacle.contains(p0) || obstacle.contains(p1) {
        return true;
    }
    let r = radius - CONTACT_TOL;
    obstacle
        .edges()
        .any(|e| swept_circle_vs_segment(p0, p1, r, &e).is_some())
}

/// Agent-obstacle collision count, one episode per (agent, obstacle).
pub fn count_ao(log: &TrajectoryLog, obstacles: &[Polygon], radii: &[f64]) -> u64 {
    let mut count = 0;
    for track in &log.agents {
        let radius = radii[track.agent_id];
        let mut in_episode = vec![false; obstacles.len()];
        let mut prev_step: Option<usize> = None;
        for r in &track.records {
            if prev_step.is_some_and(|s| r.step != s + 1) {
                in_episode.iter_mut().for_each(|e| *e = false);
            }
            prev_step = Some(r.step);
            let p1 = r.position + r.velocity * log.dt;
            for (k, o) in obstacles.iter().enumerate() {
                let contact = obstacle_contact(r.position, p1, radius, o);
                if contact && !in_episode[k] {
                    count += 1;
                }
                in_episode[k] = contact;
            }
        }
    }
    count
}

/// Mean ranks of one model (1 = best).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanks {
    pub model_id: String,
    pub dtw: f64,
    pub aa: f64,
    pub ao: f64,
    /// Mean of the three per-metric mean ranks.
    pub overall: f64,
}

impl ModelRanks {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Dtw => self.dtw,
            Metric::Aa => self.aa,
            Metric::Ao => self.ao,
        }
    }
}

/// Per-scenario ascending ranks (ties share their average position), averaged over scenarios.
pub fn rank_models(reports: &[MetricReport]) -> Result<Vec<ModelRanks>, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let models: BTreeSet<&str> = reports.iter().map(|r| r.model_id.as_str()).collect();
    let mut by_scenario: BTreeMap<&str, BTreeMap<&str, &MetricReport>> = BTreeMap::new();
    for r in reports {
        let entry = by_scenario.entry(r.scenario_id.as_str()).or_default();
        if entry.insert(r.model_id.as_str(), r).is_some() {
            return Err(MetricsError::DuplicateReport {
                model: r.model_id.clone(),
                scenario: r.scenario_id.clone(),
            });
        }
    }
    for (scenario, per_model) in &by_scenario {
        if let Some(m) = models.iter().find(|m| !per_model.contains_key(**m)) {
            return Err(MetricsError::MissingReport {
                model: m.to_string(),
                scenario: scenario.to_string(),
            });
        }
    }

    let mut sums: BTreeMap<(&str, Metric), f64> = BTreeMap::new();
    for per_model in by_scenario.values() {
        for metric in Metric::ALL {
            let values: Vec<(&str, f64)> = per_model
                .iter()
                .map(|(m, r)| (*m, metric.value(r)))
                .collect();
            for (m, rank) in tied_ranks(&values) {
                *sums.entry((m, metric)).or_default() += rank;
            }
        }
    }
    let n = by_scenario.len() as f64;
    Ok(models
        .iter()
        .map(|m| {
            let mean = |metric| sums[&(*m, metric)] / n;
            let (dtw, aa, ao) = (mean(Metric::Dtw), mean(Metric::Aa), mean(Metric::Ao));
            ModelRanks {
                model_id: m.to_string(),
                dtw,
                aa,
                ao,
                overall: (dtw + aa + ao) / 3.0,
            }
        })
        .collect())
}

fn tied_ranks<'a>(values: &[(&'a str, f64)]) -> Vec<(&'a str, f64)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].1.total_cmp(&values[b].1));
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]].1 == values[order[i]].1 {
            j += 1;
        }
        // positions i..=j (0-based) share the mean of ranks i+1..=j+1
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out.push((values[k].0, rank));
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{AgentTrack, StepRecord};

    fn line(n: usize, y: f64) -> Vec<Vec2> {
        (0..n).map(|i| Vec2::new(i as f64, y)).collect()
    }

    #[test]
    fn dtw_identity_and_offset() {
        let a = line(7, 0.0);
        assert_eq!(dtw_min_match(&a, &a), 0.0);
        let b = line(7, 0.3);
        assert!((dtw_min_match(&b, &a) - 0.3).abs() < 1e-12);
    }

    fn track(id: usize, pts: &[(f64, f64, f64, f64)]) -> AgentTrack {
        AgentTrack {
            agent_id: id,
            records: pts
                .iter()
                .enumerate()
                .map(|(k, &(x, y, vx, vy))| StepRecord {
                    step: k,
                    position: Vec2::new(x, y),
                    velocity: Vec2::new(vx, vy),
                })
                .collect(),
        }
    }

    #[test]
    fn aa_head_on_one_step() {
        let log = TrajectoryLog {
            scenario_id: "s".into(),
            dt: 1.0,
            agents: vec![
                track(0, &[(0., 0., 1., 0.), (1., 0., 0., 0.)]),
                track(1, &[(2., 0., -1., 0.), (1., 0., 0., 0.)]),
            ],
        };
        // second step is overlapping at rest: same episode
        assert_eq!(count_aa(&log, &[0.5, 0.5]), 1);
    }

    #[test]
    fn aa_short_step_misses() {
        let log = TrajectoryLog {
            scenario_id: "s".into(),
            dt: 0.4,
            agents: vec![
                track(0, &[(0., 0., 1., 0.), (0.4, 0., 0., 0.)]),
                track(1, &[(2., 0., -1., 0.), (1.6, 0., 0., 0.)]),
            ],
        };
        assert_eq!(count_aa(&log, &[0.5, 0.5]), 0);
    }

    #[test]
    fn aa_two_episodes() {
        // contact at step 0, clear at steps 1-2, contact again at step 3
        let a = track(
            0,
            &[(0., 0., 0., 0.), (0., 0., 0., 0.), (0., 0., 0., 0.), (0., 0., 0., 0.)],
        );
        let b = track(
            1,
            &[(0.8, 0., 0., 0.), (3.0, 0., 0., 0.), (3.0, 0., 0., 0.), (0.9, 0., 0., 0.)],
        );
        let log = TrajectoryLog {
            scenario_id: "s".into(),
            dt: 0.1,
            agents: vec![a, b],
        };
        assert_eq!(count_aa(&log, &[0.5, 0.5]), 2);
    }

    #[test]
    fn ranks_with_ties() {
        let r = |s: &str, m: &str, dtw: f64, aa: u64, ao: u64| MetricReport {
            scenario_id: s.into(),
            model_id: m.into(),
            dtw,
            aa,
            ao,
        };
        let reports = vec![
            r("s1", "A", 1.0, 0, 5),
            r("s1", "B", 2.0, 0, 5),
            r("s1", "C", 3.0, 0, 5),
            r("s2", "A", 3.0, 0, 5),
            r("s2", "B", 1.0, 0, 5),
            r("s2", "C", 2.0, 0, 5),
        ];
        let ranks = rank_models(&reports).unwrap();
        let get = |m: &str| ranks.iter().find(|x| x.model_id == m).unwrap().clone();
        assert_eq!(get("A").dtw, 2.0);
        assert_eq!(get("B").dtw, 1.5);
        assert_eq!(get("C").dtw, 2.5);
        for m in ["A", "B", "C"] {
            assert_eq!(get(m).aa, 2.0);
            assert_eq!(get(m).ao, 2.0);
        }
        assert!(matches!(
            rank_models(&reports[..5]),
            Err(MetricsError::MissingReport { .. })
        ));
    }
}
