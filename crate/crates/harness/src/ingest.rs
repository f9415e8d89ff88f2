//! Real trajectory ingestion: timestamped tracks split into sliding windows,
//! each window becoming a scenario with its expert log.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crowdgen_core::world::{AgentTask, AgentTrack, DomainTag, Scenario, StepRecord, TrajectoryLog};
use crowdgen_core::Vec2;
use thiserror::Error;

pub const TIMED_CSV_HEADER: &str = "scenario_id,agent_id,time,x,y,vx,vy";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("invalid ingest parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    World(#[from] crowdgen_core::world::WorldError),
}

/// One timestamped sample of a tracked pedestrian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub time: f64,
    pub position: Vec2,
}

/// Tracks by agent id, each sorted by time. Velocity columns are ignored.
pub fn read_timed_csv<R: BufRead>(r: R) -> Result<BTreeMap<usize, Vec<TimedSample>>, IngestError> {
    let mut tracks: BTreeMap<usize, Vec<TimedSample>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if (i == 0 && line.trim() == TIMED_CSV_HEADER) || line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| IngestError::MalformedRow {
            line: lineno,
            reason,
        };
        let c: Vec<&str> = line.split(',').map(str::trim).collect();
        if c.len() != 7 {
            return Err(bad(format!("expected 7 columns, found {}", c.len())));
        }
        let agent: usize = c[1].parse().map_err(|e| bad(format!("agent id {:?}: {e}", c[1])))?;
        let num = |s: &str| -> Result<f64, IngestError> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(bad(format!("{s:?} is not finite"))),
                Err(e) => Err(bad(format!("{s:?}: {e}"))),
            }
        };
        let sample = TimedSample {
            time: num(c[2])?,
            position: Vec2::new(num(c[3])?, num(c[4])?),
        };
        tracks.entry(agent).or_default().push(sample);
    }
    for (agent, t) in tracks.iter_mut() {
        t.sort_by(|a, b| a.time.total_cmp(&b.time));
        if t.windows(2).any(|w| w[0].time == w[1].time) {
            return Err(IngestError::InvalidParams(format!(
                "agent {agent} has two samples at the same time"
            )));
        }
    }
    Ok(tracks)
}

/// Writes a simulated log with `time = t0 + step * dt`.
pub fn write_timed_csv<W: Write>(log: &TrajectoryLog, t0: f64, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TIMED_CSV_HEADER}")?;
    for a in &log.agents {
        for r in &a.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                log.scenario_id,
                a.agent_id,
                t0 + r.step as f64 * log.dt,
                r.position.x,
                r.position.y,
                r.velocity.x,
                r.velocity.y
            )?;
        }
    }
    Ok(())
}

/// Window start times (relative to the first sample) for a log spanning `duration` seconds.
pub fn window_starts(duration: f64, window: f64, stride: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let start = k as f64 * stride;
        if start + window > duration + 1e-9 {
            break;
        }
        out.push(start);
        k += 1;
    }
    out
}

fn interpolate(track: &[TimedSample], t: f64) -> Vec2 {
    let k = track.partition_point(|s| s.time < t);
    if k == 0 {
        return track[0].position;
    }
    if k == track.len() {
        return track[k - 1].position;
    }
    let (a, b) = (track[k - 1], track[k]);
    if b.time == t {
        return b.position;
    }
    let u = (t - a.time) / (b.time - a.time);
    a.position + (b.position - a.position) * u
}

/// Splits tracks into `window`-second windows every `stride` seconds and
/// resamples each to `dt`.
///
/// Every agent seen inside a window joins it, including late arrivals and
/// early exits; its task runs from its first to its last in-window position.
/// Agents starting or ending inside an obstacle of `base` are dropped.
/// Windows left without agents are skipped with a warning.
pub fn split_windows(
    tracks: &BTreeMap<usize, Vec<TimedSample>>,
    base: &Scenario,
    window: f64,
    stride: f64,
    dt: f64,
) -> Result<Vec<(Scenario, TrajectoryLog)>, IngestError> {
    if !(window > 0.0 && stride > 0.0 && dt > 0.0) {
        return Err(IngestError::InvalidParams(
            "window, stride and dt must be positive".into(),
        ));
    }
    let t0 = tracks
        .values()
        .filter_map(|t| t.first())
        .map(|s| s.time)
        .fold(f64::INFINITY, f64::min);
    let t1 = tracks
        .values()
        .filter_map(|t| t.last())
        .map(|s| s.time)
        .fold(f64::NEG_INFINITY, f64::max);
    if !t0.is_finite() {
        return Ok(Vec::new());
    }
    let grid = (window / dt + 1e-9).floor() as usize;
    let mut out = Vec::new();
    for (k, rel) in window_starts(t1 - t0, window, stride).into_iter().enumerate() {
        let ws = t0 + rel;
        let we = ws + window;
        let id = format!("{}-w{k}", base.id);
        let mut tasks = Vec::new();
        let mut agents = Vec::new();
        for track in tracks.values() {
            let inside: Vec<&TimedSample> = track
                .iter()
                .filter(|s| s.time >= ws - 1e-9 && s.time <= we + 1e-9)
                .collect();
            let (Some(first), Some(last)) = (inside.first(), inside.last()) else {
                continue;
            };
            let j0 = ((first.time - ws) / dt - 1e-9).ceil().max(0.0) as usize;
            let j1 = (((last.time - ws) / dt + 1e-9).floor() as usize).min(grid);
            if j1 <= j0 {
                continue;
            }
            let positions: Vec<Vec2> = (j0..=j1)
                .map(|j| interpolate(track, ws + j as f64 * dt))
                .collect();
            let (start, goal) = (positions[0], *positions.last().unwrap());
            if base
                .obstacles
                .iter()
                .any(|o| o.contains(start) || o.contains(goal))
            {
                continue;
            }
            let records = positions
                .iter()
                .enumerate()
                .map(|(n, &p)| StepRecord {
                    step: j0 + n,
                    position: p,
                    velocity: positions
                        .get(n + 1)
                        .map(|&q| (q - p) / dt)
                        .unwrap_or(Vec2::ZERO),
                })
                .collect();
            agents.push(AgentTrack {
                agent_id: agents.len(),
                records,
            });
            tasks.push(AgentTask::new(start, goal));
        }
        if tasks.is_empty() {
            log::warn!("window {id} has no usable agents; skipped");
            continue;
        }
        let mut layout = serde_json::Map::new();
        layout.insert("source".into(), base.id.clone().into());
        layout.insert("window_start".into(), ws.into());
        layout.insert("window_length".into(), window.into());
        let scenario = Scenario {
            id: id.clone(),
            bounds: base.bounds,
            obstacles: base.obstacles.clone(),
            tasks,
            domain_tag: DomainTag::Real,
            expert: None,
            layout,
        };
        let log = TrajectoryLog {
            scenario_id: id,
            dt,
            agents,
        };
        out.push((scenario, log));
    }
    Ok(out)
}

/// Reads a timestamped CSV and an obstacle scenario JSON, then splits.
pub fn ingest_trajectories(
    csv_path: &Path,
    scenario_path: &Path,
    window: f64,
    stride: f64,
    dt: f64,
) -> Result<Vec<(Scenario, TrajectoryLog)>, IngestError> {
    let base = Scenario::from_json(&std::fs::read_to_string(scenario_path)?)?;
    let file = std::fs::File::open(csv_path)?;
    let tracks = read_timed_csv(std::io::BufReader::new(file))?;
    split_windows(&tracks, &base, window, stride, dt)
}

/// `<id>.json` + `<id>.csv` per window.
pub fn write_windows(dir: &Path, windows: &[(Scenario, TrajectoryLog)]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (s, log) in windows {
        std::fs::write(dir.join(format!("{}.json", s.id)), s.to_json()?)?;
        let mut buf = Vec::new();
        log.write_csv(&mut buf, true)?;
        std::fs::write(dir.join(format!("{}.csv", s.id)), buf)?;
    }
    Ok(())
}

/// Windows written by [`write_windows`], sorted by file name.
pub fn read_windows(dir: &Path, dt: f64) -> anyhow::Result<Vec<(Scenario, TrajectoryLog)>> {
    let mut jsons: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    jsons.sort();
    let mut out = Vec::new();
    for p in jsons {
        let scenario = Scenario::from_json(&std::fs::read_to_string(&p)?)?;
        let csv = p.with_extension("csv");
        let file = std::fs::File::open(&csv)
            .map_err(|e| anyhow::anyhow!("{}: {e}", csv.display()))?;
        let log = TrajectoryLog::read_csv(std::io::BufReader::new(file), dt)?
            .into_iter()
            .find(|l| l.scenario_id == scenario.id)
            .ok_or_else(|| anyhow::anyhow!("{} has no rows for {}", csv.display(), scenario.id))?;
        out.push((scenario, log));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_minutes_four_windows() {
        assert_eq!(window_starts(600.0, 240.0, 120.0), vec![0.0, 120.0, 240.0, 360.0]);
        assert!(window_starts(100.0, 240.0, 120.0).is_empty());
    }

    #[test]
    fn interpolation_is_linear() {
        let t = [
            TimedSample {
                time: 0.0,
                position: Vec2::new(0.0, 0.0),
            },
            TimedSample {
                time: 2.0,
                position: Vec2::new(4.0, 2.0),
            },
        ];
        assert_eq!(interpolate(&t, 0.5), Vec2::new(1.0, 0.5));
        assert_eq!(interpolate(&t, 3.0), Vec2::new(4.0, 2.0));
    }

    #[test]
    fn bad_row_reports_line() {
        let csv = format!("{TIMED_CSV_HEADER}\na,0,0.0,1,2,0,0\na,zero,0.1,1,2,0,0\n");
        match read_timed_csv(csv.as_bytes()) {
            Err(IngestError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
