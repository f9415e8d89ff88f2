use std::io::{BufRead, Read, Write};

use ndarray::Array2;

use super::LearningError;
use crate::geometry::Vec2;
use crate::guidance::GuidanceProvider;
use crate::perception::{encode, sense, PerceptionConfig};
use crate::world::{AgentState, Scenario, SimConfig, TrajectoryLog, WorldView};

const BINARY_MAGIC: &[u8; 4] = b"CGSA";
const BINARY_VERSION: u32 = 1;

/// State-action pairs stored row-major in single precision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<f32>,
    pub actions: Vec<f32>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            features: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn push(&mut self, features: &[f64], action: Vec2) {
        assert_eq!(features.len(), self.dim, "feature length");
        self.features.extend(features.iter().map(|&x| x as f32));
        self.actions.push(action.x as f32);
        self.actions.push(action.y as f32);
    }

    pub fn extend(&mut self, other: &Dataset) {
        assert_eq!(other.dim, self.dim, "feature length");
        self.features.extend_from_slice(&other.features);
        self.actions.extend_from_slice(&other.actions);
    }

    pub fn features_of(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn action(&self, i: usize) -> Vec2 {
        Vec2::new(self.actions[2 * i] as f64, self.actions[2 * i + 1] as f64)
    }

    /// Feature and action matrices for the given rows.
    pub fn batch(&self, rows: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let x = Array2::from_shape_fn((rows.len(), self.dim), |(r, c)| {
            self.features[rows[r] * self.dim + c] as f64
        });
        let y = Array2::from_shape_fn((rows.len(), 2), |(r, c)| self.actions[2 * rows[r] + c] as f64);
        (x, y)
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut out = Dataset::new(self.dim);
        for &r in rows {
            out.features.extend_from_slice(self.features_of(r));
            out.actions.extend_from_slice(&self.actions[2 * r..2 * r + 2]);
        }
        out
    }

    /// CSV with header `f0,...,f{dim-1},ax,ay`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.dim)
            .map(|i| format!("f{i}"))
            .chain(["ax".to_string(), "ay".to_string()])
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut line = String::new();
            for x in self.features_of(i) {
                line.push_str(&x.to_string());
                line.push(',');
            }
            line.push_str(&format!("{},{}", self.actions[2 * i], self.actions[2 * i + 1]));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Dataset, LearningError> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l?,
            None => return Err(LearningError::MalformedData("empty file".into())),
        };
        let cols = header.split(',').count();
        if cols < 3 {
            return Err(LearningError::MalformedData("header too short".into()));
        }
        let mut ds = Dataset::new(cols - 2);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Result<Vec<f32>, _> = line.split(',').map(|v| v.trim().parse::<f32>()).collect();
            let vals = vals.map_err(|e| LearningError::MalformedData(format!("line {}: {e}", i + 1)))?;
            if vals.len() != cols {
                return Err(LearningError::MalformedData(format!(
                    "line {}: {} columns, expected {cols}",
                    i + 1,
                    vals.len()
                )));
            }
            ds.features.extend_from_slice(&vals[..cols - 2]);
            ds.actions.extend_from_slice(&vals[cols - 2..]);
        }
        Ok(ds)
    }

    /// Little-endian binary: magic, version, rows, dim, then rows of f32 features and action.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity((self.dim + 2) * 4);
        for i in 0..self.len() {
            buf.clear();
            for x in self.features_of(i).iter().chain(&self.actions[2 * i..2 * i + 2]) {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Dataset, LearningError> {
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[..4] != BINARY_MAGIC {
            return Err(LearningError::MalformedData("bad magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != BINARY_VERSION {
            return Err(LearningError::MalformedData(format!("unsupported version {version}")));
        }
        let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
        let mut ds = Dataset::new(dim);
        ds.features.reserve(rows * dim);
        let mut row = vec![0u8; (dim + 2) * 4];
        for _ in 0..rows {
            r.read_exact(&mut row)?;
            let vals: Vec<f32> = row
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            ds.features.extend_from_slice(&vals[..dim]);
            ds.actions.extend_from_slice(&vals[dim..]);
        }
        Ok(ds)
    }
}

/// World snapshot at `step` rebuilt from a log.
///
/// Agents whose track has ended are marked arrived. Velocities are those
/// applied over the previous step.
pub fn replay_states(scenario: &Scenario, log: &TrajectoryLog, step: usize) -> Vec<AgentState> {
    scenario
        .tasks
        .iter()
        .enumerate()
        .map(|(i, task)| {
            let Some(track) = log.agents.iter().find(|a| a.agent_id == i) else {
                return AgentState {
                    position: task.goal,
                    velocity: Vec2::ZERO,
                    arrived: true,
                    arrival_step: Some(0),
                };
            };
            let last = track.records.last();
            match track.record_at(step) {
                Some(r) if last.map(|l| l.step) != Some(step) => AgentState {
                    position: r.position,
                    velocity: step
                        .checked_sub(1)
                        .and_then(|s| track.record_at(s))
                        .map(|p| p.velocity)
                        .unwrap_or(Vec2::ZERO),
                    arrived: false,
                    arrival_step: None,
                },
                _ => AgentState {
                    position: last.map(|l| l.position).unwrap_or(task.goal),
                    velocity: Vec2::ZERO,
                    arrived: true,
                    arrival_step: last.map(|l| l.step),
                },
            }
        })
        .collect()
}

/// Observation features and applied velocity for every decision in `log`
/// accepted by `keep(agent, step)`.
pub fn expert_pairs(
    scenario: &Scenario,
    log: &TrajectoryLog,
    provider: &dyn GuidanceProvider,
    perception: &PerceptionConfig,
    sim: &SimConfig,
    mut keep: impl FnMut(usize, usize) -> bool,
) -> Result<Dataset, LearningError> {
    let mut ds = Dataset::new(crate::perception::FEATURE_LEN);
    let last = log.last_step();
    for step in 0..last {
        let wanted: Vec<(usize, Vec2)> = log
            .agents
            .iter()
            .filter_map(|a| {
                let r = a.record_at(step)?;
                let is_last = a.records.last().map(|l| l.step) == Some(step);
                (!is_last && keep(a.agent_id, step)).then_some((a.agent_id, r.velocity))
            })
            .collect();
        if wanted.is_empty() {
            continue;
        }
        let states = replay_states(scenario, log, step);
        let view = WorldView {
            scenario,
            states: &states,
            step,
            config: sim,
        };
        for (agent, action) in wanted {
            let obs = sense(&view, agent, provider, perception)?;
            ds.push(&encode(&obs, perception), action);
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let mut ds = Dataset::new(3);
        ds.push(&[0.5, -0.25, 1.0], Vec2::new(0.1, -1.5));
        ds.push(&[0.0, 0.75, -1.0], Vec2::new(1.25, 0.0));
        ds
    }

    #[test]
    fn csv_round_trip() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,f2,ax,ay\n"));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn binary_round_trip() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 20 + 2 * 5 * 4);
        assert_eq!(Dataset::read_binary(&buf[..]).unwrap(), ds);
        buf[0] = b'X';
        assert!(Dataset::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn batch_rows() {
        let ds = sample();
        let (x, y) = ds.batch(&[1]);
        assert_eq!(x.row(0).to_vec(), vec![0.0, 0.75, -1.0]);
        assert_eq!(y.row(0).to_vec(), vec![1.25, 0.0]);
    }
}
