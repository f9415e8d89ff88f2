//! Scenario data model, trajectory logs and the synchronous step loop.

use std::fmt;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Circle, Polygon, Vec2};

pub const DEFAULT_AGENT_RADIUS: f64 = 0.5;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("{states} agent states but {commands} commands")]
    DimensionMismatch { states: usize, commands: usize },
    #[error("agent {agent} at step {step}: {source}")]
    Decision {
        agent: usize,
        step: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("invalid scenario {id}: {reason}")]
    InvalidScenario { id: String, reason: String },
    #[error("malformed trajectory row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTask {
    pub start: Vec2,
    pub goal: Vec2,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    DEFAULT_AGENT_RADIUS
}

impl AgentTask {
    pub fn new(start: Vec2, goal: Vec2) -> Self {
        AgentTask {
            start,
            goal,
            radius: DEFAULT_AGENT_RADIUS,
        }
    }
}

/// Axis-aligned rectangle, serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl From<[f64; 4]> for Bounds {
    fn from(b: [f64; 4]) -> Self {
        Bounds {
            min: Vec2::new(b[0], b[1]),
            max: Vec2::new(b[2], b[3]),
        }
    }
}

impl From<Bounds> for [f64; 4] {
    fn from(b: Bounds) -> Self {
        [b.min.x, b.min.y, b.max.x, b.max.y]
    }
}

impl Bounds {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        [xmin, ymin, xmax, ymax].into()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainTag {
    X,
    G,
    #[serde(rename = "R-derived")]
    RDerived,
    #[serde(rename = "real")]
    Real,
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainTag::X => "X",
            DomainTag::G => "G",
            DomainTag::RDerived => "R-derived",
            DomainTag::Real => "real",
        })
    }
}

/// Obstacle layout plus every agent's task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub bounds: Bounds,
    pub obstacles: Vec<Polygon>,
    pub tasks: Vec<AgentTask>,
    pub domain_tag: DomainTag,
    /// Name of the expert controller that generates this scenario's reference trajectories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expert: Option<String>,
    /// Free-form layout parameters (room size, doorway width, ...).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub layout: serde_json::Map<String, serde_json::Value>,
}

impl Scenario {
    /// Checks the structural invariants: obstacles inside bounds, free-space
    /// starts and goals, non-overlapping start discs.
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |reason: String| WorldError::InvalidScenario {
            id: self.id.clone(),
            reason,
        };
        if self.tasks.is_empty() {
            return Err(bad("no agent tasks".into()));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.vertices().iter().any(|v| !self.bounds.contains(*v)) {
                return Err(bad(format!("obstacle {i} leaves the bounds")));
            }
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if !(t.radius > 0.0) {
                return Err(bad(format!("agent {i} has radius {}", t.radius)));
            }
            if !t.start.is_finite() || !t.goal.is_finite() {
                return Err(bad(format!("agent {i} has a non-finite task")));
            }
            for (k, o) in self.obstacles.iter().enumerate() {
                if o.contains(t.start) || o.contains(t.goal) {
                    return Err(bad(format!("agent {i} start or goal inside obstacle {k}")));
                }
            }
        }
        for i in 0..self.tasks.len() {
            for j in (i + 1)..self.tasks.len() {
                let (a, b) = (&self.tasks[i], &self.tasks[j]);
                if a.start.distance(b.start) < a.radius + b.radius {
                    return Err(bad(format!("agents {i} and {j} start overlapping")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, WorldError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, WorldError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn initial_states(&self, config: &SimConfig) -> Vec<AgentState> {
        self.tasks
            .iter()
            .map(|t| {
                let arrived = t.start.distance(t.goal) <= config.arrival_tolerance;
                AgentState {
                    position: t.start,
                    velocity: Vec2::ZERO,
                    arrived,
                    arrival_step: arrived.then_some(0),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub arrived: bool,
    pub arrival_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub max_speed: f64,
    pub arrival_tolerance: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            max_steps: 500,
            max_speed: 1.5,
            arrival_tolerance: 0.5,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn for_domain(tag: DomainTag) -> Self {
        let max_steps = match tag {
            DomainTag::X => 500,
            _ => 300,
        };
        SimConfig {
            max_steps,
            ..SimConfig::default()
        }
    }
}

/// Deterministic per-(seed, agent, step) RNG, so the draw an agent receives
/// does not depend on the order agents are evaluated in.
pub fn step_rng(seed: u64, agent: usize, step: usize) -> ChaCha8Rng {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [agent as u64, step as u64] {
        h = splitmix(h ^ v.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    }
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Immutable time-t snapshot handed to controllers.
#[derive(Clone, Copy)]
pub struct WorldView<'a> {
    pub scenario: &'a Scenario,
    pub states: &'a [AgentState],
    pub step: usize,
    pub config: &'a SimConfig,
}

impl<'a> WorldView<'a> {
    pub fn task(&self, agent: usize) -> &'a AgentTask {
        &self.scenario.tasks[agent]
    }

    /// Discs of every other non-arrived agent, paired with their indices.
    pub fn neighbor_discs(&self, agent: usize) -> Vec<(usize, Circle)> {
        self.states
            .iter()
            .enumerate()
            .filter(|(j, s)| *j != agent && !s.arrived)
            .map(|(j, s)| {
                (
                    j,
                    Circle {
                        center: s.position,
                        radius: self.scenario.tasks[j].radius,
                    },
                )
            })
            .collect()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }
}

/// Decision function for every agent of a simulation.
pub trait Controller {
    fn decide(&mut self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, BoxError>;

    /// Decides for all `agents` from the same snapshot. Override to batch.
    fn decide_all(
        &mut self,
        view: &WorldView<'_>,
        agents: &[usize],
    ) -> Result<Vec<Vec2>, WorldError> {
        agents
            .iter()
            .map(|&a| {
                self.decide(view, a).map_err(|source| WorldError::Decision {
                    agent: a,
                    step: view.step,
                    source,
                })
            })
            .collect()
    }
}

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// Advances all non-arrived agents by one step. Commands for arrived agents are ignored.
pub fn step_world(
    scenario: &Scenario,
    states: &[AgentState],
    commands: &[Vec2],
    config: &SimConfig,
    step: usize,
) -> Result<Vec<AgentState>, WorldError> {
    if states.len() != commands.len() || states.len() != scenario.tasks.len() {
        return Err(WorldError::DimensionMismatch {
            states: states.len(),
            commands: commands.len(),
        });
    }
    Ok(states
        .iter()
        .zip(commands)
        .zip(&scenario.tasks)
        .map(|((s, &cmd), task)| {
            if s.arrived {
                return AgentState {
                    velocity: Vec2::ZERO,
                    ..*s
                };
            }
            let v = cmd.clamp_norm(config.max_speed);
            let position = s.position + v * config.dt;
            let arrived = position.distance(task.goal) <= config.arrival_tolerance;
            AgentState {
                position,
                velocity: v,
                arrived,
                arrival_step: arrived.then_some(step + 1),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub position: Vec2,
    /// Velocity applied over `[step, step + 1)`; zero on an agent's final record.
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub agent_id: usize,
    pub records: Vec<StepRecord>,
}

impl AgentTrack {
    pub fn positions(&self) -> Vec<Vec2> {
        self.records.iter().map(|r| r.position).collect()
    }

    pub fn record_at(&self, step: usize) -> Option<&StepRecord> {
        let first = self.records.first()?.step;
        let rec = self.records.get(step.checked_sub(first)?)?;
        (rec.step == step).then_some(rec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub scenario_id: String,
    pub dt: f64,
    pub agents: Vec<AgentTrack>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "scenario_id,agent_id,step,x,y,vx,vy";

impl TrajectoryLog {
    pub fn transitions(&self) -> usize {
        self.agents
            .iter()
            .map(|a| a.records.len().saturating_sub(1))
            .sum()
    }

    pub fn last_step(&self) -> usize {
        self.agents
            .iter()
            .filter_map(|a| a.records.last().map(|r| r.step))
            .max()
            .unwrap_or(0)
    }

    /// Checks strictly increasing steps and `pos[t+1] = pos[t] + v[t] dt` within `tol`.
    pub fn check_consistency(&self, tol: f64) -> Result<(), String> {
        for a in &self.agents {
            for w in a.records.windows(2) {
                if w[1].step != w[0].step + 1 {
                    return Err(format!(
                        "agent {}: step {} follows {}",
                        a.agent_id, w[1].step, w[0].step
                    ));
                }
                let predicted = w[0].position + w[0].velocity * self.dt;
                let err = predicted.distance(w[1].position);
                if err > tol {
                    return Err(format!(
                        "agent {} step {}: position off by {err:e}",
                        a.agent_id, w[0].step
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        }
        for a in &self.agents {
            for r in &a.records {
                writeln!(
                    w,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    self.scenario_id,
                    a.agent_id,
                    r.step,
                    r.position.x,
                    r.position.y,
                    r.velocity.x,
                    r.velocity.y
                )?;
            }
        }
        Ok(())
    }

    /// Parses logs in the trajectory CSV format; one log per scenario id, in first-seen order.
    pub fn read_csv<R: BufRead>(r: R, dt: f64) -> Result<Vec<TrajectoryLog>, WorldError> {
        let mut logs: Vec<TrajectoryLog> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if i == 0 && line.trim() == TRAJECTORY_CSV_HEADER {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let row = parse_row(&line).map_err(|reason| WorldError::MalformedRow {
                line: lineno,
                reason,
            })?;
            let log = match logs.iter_mut().position(|l| l.scenario_id == row.0) {
                Some(k) => &mut logs[k],
                None => {
                    logs.push(TrajectoryLog {
                        scenario_id: row.0.clone(),
                        dt,
                        agents: Vec::new(),
                    });
                    logs.last_mut().unwrap()
                }
            };
            let track = match log.agents.iter_mut().position(|a| a.agent_id == row.1) {
                Some(k) => &mut log.agents[k],
                None => {
                    log.agents.push(AgentTrack {
                        agent_id: row.1,
                        records: Vec::new(),
                    });
                    log.agents.last_mut().unwrap()
                }
            };
            if track.records.last().is_some_and(|last| last.step >= row.2) {
                return Err(WorldError::MalformedRow {
                    line: lineno,
                    reason: "steps must increase per agent".into(),
                });
            }
            track.records.push(StepRecord {
                step: row.2,
                position: row.3,
                velocity: row.4,
            });
        }
        Ok(logs)
    }
}

type Row = (String, usize, usize, Vec2, Vec2);

fn parse_row(line: &str) -> Result<Row, String> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.len() != 7 {
        return Err(format!("expected 7 columns, found {}", cols.len()));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| format!("{s:?}: {e}"))
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("{s:?} is not finite"))
                }
            })
    };
    Ok((
        cols[0].to_string(),
        int(cols[1])?,
        int(cols[2])?,
        Vec2::new(num(cols[3])?, num(cols[4])?),
        Vec2::new(num(cols[5])?, num(cols[6])?),
    ))
}

/// Runs the synchronous sense-decide-move loop from the scenario's start state.
pub fn run_simulation(
    scenario: &Scenario,
    controller: &mut dyn Controller,
    config: &SimConfig,
) -> Result<TrajectoryLog, WorldError> {
    let mut states = scenario.initial_states(config);
    let mut agents: Vec<AgentTrack> = (0..states.len())
        .map(|i| AgentTrack {
            agent_id: i,
            records: Vec::new(),
        })
        .collect();

    for step in 0..config.max_steps {
        let active: Vec<usize> = (0..states.len()).filter(|&i| !states[i].arrived).collect();
        if active.is_empty() {
            break;
        }
        let view = WorldView {
            scenario,
            states: &states,
            step,
            config,
        };
        let decisions = controller.decide_all(&view, &active)?;
        let mut commands = vec![Vec2::ZERO; states.len()];
        for (&a, v) in active.iter().zip(decisions) {
            commands[a] = v;
        }
        let next = step_world(scenario, &states, &commands, config, step)?;
        for &a in &active {
            agents[a].records.push(StepRecord {
                step,
                position: states[a].position,
                velocity: next[a].velocity,
            });
        }
        states = next;
    }

    // final resting records carry zero velocity
    for (i, s) in states.iter().enumerate() {
        let step = match (s.arrival_step, agents[i].records.last()) {
            (Some(k), _) => k,
            (None, Some(last)) => last.step + 1,
            (None, None) => 0,
        };
        agents[i].records.push(StepRecord {
            step,
            position: s.position,
            velocity: Vec2::ZERO,
        });
    }

    Ok(TrajectoryLog {
        scenario_id: scenario.id.clone(),
        dt: config.dt,
        agents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(start: Vec2, goal: Vec2) -> Scenario {
        Scenario {
            id: "t".into(),
            bounds: Bounds::new(-50., -50., 50., 50.),
            obstacles: vec![],
            tasks: vec![AgentTask::new(start, goal)],
            domain_tag: DomainTag::G,
            expert: None,
            layout: Default::default(),
        }
    }

    struct Straight;
    impl Controller for Straight {
        fn decide(&mut self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, BoxError> {
            let t = view.task(agent);
            Ok((t.goal - view.states[agent].position).normalized() * view.config.max_speed)
        }
    }

    #[test]
    fn step_moves_and_clamps() {
        let sc = single(Vec2::ZERO, Vec2::new(10.0, 0.0));
        let cfg = SimConfig::default();
        let s0 = sc.initial_states(&cfg);
        let s1 = step_world(&sc, &s0, &[Vec2::new(1.0, 0.0)], &cfg, 0).unwrap();
        assert!((s1[0].position - Vec2::new(0.1, 0.0)).norm() < 1e-12);
        let s1 = step_world(&sc, &s0, &[Vec2::new(10.0, 0.0)], &cfg, 0).unwrap();
        assert!((s1[0].position.norm() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn arrival_freezes() {
        let sc = single(Vec2::ZERO, Vec2::new(0.15, 0.0));
        let cfg = SimConfig {
            arrival_tolerance: 0.1,
            ..SimConfig::default()
        };
        let mut s0 = sc.initial_states(&cfg);
        assert!(!s0[0].arrived);
        s0[0].position = Vec2::new(0.1, 0.0); // 0.05 from goal after a zero step
        let s1 = step_world(&sc, &s0, &[Vec2::ZERO], &cfg, 3).unwrap();
        assert!(s1[0].arrived);
        assert_eq!(s1[0].arrival_step, Some(4));
        let s2 = step_world(&sc, &s1, &[Vec2::new(1.0, 1.0)], &cfg, 4).unwrap();
        assert_eq!(s2[0].position, s1[0].position);
    }

    #[test]
    fn dimension_mismatch() {
        let sc = single(Vec2::ZERO, Vec2::new(1.0, 0.0));
        let cfg = SimConfig::default();
        let s0 = sc.initial_states(&cfg);
        assert!(matches!(
            step_world(&sc, &s0, &[], &cfg, 0),
            Err(WorldError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn already_arrived_has_no_transitions() {
        let sc = single(Vec2::ZERO, Vec2::new(0.2, 0.0));
        let log = run_simulation(&sc, &mut Straight, &SimConfig::default()).unwrap();
        assert_eq!(log.transitions(), 0);
    }

    #[test]
    fn straight_line_arrival_time() {
        let cfg = SimConfig::default();
        let dist = 10.0;
        let sc = single(Vec2::ZERO, Vec2::new(dist, 0.0));
        let log = run_simulation(&sc, &mut Straight, &cfg).unwrap();
        let per_step = cfg.max_speed * cfg.dt;
        // arrival is declared within the tolerance of the goal
        let expected = ((dist - cfg.arrival_tolerance) / per_step - 1e-9).ceil() as usize;
        assert_eq!(log.transitions(), expected);
        log.check_consistency(1e-9).unwrap();
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let sc = single(Vec2::ZERO, Vec2::new(3.0, 0.0));
        let log = run_simulation(&sc, &mut Straight, &SimConfig::default()).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scenario_id,agent_id,step,x,y,vx,vy\n"));
        assert!(!text.contains('\r'));
        let back = TrajectoryLog::read_csv(text.as_bytes(), 0.1).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].agents[0].records.len(), log.agents[0].records.len());

        let bad = "scenario_id,agent_id,step,x,y,vx,vy\nt,0,0,1.0,2.0,0,0\nt,0,x,1,2,0,0\n";
        match TrajectoryLog::read_csv(bad.as_bytes(), 0.1) {
            Err(WorldError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scenario_json_shape() {
        let sc = single(Vec2::ZERO, Vec2::new(3.0, 0.0));
        let v: serde_json::Value = serde_json::from_str(&sc.to_json().unwrap()).unwrap();
        assert_eq!(v["bounds"], serde_json::json!([-50.0, -50.0, 50.0, 50.0]));
        assert_eq!(v["tasks"][0]["goal"], serde_json::json!([3.0, 0.0]));
        assert_eq!(v["domain_tag"], "G");
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn validate_rejects_overlapping_starts() {
        let mut sc = single(Vec2::ZERO, Vec2::new(3.0, 0.0));
        sc.tasks.push(AgentTask::new(Vec2::new(0.5, 0.0), Vec2::new(-3.0, 0.0)));
        assert!(sc.validate().is_err());
        sc.tasks[1].start = Vec2::new(1.0, 0.0);
        sc.validate().unwrap();
    }
}
