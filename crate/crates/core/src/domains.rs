//! Generators for the standard (X), representative (G) and random-pair (R) data domains.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::experts::{orca_velocity, OrcaAgent, OrcaParams};
use crate::geometry::{seg_intersect, Circle, Polygon, Vec2};
use crate::guidance::{astar_plan, build_costmap, PlannerConfig};
use crate::perception::{scan, Observation, PerceptionConfig, VisibleDisc};
use crate::world::{AgentTask, Bounds, DomainTag, Scenario, DEFAULT_AGENT_RADIUS};

pub const PLACEMENT_ATTEMPTS: usize = 10_000;
pub const MAX_DENSITY: usize = 50;

pub const ROOM_SIZE: f64 = 20.0;
pub const WALL_THICKNESS: f64 = 1.0;
pub const EVACUATION1_DOORWAY: f64 = 2.4;
pub const EVACUATION2_DOORWAY: f64 = 1.4;
pub const HALLWAY_WIDTH: f64 = 8.0;
pub const HALLWAY_LENGTH: f64 = 30.0;
pub const CIRCLE_RADIUS: f64 = 10.0;
/// Clear width of the squeeze in the middle of the bottleneck hallway.
pub const BOTTLENECK_GAP: f64 = 2.0;
pub const BOTTLENECK_LENGTH: f64 = 4.0;

/// Dimensions of the standard layouts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardLayout {
    pub room_size: f64,
    pub wall_thickness: f64,
    pub evacuation1_doorway: f64,
    pub evacuation2_doorway: f64,
    pub hallway_width: f64,
    pub hallway_length: f64,
    pub circle_radius: f64,
    pub squeeze_width: f64,
    pub squeeze_length: f64,
    pub agent_radius: f64,
}

impl Default for StandardLayout {
    fn default() -> Self {
        StandardLayout {
            room_size: ROOM_SIZE,
            wall_thickness: WALL_THICKNESS,
            evacuation1_doorway: EVACUATION1_DOORWAY,
            evacuation2_doorway: EVACUATION2_DOORWAY,
            hallway_width: HALLWAY_WIDTH,
            hallway_length: HALLWAY_LENGTH,
            circle_radius: CIRCLE_RADIUS,
            squeeze_width: BOTTLENECK_GAP,
            squeeze_length: BOTTLENECK_LENGTH,
            agent_radius: DEFAULT_AGENT_RADIUS,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("could not place {what} within {attempts} attempts")]
    PlacementFailure { what: String, attempts: usize },
    #[error("density {0} outside 1..=50")]
    InvalidDensity(usize),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("unknown standard scenario kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StandardKind {
    Evacuation1,
    Evacuation2,
    BottleneckSqueeze,
    ConcentricCircles,
    HallwayTwoWay,
    HallwayFourWay,
}

impl StandardKind {
    pub const ALL: [StandardKind; 6] = [
        StandardKind::Evacuation1,
        StandardKind::Evacuation2,
        StandardKind::BottleneckSqueeze,
        StandardKind::ConcentricCircles,
        StandardKind::HallwayTwoWay,
        StandardKind::HallwayFourWay,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StandardKind::Evacuation1 => "evacuation1",
            StandardKind::Evacuation2 => "evacuation2",
            StandardKind::BottleneckSqueeze => "bottleneck_squeeze",
            StandardKind::ConcentricCircles => "concentric_circles",
            StandardKind::HallwayTwoWay => "hallway_two_way",
            StandardKind::HallwayFourWay => "hallway_four_way",
        }
    }

    fn index(&self) -> u64 {
        StandardKind::ALL.iter().position(|k| k == self).unwrap() as u64
    }
}

impl fmt::Display for StandardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StandardKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        StandardKind::ALL
            .into_iter()
            .find(|k| k.as_str().replace('_', "") == norm)
            .ok_or_else(|| DomainError::UnknownKind(s.to_string()))
    }
}

/// Axis-aligned sampling region.
#[derive(Debug, Clone, Copy)]
struct Region {
    min: Vec2,
    max: Vec2,
}

impl Region {
    fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Region {
            min: Vec2::new(xmin, ymin),
            max: Vec2::new(xmax, ymax),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(
            rng.gen_range(self.min.x..=self.max.x),
            rng.gen_range(self.min.y..=self.max.y),
        )
    }
}

/// Rejection-samples a point in `region` at least `sep` away from every point in `taken`.
fn place<R: Rng>(
    rng: &mut R,
    region: &Region,
    taken: &[Vec2],
    sep: f64,
    what: &str,
) -> Result<Vec2, DomainError> {
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = region.sample(rng);
        if taken.iter().all(|q| q.distance(p) >= sep) {
            return Ok(p);
        }
    }
    Err(DomainError::PlacementFailure {
        what: what.to_string(),
        attempts: PLACEMENT_ATTEMPTS,
    })
}

fn rect(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Polygon {
    Polygon::rect(Vec2::new(xmin, ymin), Vec2::new(xmax, ymax))
}

/// Room walls with a doorway centered on the east wall.
fn room_with_doorway(lay: &StandardLayout, door: f64) -> Vec<Polygon> {
    let h = lay.room_size / 2.0;
    let t = lay.wall_thickness;
    vec![
        rect(-h - t, -h - t, -h, h + t),
        rect(-h, -h - t, h + t, -h),
        rect(-h, h, h + t, h + t),
        rect(h, -h, h + t, -door / 2.0),
        rect(h, door / 2.0, h + t, h),
    ]
}

/// Two walls bounding a hallway along x with `|y| <= HALLWAY_WIDTH / 2`.
fn hallway_walls(lay: &StandardLayout) -> Vec<Polygon> {
    let l = lay.hallway_length / 2.0;
    let w = lay.hallway_width / 2.0;
    let t = lay.wall_thickness;
    vec![rect(-l, -w - t, l, -w), rect(-l, w, l, w + t)]
}

/// Scenario with one of the six fixed layouts and `density` agents.
///
/// Obstacles depend only on `kind`; agent placement is seeded by `(seed, kind, density)`.
pub fn build_standard(kind: StandardKind, density: usize, seed: u64) -> Result<Scenario, DomainError> {
    build_standard_with(kind, density, seed, &StandardLayout::default())
}

/// [`build_standard`] with explicit layout dimensions.
pub fn build_standard_with(
    kind: StandardKind,
    density: usize,
    seed: u64,
    lay: &StandardLayout,
) -> Result<Scenario, DomainError> {
    if !(1..=MAX_DENSITY).contains(&density) {
        return Err(DomainError::InvalidDensity(density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind.index() * 1000 + density as u64);
    let r = lay.agent_radius;
    let sep = 2.0 * r + 0.1;
    let mut starts: Vec<Vec2> = Vec::with_capacity(density);
    let mut tasks = Vec::with_capacity(density);
    let mut layout = serde_json::Map::new();

    let task = |start: Vec2, goal: Vec2| AgentTask {
        start,
        goal,
        radius: r,
    };
    let (bounds, obstacles) = match kind {
        StandardKind::Evacuation1 | StandardKind::Evacuation2 => {
            let door = if kind == StandardKind::Evacuation1 {
                lay.evacuation1_doorway
            } else {
                lay.evacuation2_doorway
            };
            let h = lay.room_size / 2.0;
            let inside = Region::new(-h + r + 0.1, -h + r + 0.1, h - r - 0.1, h - r - 0.1);
            let outside = Region::new(h + 4.0, -h + 2.0, h + 12.0, h - 2.0);
            let shared = Vec2::new(h + 8.0, 0.0);
            let mut goals: Vec<Vec2> = Vec::new();
            for _ in 0..density {
                let s = place(&mut rng, &inside, &starts, sep, "evacuation start")?;
                starts.push(s);
                let g = if kind == StandardKind::Evacuation1 {
                    let g = place(&mut rng, &outside, &goals, sep, "evacuation goal")?;
                    goals.push(g);
                    g
                } else {
                    shared
                };
                tasks.push(task(s, g));
            }
            layout.insert("room_size".into(), json!(lay.room_size));
            layout.insert("wall_thickness".into(), json!(lay.wall_thickness));
            layout.insert("doorway_width".into(), json!(door));
            (
                Bounds::new(-h - 2.0, -h - 2.0, h + 14.0, h + 2.0),
                room_with_doorway(lay, door),
            )
        }
        StandardKind::BottleneckSqueeze => {
            let w = lay.hallway_width / 2.0;
            let mut obstacles = hallway_walls(lay);
            let (g, b) = (lay.squeeze_width / 2.0, lay.squeeze_length / 2.0);
            obstacles.push(rect(-b, -w, b, -g));
            obstacles.push(rect(-b, g, b, w));
            let region = Region::new(-26.0, -w + r + 0.1, -4.0, w - r - 0.1);
            for _ in 0..density {
                let s = place(&mut rng, &region, &starts, sep, "bottleneck start")?;
                starts.push(s);
                tasks.push(task(s, Vec2::new(s.x + 30.0, s.y)));
            }
            layout.insert("hallway_width".into(), json!(lay.hallway_width));
            layout.insert("hallway_length".into(), json!(lay.hallway_length));
            layout.insert("squeeze_width".into(), json!(lay.squeeze_width));
            layout.insert("squeeze_length".into(), json!(lay.squeeze_length));
            (Bounds::new(-28.0, -w - 3.0, 28.0, w + 3.0), obstacles)
        }
        StandardKind::ConcentricCircles => {
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            for i in 0..density {
                let a = phase + std::f64::consts::TAU * i as f64 / density as f64;
                let s = Vec2::from_angle(a) * lay.circle_radius;
                starts.push(s);
                tasks.push(task(s, -s));
            }
            layout.insert("circle_radius".into(), json!(lay.circle_radius));
            let e = lay.circle_radius + 2.0;
            (Bounds::new(-e, -e, e, e), Vec::new())
        }
        StandardKind::HallwayTwoWay => {
            let (l, w) = (lay.hallway_length / 2.0, lay.hallway_width / 2.0);
            let y = w - r - 0.1;
            let west = Region::new(-l + 0.5, -y, -1.0, y);
            let east = Region::new(1.0, -y, l - 0.5, y);
            for i in 0..density {
                let from_west = i % 2 == 0;
                let region = if from_west { &west } else { &east };
                let s = place(&mut rng, region, &starts, sep, "hallway start")?;
                starts.push(s);
                let gx = if from_west { l - 1.0 } else { -l + 1.0 };
                tasks.push(task(s, Vec2::new(gx, s.y)));
            }
            layout.insert("hallway_width".into(), json!(lay.hallway_width));
            layout.insert("hallway_length".into(), json!(lay.hallway_length));
            layout.insert("flows".into(), json!(2));
            (Bounds::new(-l - 1.0, -w - 2.0, l + 1.0, w + 2.0), hallway_walls(lay))
        }
        StandardKind::HallwayFourWay => {
            let (l, w) = (lay.hallway_length / 2.0, lay.hallway_width / 2.0);
            let obstacles = vec![
                rect(-l, -l, -w, -w),
                rect(w, -l, l, -w),
                rect(-l, w, -w, l),
                rect(w, w, l, l),
            ];
            let c = w - r - 0.1;
            // west→east, east→west, south→north, north→south
            let regions = [
                Region::new(-l + 0.5, -c, -w - 1.0, c),
                Region::new(w + 1.0, -c, l - 0.5, c),
                Region::new(-c, -l + 0.5, c, -w - 1.0),
                Region::new(-c, w + 1.0, c, l - 0.5),
            ];
            for i in 0..density {
                let flow = i % 4;
                let s = place(&mut rng, &regions[flow], &starts, sep, "hallway start")?;
                starts.push(s);
                let g = match flow {
                    0 => Vec2::new(l - 1.0, s.y),
                    1 => Vec2::new(-l + 1.0, s.y),
                    2 => Vec2::new(s.x, l - 1.0),
                    _ => Vec2::new(s.x, -l + 1.0),
                };
                tasks.push(task(s, g));
            }
            layout.insert("hallway_width".into(), json!(lay.hallway_width));
            layout.insert("hallway_length".into(), json!(lay.hallway_length));
            layout.insert("flows".into(), json!(4));
            (Bounds::new(-l, -l, l, l), obstacles)
        }
    };

    layout.insert("kind".into(), json!(kind.as_str()));
    layout.insert("density".into(), json!(density));
    Ok(Scenario {
        id: format!("x-{}-d{}-s{}", kind.as_str(), density, seed),
        bounds,
        obstacles,
        tasks,
        domain_tag: DomainTag::X,
        expert: Some("social_force".into()),
        layout,
    })
}

/// Sampling ranges for representative scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub obstacles: (usize, usize),
    pub vertices: (usize, usize),
    pub circumradius: (f64, f64),
    pub agents: (usize, usize),
    /// Side length of the square area, centered on the origin.
    pub area_size: f64,
    /// Minimum distance from starts and goals to any obstacle.
    pub clearance: f64,
    /// Minimum start-to-goal distance.
    pub min_travel: f64,
    pub agent_radius: f64,
    pub planner: PlannerConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            obstacles: (3, 8),
            vertices: (3, 6),
            circumradius: (1.0, 4.0),
            agents: (4, 12),
            area_size: 30.0,
            clearance: 1.0,
            min_travel: 5.0,
            agent_radius: DEFAULT_AGENT_RADIUS,
            planner: PlannerConfig::default(),
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: &str| Err(DomainError::InvalidConfig(m.to_string()));
        if self.obstacles.0 > self.obstacles.1 {
            return bad("obstacle range reversed");
        }
        if self.vertices.0 < 3 || self.vertices.0 > self.vertices.1 {
            return bad("vertex range must be within 3..");
        }
        if !(self.circumradius.0 > 0.0) || self.circumradius.0 > self.circumradius.1 {
            return bad("circumradius range");
        }
        if self.agents.0 == 0 || self.agents.0 > self.agents.1 {
            return bad("agent range");
        }
        if !(self.area_size > 2.0 * self.circumradius.1) {
            return bad("area too small for the obstacles");
        }
        Ok(())
    }
}

/// Convex polygon inscribed in a circle, vertices at sorted random angles.
fn random_convex<R: Rng>(rng: &mut R, center: Vec2, radius: f64, n: usize) -> Option<Polygon> {
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    let verts: Vec<Vec2> = angles
        .iter()
        .map(|&a| center + Vec2::from_angle(a) * radius)
        .collect();
    let poly = Polygon::new(verts).ok()?;
    // reject slivers
    (poly.area() >= 0.25 * radius * radius).then_some(poly)
}

fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    a.vertices().iter().any(|v| b.contains(*v))
        || b.vertices().iter().any(|v| a.contains(*v))
        || a
            .edges()
            .any(|e| b.edges().any(|f| seg_intersect(&e, &f).is_some()))
}

/// Random convex obstacles and agent tasks in a square area.
///
/// Every start and goal keeps `clearance` from all obstacles and every task
/// has an A* path on the planner costmap.
pub fn sample_representative(seed: u64, config: &GeneratorConfig) -> Result<Scenario, DomainError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x6772);
    let h = config.area_size / 2.0;
    let bounds = Bounds::new(-h, -h, h, h);

    let n_obstacles = rng.gen_range(config.obstacles.0..=config.obstacles.1);
    let mut obstacles: Vec<Polygon> = Vec::with_capacity(n_obstacles);
    for _ in 0..n_obstacles {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let radius = rng.gen_range(config.circumradius.0..=config.circumradius.1);
            let n = rng.gen_range(config.vertices.0..=config.vertices.1);
            let region = Region::new(-h + radius, -h + radius, h - radius, h - radius);
            let center = region.sample(&mut rng);
            if let Some(p) = random_convex(&mut rng, center, radius, n) {
                if obstacles.iter().all(|o| !polygons_overlap(o, &p)) {
                    placed = Some(p);
                    break;
                }
            }
        }
        obstacles.push(placed.ok_or_else(|| DomainError::PlacementFailure {
            what: "obstacle".into(),
            attempts: PLACEMENT_ATTEMPTS,
        })?);
    }

    let draft = Scenario {
        id: String::new(),
        bounds,
        obstacles: obstacles.clone(),
        tasks: Vec::new(),
        domain_tag: DomainTag::G,
        expert: None,
        layout: Default::default(),
    };
    let p = &config.planner;
    let grid = build_costmap(&draft, p.cell_size, p.smoothing_sigma)
        .with_planning(p.cost_weight, p.hard_threshold);

    let r = config.agent_radius;
    let margin = r.max(config.clearance);
    let area = Region::new(-h + margin, -h + margin, h - margin, h - margin);
    let clear = |q: Vec2| {
        obstacles
            .iter()
            .all(|o| !o.contains(q) && o.distance(q) >= config.clearance)
    };
    let n_agents = rng.gen_range(config.agents.0..=config.agents.1);
    let mut starts: Vec<Vec2> = Vec::new();
    let mut goals: Vec<Vec2> = Vec::new();
    let mut tasks = Vec::with_capacity(n_agents);
    let sep = 2.0 * r + 0.1;
    for _ in 0..n_agents {
        let mut found = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let s = area.sample(&mut rng);
            let g = area.sample(&mut rng);
            if s.distance(g) < config.min_travel
                || !clear(s)
                || !clear(g)
                || starts.iter().any(|q| q.distance(s) < sep)
                || goals.iter().any(|q| q.distance(g) < sep)
            {
                continue;
            }
            if astar_plan(&grid, s, g).is_ok() {
                found = Some((s, g));
                break;
            }
        }
        let (s, g) = found.ok_or_else(|| DomainError::PlacementFailure {
            what: "agent task".into(),
            attempts: PLACEMENT_ATTEMPTS,
        })?;
        starts.push(s);
        goals.push(g);
        tasks.push(AgentTask {
            start: s,
            goal: g,
            radius: r,
        });
    }

    let mut layout = serde_json::Map::new();
    layout.insert("area_size".into(), json!(config.area_size));
    layout.insert("seed".into(), json!(seed));
    Ok(Scenario {
        id: format!("g-{seed}"),
        bounds,
        obstacles,
        tasks,
        domain_tag: DomainTag::G,
        expert: Some("social_force".into()),
        layout,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPairConfig {
    pub neighbors: (usize, usize),
    pub neighbor_radius: f64,
    pub max_speed: f64,
    pub agent_radius: f64,
    pub dt: f64,
}

impl Default for RandomPairConfig {
    fn default() -> Self {
        RandomPairConfig {
            neighbors: (0, 8),
            neighbor_radius: 10.0,
            max_speed: 1.5,
            agent_radius: DEFAULT_AGENT_RADIUS,
            dt: 0.1,
        }
    }
}

/// One independent snapshot around a reference agent at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomStatePair {
    pub observation: Observation,
    pub expert_action: Vec2,
    pub preferred_velocity: Vec2,
    pub own_velocity: Vec2,
    pub neighbors: Vec<OrcaAgent>,
}

fn random_velocity<R: Rng>(rng: &mut R, max_speed: f64) -> Vec2 {
    let speed = rng.gen_range(0.0..=max_speed);
    Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * speed
}

/// Random neighbors, velocities and preferred velocity; the action is the
/// ORCA response under the same state. No obstacles.
pub fn sample_random_pair(
    seed: u64,
    config: &RandomPairConfig,
    orca: &OrcaParams,
    perception: &PerceptionConfig,
) -> RandomStatePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x52);
    let r = config.agent_radius;
    let me = OrcaAgent {
        position: Vec2::ZERO,
        velocity: random_velocity(&mut rng, config.max_speed),
        radius: r,
    };
    let preferred = random_velocity(&mut rng, config.max_speed);
    let count = rng.gen_range(config.neighbors.0..=config.neighbors.1);
    let mut neighbors: Vec<OrcaAgent> = Vec::with_capacity(count);
    for _ in 0..count {
        // uniform in the disc, rejecting overlaps
        for _ in 0..PLACEMENT_ATTEMPTS {
            let rho = config.neighbor_radius * rng.gen::<f64>().sqrt();
            let p = Vec2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * rho;
            let free = p.norm() >= 2.0 * r
                && neighbors.iter().all(|n| n.position.distance(p) >= 2.0 * r);
            if free {
                neighbors.push(OrcaAgent {
                    position: p,
                    velocity: random_velocity(&mut rng, config.max_speed),
                    radius: r,
                });
                break;
            }
        }
    }
    let discs: Vec<VisibleDisc> = neighbors
        .iter()
        .map(|n| VisibleDisc {
            disc: Circle {
                center: n.position,
                radius: n.radius,
            },
            velocity: n.velocity,
        })
        .collect();
    let observation = scan(
        me.position,
        me.velocity,
        &[],
        &discs,
        preferred,
        preferred,
        perception,
    );
    let mut params = *orca;
    params.max_speed = config.max_speed;
    let expert_action = orca_velocity(&me, &neighbors, &[], preferred, &params, config.dt);
    RandomStatePair {
        observation,
        expert_action,
        preferred_velocity: preferred,
        own_velocity: me.velocity,
        neighbors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doorway_widths() {
        for (kind, width) in [
            (StandardKind::Evacuation1, 2.4),
            (StandardKind::Evacuation2, 1.4),
        ] {
            let s = build_standard(kind, 10, 1).unwrap();
            // the two east-wall pieces
            let lower = s.obstacles[3].bounding_box();
            let upper = s.obstacles[4].bounding_box();
            assert!((upper.0.y - lower.1.y - width).abs() < 1e-12);
            s.validate().unwrap();
        }
        let s = build_standard(StandardKind::Evacuation2, 10, 1).unwrap();
        assert!(s.tasks.iter().all(|t| t.goal == s.tasks[0].goal));
    }

    #[test]
    fn concentric_antipodal() {
        let s = build_standard(StandardKind::ConcentricCircles, 8, 3).unwrap();
        for t in &s.tasks {
            assert_eq!(t.goal, -t.start);
        }
    }

    #[test]
    fn density_bounds() {
        assert_eq!(
            build_standard(StandardKind::HallwayTwoWay, 0, 0).unwrap_err(),
            DomainError::InvalidDensity(0)
        );
        for kind in StandardKind::ALL {
            let s = build_standard(kind, 50, 9).unwrap();
            assert_eq!(s.tasks.len(), 50);
            s.validate().unwrap();
        }
    }

    #[test]
    fn kind_names_parse() {
        for kind in StandardKind::ALL {
            assert_eq!(kind.as_str().parse::<StandardKind>().unwrap(), kind);
        }
        assert_eq!(
            "HallwayFourWay".parse::<StandardKind>().unwrap(),
            StandardKind::HallwayFourWay
        );
    }

    #[test]
    fn zero_neighbor_pair_returns_preferred() {
        let cfg = RandomPairConfig {
            neighbors: (0, 0),
            ..Default::default()
        };
        let p = sample_random_pair(5, &cfg, &OrcaParams::default(), &PerceptionConfig::default());
        assert_eq!(p.expert_action, p.preferred_velocity);
        assert!(p.observation.range_map.iter().all(|&r| r == 10.0));
    }
}
