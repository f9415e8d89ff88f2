//! Non-learned expert controllers that produce demonstration trajectories.
//!
//! Each expert is a strategy behind [`Expert`] and is looked up by name
//! through [`ExpertRegistry`]: `"social_force"` or `"orca"`.

pub mod lp;
pub mod orca;
pub mod social_force;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::guidance::GuidanceProvider;
use crate::world::{step_rng, BoxError, Controller, WorldView};

pub use lp::{safest_velocity, solve_lp2d, HalfPlane, Infeasible};
pub use orca::{orca_velocity, OrcaAgent, OrcaParams};
pub use social_force::{social_force_acceleration, social_force_velocity, Body, SocialForceParams};

/// Neighbors farther than this are ignored by the social-force expert.
const SOCIAL_FORCE_NEIGHBOR_RANGE: f64 = 10.0;

/// A controller factory for one expert model.
pub trait Expert: Send + Sync {
    fn name(&self) -> &'static str;

    /// Controller steering every agent toward the provider's local guidance.
    fn controller<'a>(
        &'a self,
        guidance: &'a dyn GuidanceProvider,
        seed: u64,
    ) -> Box<dyn Controller + 'a>;
}

#[derive(Debug, Clone, Default)]
pub struct SocialForceExpert {
    pub params: SocialForceParams,
}

#[derive(Debug, Clone)]
pub struct OrcaExpert {
    pub params: OrcaParams,
    /// Obstacle edges become extra half-planes when set.
    pub use_obstacles: bool,
}

impl Default for OrcaExpert {
    fn default() -> Self {
        OrcaExpert {
            params: OrcaParams::default(),
            use_obstacles: true,
        }
    }
}

impl Expert for SocialForceExpert {
    fn name(&self) -> &'static str {
        "social_force"
    }

    fn controller<'a>(
        &'a self,
        guidance: &'a dyn GuidanceProvider,
        seed: u64,
    ) -> Box<dyn Controller + 'a> {
        Box::new(SocialForceController {
            params: &self.params,
            guidance,
            seed,
        })
    }
}

impl Expert for OrcaExpert {
    fn name(&self) -> &'static str {
        "orca"
    }

    fn controller<'a>(
        &'a self,
        guidance: &'a dyn GuidanceProvider,
        _seed: u64,
    ) -> Box<dyn Controller + 'a> {
        Box::new(OrcaController {
            expert: self,
            guidance,
        })
    }
}

struct SocialForceController<'a> {
    params: &'a SocialForceParams,
    guidance: &'a dyn GuidanceProvider,
    seed: u64,
}

impl Controller for SocialForceController<'_> {
    fn decide(&mut self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, BoxError> {
        let me_state = &view.states[agent];
        let me = Body {
            position: me_state.position,
            velocity: me_state.velocity,
            radius: view.task(agent).radius,
        };
        let neighbors: Vec<Body> = view
            .neighbor_discs(agent)
            .into_iter()
            .filter(|(_, c)| c.center.distance(me.position) < SOCIAL_FORCE_NEIGHBOR_RANGE)
            .map(|(j, c)| Body {
                position: c.center,
                velocity: view.states[j].velocity,
                radius: c.radius,
            })
            .collect();
        let dir = self.guidance.local_guidance(view, agent)?.normalized();
        let mut rng = step_rng(self.seed, agent, view.step);
        let mut params = *self.params;
        params.max_speed = params.max_speed.min(view.config.max_speed);
        Ok(social_force_velocity(
            &me,
            &neighbors,
            &view.scenario.obstacles,
            dir,
            &params,
            view.config.dt,
            &mut rng,
        ))
    }
}

struct OrcaController<'a> {
    expert: &'a OrcaExpert,
    guidance: &'a dyn GuidanceProvider,
}

impl Controller for OrcaController<'_> {
    fn decide(&mut self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, BoxError> {
        let s = &view.states[agent];
        let me = OrcaAgent {
            position: s.position,
            velocity: s.velocity,
            radius: view.task(agent).radius,
        };
        let neighbors: Vec<OrcaAgent> = view
            .neighbor_discs(agent)
            .into_iter()
            .map(|(j, c)| OrcaAgent {
                position: c.center,
                velocity: view.states[j].velocity,
                radius: c.radius,
            })
            .collect();
        let mut params = self.expert.params;
        params.max_speed = params.max_speed.min(view.config.max_speed);
        let preferred = self
            .guidance
            .local_guidance(view, agent)?
            .clamp_norm(params.max_speed);
        let obstacles = if self.expert.use_obstacles {
            &view.scenario.obstacles[..]
        } else {
            &[]
        };
        Ok(orca_velocity(
            &me,
            &neighbors,
            obstacles,
            preferred,
            &params,
            view.config.dt,
        ))
    }
}

/// Parameters for every registered expert.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertParams {
    pub social_force: SocialForceParams,
    pub orca: OrcaParams,
}

/// Name → expert lookup.
pub struct ExpertRegistry {
    experts: Vec<Box<dyn Expert>>,
}

impl ExpertRegistry {
    pub fn new(params: &ExpertParams) -> Self {
        ExpertRegistry {
            experts: vec![
                Box::new(SocialForceExpert {
                    params: params.social_force,
                }),
                Box::new(OrcaExpert {
                    params: params.orca,
                    use_obstacles: true,
                }),
            ],
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn Expert> {
        self.experts
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.experts.iter().map(|e| e.name()).collect()
    }
}
