//! Behavior cloning and adversarial imitation over small tanh MLPs with
//! hand-written backpropagation.

pub mod bc;
pub mod dataset;
pub mod gail;
pub mod mlp;
pub mod policy;
pub mod rmsprop;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::GuidanceError;
use crate::world::WorldError;

pub use bc::{bc_train, bc_train_from, mse, mse_loss_and_grad, BcTrace};
pub use dataset::{expert_pairs, replay_states, Dataset};
pub use gail::{
    discriminator_objective, gail_discriminator_step, gail_policy_step, gail_train, gail_train_with,
    rollout, surrogate_and_grad, Discriminator, GailTrace, PolicyBatch, PolicyController, Rollout,
    Transition,
};
pub use mlp::{Activation, Grads, Mlp};
pub use policy::{ModelFile, PolicyModel};
pub use rmsprop::RmsProp;

#[derive(Debug, Error)]
pub enum LearningError {
    #[error("input has {got} features, network expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite loss at batch {batch}")]
    NonFiniteLoss { batch: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("malformed dataset: {0}")]
    MalformedData(String),
    #[error("no expert log for scenario {0}")]
    MissingExpertLog(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PartialEq for LearningError {
    fn eq(&self, other: &Self) -> bool {
        use LearningError::*;
        match (self, other) {
            (ShapeMismatch { expected: a, got: b }, ShapeMismatch { expected: c, got: d }) => {
                a == c && b == d
            }
            (NonFiniteLoss { batch: a }, NonFiniteLoss { batch: b }) => a == b,
            (EmptyDataset, EmptyDataset) => true,
            (InvalidModel(a), InvalidModel(b))
            | (InvalidConfig(a), InvalidConfig(b))
            | (MalformedData(a), MalformedData(b))
            | (MissingExpertLog(a), MissingExpertLog(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub bc_lr: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub batch_size: usize,
    pub bc_steps: usize,
    /// Steps between full-loss evaluations in the BC trace (0 disables).
    pub eval_interval: usize,
    pub policy_lr: f64,
    pub disc_lr: f64,
    pub gamma: f64,
    pub entropy_weight: f64,
    pub clip: f64,
    /// Exploration std of the Gaussian policy (m/s).
    pub sigma: f64,
    pub gail_iterations: usize,
    pub rollouts_per_iteration: usize,
    pub disc_steps: usize,
    pub policy_minibatches: usize,
    /// BC steps on the expert pairs before adversarial training (0 = cold start).
    pub warm_start_steps: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![64, 64, 64],
            bc_lr: 1e-4,
            rms_decay: 0.9,
            rms_eps: 1e-8,
            batch_size: 128,
            bc_steps: 20_000,
            eval_interval: 100,
            policy_lr: 1e-2,
            disc_lr: 1e-4,
            gamma: 0.99,
            entropy_weight: 0.0,
            clip: 0.2,
            sigma: 0.5,
            gail_iterations: 2_000,
            rollouts_per_iteration: 4,
            disc_steps: 1,
            policy_minibatches: 4,
            warm_start_steps: 0,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    /// `[input, hidden..., 2]`.
    pub fn layer_sizes(&self, input: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend_from_slice(&self.hidden);
        s.push(2);
        s
    }

    pub fn validate(&self) -> Result<(), LearningError> {
        let bad = |m: &str| Err(LearningError::InvalidConfig(m.to_string()));
        if !(self.bc_lr > 0.0 && self.policy_lr > 0.0 && self.disc_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.entropy_weight >= 0.0) {
            return bad("entropy weight must be non-negative");
        }
        if !(self.sigma >= 0.0) {
            return bad("sigma must be non-negative");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.rms_decay) || !(self.rms_eps > 0.0) {
            return bad("rmsprop decay in [0, 1) and epsilon > 0");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }
}
