use std::fmt;

use thiserror::Error;

/// Problems detected before any work starts. The CLI maps these to exit code 1.
#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("RL agents are not trained on random state-action pairs (model {0})")]
    RlaOnRandom(String),
    #[error("model {model} trains on {expected}, spec says {got}")]
    DomainMismatch {
        model: String,
        expected: String,
        got: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Pipeline stage an experiment failure happened in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Expert,
    Train,
    Evaluate,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Generate => "generate",
            Stage::Expert => "expert",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Export => "export",
        })
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("{stage} stage failed: {source:#}")]
    Stage {
        stage: Stage,
        #[source]
        source: anyhow::Error,
    },
}

impl ExperimentError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            ExperimentError::Stage { stage, .. } => Some(*stage),
            ExperimentError::Validation(_) => None,
        }
    }
}

/// Tags a fallible result with its stage.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, ExperimentError>;
}

impl<T, E: Into<anyhow::Error>> StageExt<T> for Result<T, E> {
    fn stage(self, stage: Stage) -> Result<T, ExperimentError> {
        self.map_err(|e| ExperimentError::Stage {
            stage,
            source: e.into(),
        })
    }
}
