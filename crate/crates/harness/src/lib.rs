//! Experiment orchestration for the crowd imitation benchmark: configuration
//! presets, the train/evaluate pipeline for the five model variants, result
//! files, SVG rendering and real-trajectory ingestion.

pub mod config;
pub mod error;
pub mod experiment;
pub mod export;
pub mod ingest;
pub mod manifest;
pub mod render;
pub mod repro;

pub use config::{HarnessConfig, Scale, StandardSet};
pub use error::{ExperimentError, Stage, ValidationError};
pub use experiment::{run_experiment, Domain, ExperimentSpec, ModelId, Paradigm};
pub use manifest::Manifest;
