//! Crowd-simulation benchmark core: geometry, the synchronous world loop,
//! expert controllers, scenario domains, egocentric perception, guidance
//! providers, imitation learners and trajectory metrics.

pub mod domains;
pub mod experts;
pub mod geometry;
pub mod guidance;
pub mod learning;
pub mod metrics;
pub mod perception;
pub mod world;

pub use geometry::{Polygon, Segment, Vec2};
pub use world::{Scenario, SimConfig, TrajectoryLog};
