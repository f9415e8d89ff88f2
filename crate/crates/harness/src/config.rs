//! Experiment configuration with desk and paper presets.
//!
//! A config file is a JSON object overlaid on the preset chosen by `--scale`;
//! any key the schema does not know is rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crowdgen_core::domains::{
    build_standard_with, sample_representative, DomainError, GeneratorConfig, RandomPairConfig,
    StandardKind, StandardLayout,
};
use crowdgen_core::experts::ExpertParams;
use crowdgen_core::guidance::{GpHyper, PlannerConfig};
use crowdgen_core::learning::TrainConfig;
use crowdgen_core::perception::PerceptionConfig;
use crowdgen_core::world::{DomainTag, Scenario, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::ValidationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Paper,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

impl FromStr for Scale {
    type Err = ValidationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(ValidationError::Invalid(format!("unknown scale {s:?}"))),
        }
    }
}

/// Standard scenarios: every kind × density × seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardSet {
    pub kinds: Vec<StandardKind>,
    pub densities: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl StandardSet {
    pub fn len(&self) -> usize {
        self.kinds.len() * self.densities.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scenarios in kind, density, seed order.
    pub fn build(&self, layout: &StandardLayout) -> Result<Vec<Scenario>, DomainError> {
        let mut out = Vec::with_capacity(self.len());
        for &k in &self.kinds {
            for &d in &self.densities {
                for &s in &self.seeds {
                    out.push(build_standard_with(k, d, s, layout)?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub scale: Scale,
    /// Expert that produces the X and G demonstrations.
    pub expert: String,
    pub experts: ExpertParams,
    pub layout: StandardLayout,
    pub x_train: StandardSet,
    pub x_test: StandardSet,
    pub generator: GeneratorConfig,
    /// G training scenarios use seeds `0..g_train`.
    pub g_train: usize,
    /// G test scenarios use seeds `g_test_seed..g_test_seed + g_test`.
    pub g_test: usize,
    pub g_test_seed: u64,
    pub random_pairs: RandomPairConfig,
    pub r_pairs: usize,
    /// Upper bound on state-action pairs fed to behavior cloning, per domain.
    pub pair_budget: usize,
    pub train: TrainConfig,
    pub gail_iterations_x: usize,
    pub gail_iterations_g: usize,
    pub sim_x: SimConfig,
    pub sim_g: SimConfig,
    pub perception: PerceptionConfig,
    pub planner: PlannerConfig,
    pub gp: GpHyper,
}

impl HarnessConfig {
    pub fn preset(scale: Scale) -> Self {
        match scale {
            Scale::Desk => Self::desk(),
            Scale::Paper => Self::paper(),
        }
    }

    pub fn desk() -> Self {
        HarnessConfig {
            scale: Scale::Desk,
            expert: "social_force".into(),
            experts: ExpertParams::default(),
            layout: StandardLayout::default(),
            x_train: StandardSet {
                kinds: StandardKind::ALL.to_vec(),
                densities: vec![10, 20],
                seeds: vec![0],
            },
            x_test: StandardSet {
                kinds: vec![
                    StandardKind::Evacuation1,
                    StandardKind::ConcentricCircles,
                    StandardKind::HallwayTwoWay,
                ],
                densities: vec![10, 20],
                seeds: vec![100, 101, 102],
            },
            generator: GeneratorConfig::default(),
            g_train: 200,
            g_test: 20,
            g_test_seed: 1_000_000,
            random_pairs: RandomPairConfig::default(),
            r_pairs: 50_000,
            pair_budget: 50_000,
            train: TrainConfig::default(),
            gail_iterations_x: 2_000,
            gail_iterations_g: 2_000,
            sim_x: SimConfig::for_domain(DomainTag::X),
            sim_g: SimConfig::for_domain(DomainTag::G),
            perception: PerceptionConfig::default(),
            planner: PlannerConfig::default(),
            gp: GpHyper {
                max_samples: 500,
                ..GpHyper::default()
            },
        }
    }

    pub fn paper() -> Self {
        let densities = vec![10, 20, 30, 40, 50];
        HarnessConfig {
            scale: Scale::Paper,
            x_train: StandardSet {
                kinds: StandardKind::ALL.to_vec(),
                densities: densities.clone(),
                seeds: vec![0, 1, 2],
            },
            x_test: StandardSet {
                kinds: StandardKind::ALL.to_vec(),
                densities,
                seeds: vec![100, 101, 102],
            },
            g_train: 4_000,
            g_test: 100,
            r_pairs: 1_600_000,
            pair_budget: 1_600_000,
            train: TrainConfig {
                hidden: vec![100; 6],
                bc_steps: 200_000,
                ..TrainConfig::default()
            },
            gail_iterations_x: 10_000,
            gail_iterations_g: 6_000,
            gp: GpHyper::default(),
            ..Self::desk()
        }
    }

    /// Preset for `scale` overlaid with the keys of `overlay` (objects merge
    /// recursively, everything else replaces).
    pub fn from_overlay(scale: Scale, overlay: &Value) -> Result<Self, ValidationError> {
        let mut base = serde_json::to_value(Self::preset(scale)).expect("config serializes");
        merge(&mut base, overlay);
        let cfg: HarnessConfig = serde_json::from_value(base)
            .map_err(|e| ValidationError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path` over the preset. The file's own `scale` key, if present,
    /// must agree with `scale`.
    pub fn load(path: &Path, scale: Scale) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationError::Config(format!("{}: {e}", path.display())))?;
        let overlay: Value = serde_json::from_str(&text)
            .map_err(|e| ValidationError::Config(format!("{}: {e}", path.display())))?;
        if !overlay.is_object() {
            return Err(ValidationError::Config("config must be a JSON object".into()));
        }
        if let Some(s) = overlay.get("scale") {
            let file_scale: Scale = serde_json::from_value(s.clone())
                .map_err(|e| ValidationError::Config(e.to_string()))?;
            if file_scale != scale {
                return Err(ValidationError::Config(format!(
                    "config file is for scale {file_scale}, command line asks for {scale}"
                )));
            }
        }
        Self::from_overlay(scale, &overlay)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.train
            .validate()
            .map_err(|e| ValidationError::Config(e.to_string()))?;
        let bad = |m: String| Err(ValidationError::Config(m));
        if crowdgen_core::experts::ExpertRegistry::new(&self.experts)
            .get(&self.expert)
            .is_none()
        {
            return bad(format!("unknown expert {:?}", self.expert));
        }
        for (name, set) in [("x_train", &self.x_train), ("x_test", &self.x_test)] {
            if set.is_empty() {
                return bad(format!("{name} selects no scenarios"));
            }
            if let Some(d) = set
                .densities
                .iter()
                .find(|&&d| d == 0 || d > crowdgen_core::domains::MAX_DENSITY)
            {
                return bad(format!("{name} density {d} out of range"));
            }
        }
        if self.g_train == 0 || self.g_test == 0 {
            return bad("G train and test counts must be positive".into());
        }
        if (self.g_test_seed as u128) < self.g_train as u128 {
            return bad("G test seeds overlap the training seeds".into());
        }
        if self.r_pairs == 0 || self.pair_budget == 0 {
            return bad("pair counts must be positive".into());
        }
        if self.gail_iterations_x == 0 || self.gail_iterations_g == 0 {
            return bad("GAIL iteration counts must be positive".into());
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Representative scenarios for a seed range.
    pub fn representative(&self, seeds: std::ops::Range<u64>) -> Result<Vec<Scenario>, DomainError> {
        use rayon::prelude::*;
        seeds
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&s| sample_representative(s, &self.generator))
            .collect()
    }

    pub fn g_train_seeds(&self) -> std::ops::Range<u64> {
        0..self.g_train as u64
    }

    pub fn g_test_seeds(&self) -> std::ops::Range<u64> {
        self.g_test_seed..self.g_test_seed + self.g_test as u64
    }
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
