//! Multi-model runs: train several models, evaluate them on one test domain
//! and rank them jointly.

use std::path::Path;

use crowdgen_core::metrics::{rank_models, Metric, MetricReport, ModelRanks};

use crate::config::{HarnessConfig, Scale, StandardSet};
use crate::error::{ExperimentError, Stage, StageExt};
use crate::experiment::{run_experiment, Domain, ExperimentSpec, ModelId};
use crate::export::export_results;

/// Models exercised by `repro`.
pub const REPRO_MODELS: [ModelId; 3] = [ModelId::BcaR, ModelId::BcaG, ModelId::RlaG];

/// A seconds-scale configuration that still runs every pipeline stage.
pub fn quick_config(scale: Scale) -> HarnessConfig {
    let mut cfg = HarnessConfig::preset(scale);
    cfg.x_train = StandardSet {
        kinds: vec![
            crowdgen_core::domains::StandardKind::Evacuation1,
            crowdgen_core::domains::StandardKind::HallwayTwoWay,
        ],
        densities: vec![4],
        seeds: vec![0],
    };
    cfg.x_test = StandardSet {
        kinds: vec![crowdgen_core::domains::StandardKind::ConcentricCircles],
        densities: vec![4],
        seeds: vec![100],
    };
    cfg.generator.agents = (3, 4);
    cfg.g_train = 3;
    cfg.g_test = 2;
    cfg.r_pairs = 400;
    cfg.pair_budget = 400;
    cfg.train.hidden = vec![16, 16];
    cfg.train.bc_steps = 60;
    cfg.train.batch_size = 32;
    cfg.train.eval_interval = 20;
    cfg.train.rollouts_per_iteration = 2;
    cfg.gail_iterations_x = 3;
    cfg.gail_iterations_g = 3;
    cfg.sim_x.max_steps = 120;
    cfg.sim_g.max_steps = 120;
    cfg.gp.max_samples = 200;
    cfg
}

pub struct MultiRun {
    pub reports: Vec<MetricReport>,
    pub ranks: Vec<ModelRanks>,
}

impl MultiRun {
    pub fn ranks_of(&self, model: ModelId) -> Option<&ModelRanks> {
        self.ranks.iter().find(|r| r.model_id == model.as_str())
    }

    /// Whether `a` has a strictly lower mean rank than `b` on `metric`.
    pub fn better(&self, a: ModelId, b: ModelId, metric: Metric) -> Option<bool> {
        Some(self.ranks_of(a)?.get(metric) < self.ranks_of(b)?.get(metric))
    }
}

/// Runs each model's experiment into `out/<model>` and writes the joint
/// metric and rank files into `out`.
pub fn run_models(
    models: &[ModelId],
    test_domain: Domain,
    cfg: &HarnessConfig,
    seed: u64,
    out: &Path,
) -> Result<MultiRun, ExperimentError> {
    let mut reports = Vec::new();
    for &m in models {
        let spec = ExperimentSpec::new(m, test_domain, seed, cfg.scale, out.join(m.as_str()));
        log::info!("running {m} -> test {test_domain}");
        reports.extend(run_experiment(&spec, cfg)?.reports);
    }
    let ranks = rank_models(&reports).stage(Stage::Evaluate)?;
    export_results(&reports, &ranks, out).stage(Stage::Export)?;
    Ok(MultiRun { reports, ranks })
}

/// The determinism run: the repro models, tested on G.
pub fn repro(cfg: &HarnessConfig, seed: u64, out: &Path) -> Result<MultiRun, ExperimentError> {
    run_models(&REPRO_MODELS, Domain::G, cfg, seed, out)
}

/// BCA-G against RLA-G on the X test set.
pub fn bidirectional(cfg: &HarnessConfig, seed: u64, out: &Path) -> Result<MultiRun, ExperimentError> {
    run_models(&[ModelId::BcaG, ModelId::RlaG], Domain::X, cfg, seed, out)
}
