//! The five paradigm-domain model combinations and the train → evaluate pipeline.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use crowdgen_core::domains::sample_random_pair;
use crowdgen_core::experts::ExpertRegistry;
use crowdgen_core::guidance::{fit_gp, AStarGuidance, GpGuidance, GuidanceProvider};
use crowdgen_core::learning::{
    bc_train, expert_pairs, gail_train, BcTrace, Dataset, GailTrace, PolicyController,
    PolicyModel, TrainConfig,
};
use crowdgen_core::metrics::{count_aa, count_ao, rank_models, scenario_dtw, MetricReport, ModelRanks};
use crowdgen_core::perception::{encode, FEATURE_LEN};
use crowdgen_core::world::{run_simulation, step_rng, Scenario, SimConfig, TrajectoryLog};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{HarnessConfig, Scale};
use crate::error::{ExperimentError, Stage, StageExt, ValidationError};
use crate::export::export_results;
use crate::ingest::read_windows;
use crate::manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    X,
    G,
    R,
    #[serde(rename = "real")]
    Real,
}

impl Domain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::X => "X",
            Domain::G => "G",
            Domain::R => "R",
            Domain::Real => "real",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = ValidationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Domain::X),
            "g" => Ok(Domain::G),
            "r" => Ok(Domain::R),
            "real" => Ok(Domain::Real),
            _ => Err(ValidationError::Invalid(format!("unknown domain {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    Bca,
    Rla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "BCA-X")]
    BcaX,
    #[serde(rename = "BCA-G")]
    BcaG,
    #[serde(rename = "BCA-R")]
    BcaR,
    #[serde(rename = "RLA-X")]
    RlaX,
    #[serde(rename = "RLA-G")]
    RlaG,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::BcaX,
        ModelId::BcaG,
        ModelId::BcaR,
        ModelId::RlaX,
        ModelId::RlaG,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::BcaX => "BCA-X",
            ModelId::BcaG => "BCA-G",
            ModelId::BcaR => "BCA-R",
            ModelId::RlaX => "RLA-X",
            ModelId::RlaG => "RLA-G",
        }
    }

    pub fn paradigm(&self) -> Paradigm {
        match self {
            ModelId::BcaX | ModelId::BcaG | ModelId::BcaR => Paradigm::Bca,
            ModelId::RlaX | ModelId::RlaG => Paradigm::Rla,
        }
    }

    pub fn train_domain(&self) -> Domain {
        match self {
            ModelId::BcaX | ModelId::RlaX => Domain::X,
            ModelId::BcaG | ModelId::RlaG => Domain::G,
            ModelId::BcaR => Domain::R,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = ValidationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('_', "-");
        if norm == "RLA-R" {
            return Err(ValidationError::RlaOnRandom(norm));
        }
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| ValidationError::Invalid(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model: ModelId,
    pub train_domain: Domain,
    pub test_domain: Domain,
    pub seed: u64,
    pub scale: Scale,
    pub out_dir: PathBuf,
    /// Directory written by `ingest`, required when testing on real data.
    pub real_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(model: ModelId, test_domain: Domain, seed: u64, scale: Scale, out_dir: PathBuf) -> Self {
        ExperimentSpec {
            model,
            train_domain: model.train_domain(),
            test_domain,
            seed,
            scale,
            out_dir,
            real_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.model.paradigm() == Paradigm::Rla && self.train_domain == Domain::R {
            return Err(ValidationError::RlaOnRandom(self.model.to_string()));
        }
        if self.train_domain != self.model.train_domain() {
            return Err(ValidationError::DomainMismatch {
                model: self.model.to_string(),
                expected: self.model.train_domain().to_string(),
                got: self.train_domain.to_string(),
            });
        }
        match self.test_domain {
            Domain::R => Err(ValidationError::Invalid(
                "the random domain has no test scenarios".into(),
            )),
            Domain::Real if self.real_dir.is_none() => Err(ValidationError::Invalid(
                "testing on real data needs an ingested directory".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// A scenario with its expert reference log and the guidance an imitator gets in it.
pub struct Demo {
    pub scenario: Scenario,
    pub log: TrajectoryLog,
    pub provider: Box<dyn GuidanceProvider>,
}

impl Demo {
    pub fn radii(&self) -> Vec<f64> {
        self.scenario.tasks.iter().map(|t| t.radius).collect()
    }
}

pub fn sim_for(domain: Domain, cfg: &HarnessConfig) -> &SimConfig {
    match domain {
        Domain::X => &cfg.sim_x,
        _ => &cfg.sim_g,
    }
}

/// Simulates the expert named by the config with A* guidance.
pub fn expert_log(scenario: &Scenario, cfg: &HarnessConfig, sim: &SimConfig) -> anyhow::Result<TrajectoryLog> {
    let registry = ExpertRegistry::new(&cfg.experts);
    let name = scenario.expert.as_deref().unwrap_or(&cfg.expert);
    let expert = registry
        .get(name)
        .ok_or_else(|| anyhow!("scenario {} names unknown expert {name:?}", scenario.id))?;
    let guide = AStarGuidance::plan(scenario, &cfg.planner);
    let mut controller = expert.controller(&guide, sim.rng_seed);
    Ok(run_simulation(scenario, controller.as_mut(), sim)?)
}

/// Local guidance for imitators: GP flow fitted on the expert log in X, A* elsewhere.
pub fn imitator_provider(
    domain: Domain,
    scenario: &Scenario,
    log: &TrajectoryLog,
    cfg: &HarnessConfig,
) -> anyhow::Result<Box<dyn GuidanceProvider>> {
    Ok(match domain {
        Domain::X => Box::new(GpGuidance {
            model: fit_gp(std::slice::from_ref(log), cfg.gp, 0)
                .with_context(|| format!("GP fit on {}", scenario.id))?,
            fallback_std: cfg.gp.fallback_std,
        }),
        _ => Box::new(AStarGuidance::plan(scenario, &cfg.planner)),
    })
}

/// Expert demonstrations for simulated scenarios, in input order.
pub fn demonstrations(scenarios: Vec<Scenario>, domain: Domain, cfg: &HarnessConfig) -> anyhow::Result<Vec<Demo>> {
    let sim = sim_for(domain, cfg);
    scenarios
        .into_par_iter()
        .map(|scenario| {
            let log = expert_log(&scenario, cfg, sim)?;
            let provider = imitator_provider(domain, &scenario, &log, cfg)?;
            Ok(Demo {
                scenario,
                log,
                provider,
            })
        })
        .collect()
}

/// Training scenarios for X or G.
pub fn train_scenarios(domain: Domain, cfg: &HarnessConfig) -> anyhow::Result<Vec<Scenario>> {
    match domain {
        Domain::X => Ok(cfg.x_train.build(&cfg.layout)?),
        Domain::G => Ok(cfg.representative(cfg.g_train_seeds())?),
        other => Err(anyhow!("no simulated training scenarios in domain {other}")),
    }
}

/// Test demonstrations for X, G or ingested real windows.
pub fn test_demos(domain: Domain, cfg: &HarnessConfig, real_dir: Option<&Path>) -> anyhow::Result<Vec<Demo>> {
    match domain {
        Domain::X => demonstrations(cfg.x_test.build(&cfg.layout)?, domain, cfg),
        Domain::G => demonstrations(cfg.representative(cfg.g_test_seeds())?, domain, cfg),
        Domain::Real => {
            let dir = real_dir.ok_or_else(|| anyhow!("real test domain needs a directory"))?;
            read_windows(dir, cfg.sim_g.dt)?
                .into_iter()
                .map(|(scenario, log)| {
                    let provider = imitator_provider(Domain::Real, &scenario, &log, cfg)?;
                    Ok(Demo {
                        scenario,
                        log,
                        provider,
                    })
                })
                .collect()
        }
        Domain::R => Err(anyhow!("the random domain has no test scenarios")),
    }
}

fn mix(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keeps `budget` rows uniformly at random, preserving order.
pub fn subsample(ds: Dataset, budget: usize, seed: u64) -> Dataset {
    if ds.len() <= budget {
        return ds;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = index::sample(&mut rng, ds.len(), budget).into_vec();
    rows.sort_unstable();
    ds.select(&rows)
}

/// Observation-action pairs along the expert logs, thinned so that about
/// `budget` pairs survive.
pub fn demo_dataset(demos: &[Demo], domain: Domain, cfg: &HarnessConfig, budget: usize, seed: u64) -> anyhow::Result<Dataset> {
    let sim = sim_for(domain, cfg);
    let total: usize = demos.iter().map(|d| d.log.transitions()).sum();
    // a little slack so the final exact subsample rarely runs short
    let p = (1.05 * budget as f64 / total.max(1) as f64).min(1.0);
    let parts: Vec<Dataset> = demos
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let s = mix(seed, i as u64);
            expert_pairs(&d.scenario, &d.log, d.provider.as_ref(), &cfg.perception, sim, |a, t| {
                p >= 1.0 || step_rng(s, a, t).gen::<f64>() < p
            })
            .map_err(anyhow::Error::from)
        })
        .collect::<anyhow::Result<_>>()?;
    let mut ds = Dataset::new(FEATURE_LEN);
    for part in &parts {
        ds.extend(part);
    }
    Ok(subsample(ds, budget, mix(seed, u64::MAX)))
}

/// Independent random-domain snapshots labeled by ORCA.
pub fn random_dataset(cfg: &HarnessConfig, count: usize, seed: u64) -> Dataset {
    const CHUNK: usize = 4096;
    let parts: Vec<Dataset> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut ds = Dataset::new(FEATURE_LEN);
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let pair = sample_random_pair(
                    mix(seed, i as u64),
                    &cfg.random_pairs,
                    &cfg.experts.orca,
                    &cfg.perception,
                );
                ds.push(&encode(&pair.observation, &cfg.perception), pair.expert_action);
            }
            ds
        })
        .collect();
    let mut ds = Dataset::new(FEATURE_LEN);
    for part in &parts {
        ds.extend(part);
    }
    ds
}

pub enum TrainTrace {
    Bc(BcTrace),
    Gail(GailTrace),
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        match self {
            TrainTrace::Bc(t) => {
                let mut s = String::from("iteration,loss,eval_loss\n");
                let mut evals = t.eval.iter().peekable();
                for (i, l) in t.step_loss.iter().enumerate() {
                    let done = i + 1;
                    let eval = match evals.peek() {
                        Some(&&(step, e)) if step == done => {
                            evals.next();
                            e.to_string()
                        }
                        _ => String::new(),
                    };
                    s.push_str(&format!("{done},{l},{eval}\n"));
                }
                s
            }
            TrainTrace::Gail(t) => t.to_csv(),
        }
    }
}

pub struct TrainedModel {
    pub model: ModelId,
    pub policy: PolicyModel,
    pub trace: TrainTrace,
    /// State-action pairs (BC) or expert pairs (GAIL) used.
    pub pairs: usize,
}

fn train_config(model: ModelId, cfg: &HarnessConfig, seed: u64) -> TrainConfig {
    let gail_iterations = match model.train_domain() {
        Domain::X => cfg.gail_iterations_x,
        _ => cfg.gail_iterations_g,
    };
    TrainConfig {
        rng_seed: seed,
        gail_iterations,
        ..cfg.train.clone()
    }
}

/// Builds the training data for `model` and trains it.
pub fn train_model(model: ModelId, cfg: &HarnessConfig, seed: u64) -> Result<TrainedModel, ExperimentError> {
    let tc = train_config(model, cfg, seed);
    let domain = model.train_domain();
    match model.paradigm() {
        Paradigm::Bca => {
            let ds = if domain == Domain::R {
                random_dataset(cfg, cfg.r_pairs.min(cfg.pair_budget), seed)
            } else {
                let scenarios = train_scenarios(domain, cfg).stage(Stage::Generate)?;
                let demos = demonstrations(scenarios, domain, cfg).stage(Stage::Expert)?;
                demo_dataset(&demos, domain, cfg, cfg.pair_budget, seed).stage(Stage::Expert)?
            };
            log::info!("{model}: behavior cloning on {} pairs", ds.len());
            let (policy, trace) = bc_train(&ds, &tc).stage(Stage::Train)?;
            Ok(TrainedModel {
                model,
                policy,
                trace: TrainTrace::Bc(trace),
                pairs: ds.len(),
            })
        }
        Paradigm::Rla => {
            let scenarios = train_scenarios(domain, cfg).stage(Stage::Generate)?;
            let demos = demonstrations(scenarios, domain, cfg).stage(Stage::Expert)?;
            let pairs = demos.iter().map(|d| d.log.transitions()).sum();
            let sc: Vec<Scenario> = demos.iter().map(|d| d.scenario.clone()).collect();
            let logs: Vec<TrajectoryLog> = demos.iter().map(|d| d.log.clone()).collect();
            let providers: Vec<&dyn GuidanceProvider> = demos.iter().map(|d| d.provider.as_ref()).collect();
            log::info!("{model}: adversarial training on {} scenarios", sc.len());
            let (policy, trace) = gail_train(
                &sc,
                &logs,
                &providers,
                &tc,
                sim_for(domain, cfg),
                &cfg.perception,
            )
            .stage(Stage::Train)?;
            Ok(TrainedModel {
                model,
                policy,
                trace: TrainTrace::Gail(trace),
                pairs,
            })
        }
    }
}

/// Deterministic rollout of `policy` in one demo scenario.
pub fn policy_log(policy: &PolicyModel, demo: &Demo, cfg: &HarnessConfig, sim: &SimConfig) -> anyhow::Result<TrajectoryLog> {
    let policy = policy.clone().into_deterministic();
    let mut controller = PolicyController::new(&policy, demo.provider.as_ref(), &cfg.perception, sim.rng_seed);
    Ok(run_simulation(&demo.scenario, &mut controller, sim)?)
}

pub fn report_for(model_id: &str, demo: &Demo, log: &TrajectoryLog) -> MetricReport {
    let radii = demo.radii();
    MetricReport {
        scenario_id: demo.scenario.id.clone(),
        model_id: model_id.to_string(),
        dtw: scenario_dtw(log, &demo.log),
        aa: count_aa(log, &radii),
        ao: count_ao(log, &demo.scenario.obstacles, &radii),
    }
}

/// Metric reports of `policy` over the test demos, in demo order.
pub fn evaluate(
    policy: &PolicyModel,
    model_id: &str,
    demos: &[Demo],
    domain: Domain,
    cfg: &HarnessConfig,
) -> anyhow::Result<Vec<MetricReport>> {
    let sim = sim_for(domain, cfg);
    demos
        .par_iter()
        .map(|d| {
            let log = policy_log(policy, d, cfg, sim)?;
            Ok(report_for(model_id, d, &log))
        })
        .collect()
}

pub struct ExperimentOutput {
    pub reports: Vec<MetricReport>,
    pub ranks: Vec<ModelRanks>,
    pub manifest: Manifest,
}

/// Trains the spec's model, evaluates it on the test domain and writes the
/// model file, training trace, metric and rank CSVs and a manifest into
/// `spec.out_dir`. A failed run leaves a manifest marked invalid.
pub fn run_experiment(spec: &ExperimentSpec, cfg: &HarnessConfig) -> Result<ExperimentOutput, ExperimentError> {
    spec.validate()?;
    cfg.validate()?;
    std::fs::create_dir_all(&spec.out_dir).stage(Stage::Export)?;
    let mut manifest = Manifest::new(spec, cfg);
    manifest.write(&spec.out_dir).stage(Stage::Export)?;
    match run_stages(spec, cfg, &mut manifest) {
        Ok((reports, ranks)) => {
            manifest.valid = true;
            manifest.write(&spec.out_dir).stage(Stage::Export)?;
            Ok(ExperimentOutput {
                reports,
                ranks,
                manifest,
            })
        }
        Err(e) => {
            manifest.failed_stage = e.stage().map(|s| s.to_string());
            manifest.error = Some(e.to_string());
            // best effort: the original error matters more than this write
            let _ = manifest.write(&spec.out_dir);
            Err(e)
        }
    }
}

fn run_stages(
    spec: &ExperimentSpec,
    cfg: &HarnessConfig,
    manifest: &mut Manifest,
) -> Result<(Vec<MetricReport>, Vec<ModelRanks>), ExperimentError> {
    let trained = train_model(spec.model, cfg, spec.seed)?;
    manifest.training_pairs = Some(trained.pairs);
    let out = &spec.out_dir;
    let model_json = trained
        .policy
        .to_file()
        .to_json()
        .stage(Stage::Export)?;
    std::fs::write(out.join("model.json"), model_json).stage(Stage::Export)?;
    std::fs::write(out.join("trace.csv"), trained.trace.to_csv()).stage(Stage::Export)?;
    manifest.artifacts.extend(["model.json".into(), "trace.csv".into()]);

    let demos = test_demos(spec.test_domain, cfg, spec.real_dir.as_deref()).stage(Stage::Evaluate)?;
    let reports = evaluate(&trained.policy, spec.model.as_str(), &demos, spec.test_domain, cfg)
        .stage(Stage::Evaluate)?;
    let ranks = rank_models(&reports).stage(Stage::Evaluate)?;
    let files = export_results(&reports, &ranks, out).stage(Stage::Export)?;
    manifest.artifacts.extend(files);
    Ok((reports, ranks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_ids_round_trip() {
        for m in ModelId::ALL {
            assert_eq!(m.as_str().parse::<ModelId>().unwrap(), m);
        }
        assert_eq!("bca_g".parse::<ModelId>().unwrap(), ModelId::BcaG);
        assert!(matches!(
            "RLA-R".parse::<ModelId>(),
            Err(ValidationError::RlaOnRandom(_))
        ));
    }

    #[test]
    fn rla_on_random_rejected() {
        let mut spec = ExperimentSpec::new(ModelId::RlaG, Domain::G, 0, Scale::Desk, "o".into());
        spec.validate().unwrap();
        spec.train_domain = Domain::R;
        assert!(matches!(spec.validate(), Err(ValidationError::RlaOnRandom(_))));
    }

    #[test]
    fn train_domain_must_match_model() {
        let mut spec = ExperimentSpec::new(ModelId::BcaX, Domain::G, 0, Scale::Desk, "o".into());
        spec.train_domain = Domain::G;
        assert!(matches!(spec.validate(), Err(ValidationError::DomainMismatch { .. })));
    }

    #[test]
    fn test_domain_checks() {
        let spec = ExperimentSpec::new(ModelId::BcaR, Domain::R, 0, Scale::Desk, "o".into());
        assert!(spec.validate().is_err());
        let spec = ExperimentSpec::new(ModelId::BcaR, Domain::Real, 0, Scale::Desk, "o".into());
        assert!(spec.validate().is_err());
    }

    #[test]
    fn subsample_keeps_order_and_size() {
        let mut ds = Dataset::new(1);
        for i in 0..100 {
            ds.push(&[i as f64], crowdgen_core::Vec2::ZERO);
        }
        let s = subsample(ds, 10, 3);
        assert_eq!(s.len(), 10);
        let v: Vec<f32> = (0..10).map(|i| s.features_of(i)[0]).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }
}
