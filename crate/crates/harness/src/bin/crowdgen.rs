use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use crowdgen_core::experts::ExpertRegistry;
use crowdgen_core::guidance::{AStarGuidance, GlobalGuidance, GuidanceProvider};
use crowdgen_core::learning::{ModelFile, PolicyModel};
use crowdgen_core::metrics::rank_models;
use crowdgen_core::world::{run_simulation, Scenario, TrajectoryLog};
use crowdgen_harness::experiment::{
    evaluate, random_dataset, run_experiment, test_demos, train_model, train_scenarios, Domain,
    ExperimentSpec, ModelId,
};
use crowdgen_harness::export::{export_results, read_metrics};
use crowdgen_harness::ingest::{ingest_trajectories, write_windows};
use crowdgen_harness::render::{render_svg, RenderOptions};
use crowdgen_harness::repro::{quick_config, repro, run_models, REPRO_MODELS};
use crowdgen_harness::{ExperimentError, HarnessConfig, Scale, ValidationError};

#[derive(Parser)]
#[command(name = "crowdgen", version, about = "Crowd imitation-learning benchmark")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed for training, sampling and subsampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Preset: desk or paper.
    #[arg(long, global = true, default_value = "desk")]
    scale: String,
    /// JSON file overlaid on the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write scenario JSON files (X, G) or a random-domain dataset (R).
    Gen {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        out: PathBuf,
        /// Use the test split instead of the training split.
        #[arg(long)]
        test: bool,
        /// Number of R pairs (default from config).
        #[arg(long)]
        count: Option<usize>,
        /// R dataset format: csv or bin.
        #[arg(long, default_value = "bin")]
        format: String,
    },
    /// Simulate an expert on one scenario and write the trajectory CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Expert name (default: the scenario's own, then the config's).
        #[arg(long)]
        expert: Option<String>,
        /// Local guidance: astar or global.
        #[arg(long, default_value = "astar")]
        guidance: String,
    },
    /// Train one model and write model.json and trace.csv.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a trained model file on a test domain.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
        /// Name written into the metric rows.
        #[arg(long)]
        model_id: String,
        #[arg(long)]
        test: String,
        #[arg(long)]
        real_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate one model, with manifest.
    Run {
        #[arg(long)]
        model: String,
        #[arg(long)]
        test: String,
        #[arg(long)]
        real_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank models from one or more metric CSVs.
    Rank {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
    },
    /// Render a scenario and trajectory CSVs as SVG.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long = "log")]
        logs: Vec<PathBuf>,
        /// Draw A* waypoints.
        #[arg(long)]
        waypoints: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split timestamped trajectories into windowed scenarios.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        /// Scenario JSON holding bounds and obstacles.
        #[arg(long)]
        scenario: PathBuf,
        /// Window length in seconds.
        #[arg(long, default_value_t = 240.0)]
        window: f64,
        /// Window stride in seconds.
        #[arg(long, default_value_t = 120.0)]
        stride: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the repro models, test on G and write joint metric and rank CSVs.
    Repro {
        #[arg(long)]
        out: PathBuf,
        /// Seconds-scale sizes instead of the preset.
        #[arg(long)]
        quick: bool,
        /// Comma-separated model ids (default BCA-R,BCA-G,RLA-G).
        #[arg(long)]
        models: Option<String>,
        #[arg(long, default_value = "G")]
        test: String,
    },
}

fn load_config(c: &Common) -> Result<HarnessConfig> {
    let scale: Scale = c.scale.parse()?;
    Ok(match &c.config {
        Some(p) => HarnessConfig::load(p, scale)?,
        None => HarnessConfig::preset(scale),
    })
}

fn read_scenario(p: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
    Ok(Scenario::from_json(&text).with_context(|| p.display().to_string())?)
}

fn read_log(p: &Path, dt: f64) -> Result<Vec<TrajectoryLog>> {
    let f = std::fs::File::open(p).with_context(|| p.display().to_string())?;
    Ok(TrajectoryLog::read_csv(BufReader::new(f), dt)?)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes).with_context(|| path.display().to_string())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let seed = cli.common.seed;
    match cli.command {
        Command::Gen {
            domain,
            out,
            test,
            count,
            format,
        } => {
            let domain: Domain = domain.parse()?;
            std::fs::create_dir_all(&out)?;
            if domain == Domain::R {
                let ds = random_dataset(&cfg, count.unwrap_or(cfg.r_pairs), seed);
                let mut buf = Vec::new();
                let name = match format.as_str() {
                    "csv" => {
                        ds.write_csv(&mut buf)?;
                        "random_pairs.csv"
                    }
                    "bin" => {
                        ds.write_binary(&mut buf)?;
                        "random_pairs.bin"
                    }
                    other => bail!(ValidationError::Invalid(format!("unknown format {other:?}"))),
                };
                write_atomic(&out.join(name), &buf)?;
                println!("{} pairs -> {}", ds.len(), out.join(name).display());
            } else {
                let scenarios = match (domain, test) {
                    (Domain::X, true) => cfg.x_test.build(&cfg.layout)?,
                    (Domain::G, true) => cfg.representative(cfg.g_test_seeds())?,
                    (Domain::X | Domain::G, false) => train_scenarios(domain, &cfg)?,
                    _ => bail!(ValidationError::Invalid(format!("cannot generate domain {domain}"))),
                };
                for s in &scenarios {
                    write_atomic(&out.join(format!("{}.json", s.id)), s.to_json()?.as_bytes())?;
                }
                println!("{} scenarios -> {}", scenarios.len(), out.display());
            }
        }
        Command::Simulate {
            scenario,
            out,
            expert,
            guidance,
        } => {
            let s = read_scenario(&scenario)?;
            s.validate()?;
            let registry = ExpertRegistry::new(&cfg.experts);
            let name = expert
                .or_else(|| s.expert.clone())
                .unwrap_or_else(|| cfg.expert.clone());
            let Some(e) = registry.get(&name) else {
                bail!(ValidationError::Invalid(format!("unknown expert {name:?}")));
            };
            let provider: Box<dyn GuidanceProvider> = match guidance.as_str() {
                "astar" => Box::new(AStarGuidance::plan(&s, &cfg.planner)),
                "global" => Box::new(GlobalGuidance),
                other => bail!(ValidationError::Invalid(format!("unknown guidance {other:?}"))),
            };
            let sim = if s.domain_tag == crowdgen_core::world::DomainTag::X {
                &cfg.sim_x
            } else {
                &cfg.sim_g
            };
            let mut c = e.controller(provider.as_ref(), sim.rng_seed);
            let log = run_simulation(&s, c.as_mut(), sim)?;
            let mut buf = Vec::new();
            log.write_csv(&mut buf, true)?;
            write_atomic(&out, &buf)?;
            println!("{} transitions -> {}", log.transitions(), out.display());
        }
        Command::Train { model, out } => {
            let model: ModelId = model.parse()?;
            let trained = train_model(model, &cfg, seed)?;
            std::fs::create_dir_all(&out)?;
            write_atomic(&out.join("model.json"), trained.policy.to_file().to_json()?.as_bytes())?;
            write_atomic(&out.join("trace.csv"), trained.trace.to_csv().as_bytes())?;
            println!("{model}: trained on {} pairs -> {}", trained.pairs, out.display());
        }
        Command::Evaluate {
            model_file,
            model_id,
            test,
            real_dir,
            out,
        } => {
            let test: Domain = test.parse()?;
            if test == Domain::R {
                bail!(ValidationError::Invalid("the random domain has no test scenarios".into()));
            }
            let text = std::fs::read_to_string(&model_file)
                .with_context(|| model_file.display().to_string())?;
            let policy = PolicyModel::from_file(&ModelFile::from_json(&text)?)?;
            let demos = test_demos(test, &cfg, real_dir.as_deref())?;
            let reports = evaluate(&policy, &model_id, &demos, test, &cfg)?;
            let ranks = rank_models(&reports)?;
            export_results(&reports, &ranks, &out)?;
            println!("{} scenarios evaluated -> {}", reports.len(), out.display());
        }
        Command::Run {
            model,
            test,
            real_dir,
            out,
        } => {
            let mut spec = ExperimentSpec::new(model.parse()?, test.parse()?, seed, cfg.scale, out);
            spec.real_dir = real_dir;
            let res = run_experiment(&spec, &cfg)?;
            for r in &res.ranks {
                println!("{}: dtw {:.3} aa {:.3} ao {:.3}", r.model_id, r.dtw, r.aa, r.ao);
            }
        }
        Command::Rank { out, metrics } => {
            let mut reports = Vec::new();
            for p in &metrics {
                let f = std::fs::File::open(p).with_context(|| p.display().to_string())?;
                reports.extend(read_metrics(BufReader::new(f)).with_context(|| p.display().to_string())?);
            }
            let ranks = rank_models(&reports)?;
            export_results(&reports, &ranks, &out)?;
            for r in &ranks {
                println!(
                    "{}: dtw {:.3} aa {:.3} ao {:.3} overall {:.3}",
                    r.model_id, r.dtw, r.aa, r.ao, r.overall
                );
            }
        }
        Command::Render {
            scenario,
            logs,
            waypoints,
            out,
        } => {
            let s = read_scenario(&scenario)?;
            let mut all = Vec::new();
            for p in &logs {
                all.extend(read_log(p, cfg.sim_g.dt)?);
            }
            let opts = RenderOptions {
                waypoints: waypoints.then(|| AStarGuidance::plan(&s, &cfg.planner).routes),
                ..RenderOptions::default()
            };
            write_atomic(&out, render_svg(&s, &all, &opts).as_bytes())?;
        }
        Command::Ingest {
            csv,
            scenario,
            window,
            stride,
            out,
        } => {
            let windows = ingest_trajectories(&csv, &scenario, window, stride, cfg.sim_g.dt)?;
            write_windows(&out, &windows)?;
            println!("{} windows -> {}", windows.len(), out.display());
        }
        Command::Repro {
            out,
            quick,
            models,
            test,
        } => {
            let cfg = if quick { quick_config(cfg.scale) } else { cfg };
            let test: Domain = test.parse()?;
            let run = match models {
                None if test == Domain::G => repro(&cfg, seed, &out)?,
                None => run_models(&REPRO_MODELS, test, &cfg, seed, &out)?,
                Some(list) => {
                    let ids = list
                        .split(',')
                        .map(|m| m.trim().parse::<ModelId>())
                        .collect::<Result<Vec<_>, _>>()?;
                    run_models(&ids, test, &cfg, seed, &out)?
                }
            };
            for r in &run.ranks {
                println!(
                    "{}: dtw {:.3} aa {:.3} ao {:.3} overall {:.3}",
                    r.model_id, r.dtw, r.aa, r.ao, r.overall
                );
            }
        }
    }
    Ok(())
}

fn is_validation(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<ValidationError>().is_some()
            || matches!(
                c.downcast_ref::<ExperimentError>(),
                Some(ExperimentError::Validation(_))
            )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = std::env::var("CROWDGEN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_validation(&e) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
