#[path = "support/oracles.rs"]
mod oracles;

use std::ops::Range;

use crowdgen_core::domains::{sample_representative, GeneratorConfig};
use crowdgen_core::guidance::{AStarGuidance, GuidanceProvider, PlannerConfig};
use crowdgen_core::learning::gail::{
    discriminator_objective, discriminator_step_eval, evaluate_discriminator, kl_bound, mean_kl,
    policy_step_with_rewards, rollout, surrogate_and_grad, surrogate_value, Discriminator,
    PolicyBatch,
};
use crowdgen_core::learning::{
    bc_train, expert_pairs, gail_train, mse, Dataset, Mlp, PolicyModel, RmsProp, TrainConfig,
};
use crowdgen_core::perception::PerceptionConfig;
use crowdgen_core::world::{run_simulation, SimConfig};
use crowdgen_core::{Scenario, Vec2};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
}

fn random_mlp(rng: &mut ChaCha8Rng, input: usize, output: usize) -> Mlp {
    let mut sizes = vec![input];
    for _ in 0..rng.gen_range(1..=3) {
        sizes.push(rng.gen_range(2..=6));
    }
    sizes.push(output);
    Mlp::new(&sizes, rng)
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let input = rng.gen_range(1..=5);
        let output = rng.gen_range(1..=3);
        let rows = rng.gen_range(1..=5);
        let mlp = random_mlp(&mut rng, input, output);
        let x = random_matrix(&mut rng, rows, input, 2.0);
        let w = random_matrix(&mut rng, rows, output, 1.0);
        let loss = |m: &Mlp| (m.forward_batch(x.view()).unwrap() * &w).sum();
        let cache = mlp.forward_cached(x.view()).unwrap();
        let analytic = mlp.backward(&cache, w.view()).to_flat();
        let numeric = oracles::fd_gradient(&mlp, 1e-5, loss);
        let err = oracles::relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "case {case}: relative error {err}");
    }
}

#[test]
fn discriminator_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let input = rng.gen_range(2..=6);
        let mlp = random_mlp(&mut rng, input, 1);
        let (np, ne) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let px = random_matrix(&mut rng, np, input, 2.0);
        let ex = random_matrix(&mut rng, ne, input, 2.0);
        let (_, g) = discriminator_objective(&mlp, px.view(), ex.view()).unwrap();
        let numeric = oracles::fd_gradient(&mlp, 1e-5, |m| {
            discriminator_objective(m, px.view(), ex.view()).unwrap().0
        });
        let err = oracles::relative_error(&g.to_flat(), &numeric);
        assert!(err < 1e-4, "case {case}: relative error {err}");
    }
}

#[test]
fn surrogate_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (sigma, clip) = (0.5, 0.2);
    for case in 0..100 {
        let input = rng.gen_range(1..=5);
        let rows = rng.gen_range(1..=6);
        let mlp = random_mlp(&mut rng, input, 2);
        let x = random_matrix(&mut rng, rows, input, 2.0);
        let means = mlp.forward_batch(x.view()).unwrap();
        let policy = PolicyModel::new(mlp.clone(), sigma);
        let mut actions = Vec::new();
        let mut old = Vec::new();
        for i in 0..rows {
            let mean = Vec2::new(means[[i, 0]], means[[i, 1]]);
            let a = mean + Vec2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            // log ratio kept away from the clip kinks at 1 ± clip
            let log_ratio = loop {
                let r: f64 = rng.gen_range(-0.5..0.5);
                if ((1.0 - clip) - r.exp()).abs() > 0.03 && ((1.0 + clip) - r.exp()).abs() > 0.03 {
                    break r;
                }
            };
            old.push(policy.log_prob(mean, a) - log_ratio);
            actions.push(a);
        }
        let adv: Vec<f64> = (0..rows).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lambda = rng.gen_range(0.0..0.1);
        let (_, g) =
            surrogate_and_grad(&mlp, x.view(), &actions, &old, &adv, sigma, clip, lambda).unwrap();
        let numeric = oracles::fd_gradient(&mlp, 1e-5, |m| {
            let means = m.forward_batch(x.view()).unwrap();
            surrogate_value(means.view(), &actions, &old, &adv, sigma, clip, lambda)
        });
        let err = oracles::relative_error(&g.to_flat(), &numeric);
        assert!(err < 1e-4, "case {case}: relative error {err}");
    }
}

#[test]
fn entropy_weight_does_not_change_the_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mlp = random_mlp(&mut rng, 3, 2);
    let x = random_matrix(&mut rng, 8, 3, 1.0);
    let actions: Vec<Vec2> = (0..8).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
    let old = vec![-1.0; 8];
    let adv: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (v0, g0) = surrogate_and_grad(&mlp, x.view(), &actions, &old, &adv, 0.5, 0.2, 0.0).unwrap();
    let (v1, g1) = surrogate_and_grad(&mlp, x.view(), &actions, &old, &adv, 0.5, 0.2, 0.3).unwrap();
    assert_eq!(g0.to_flat(), g1.to_flat());
    assert!(v1 > v0);
}

fn linear_teacher(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = Dataset::new(4);
    for _ in 0..n {
        let f: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = Vec2::new(
            0.5 * f[0] - 0.3 * f[1] + 0.2 * f[3],
            0.1 * f[0] + 0.4 * f[2] - 0.25 * f[3],
        );
        ds.push(&f, a);
    }
    ds
}

#[test]
fn bc_fits_a_linear_teacher() {
    let ds = linear_teacher(2000, 1);
    let cfg = TrainConfig {
        hidden: vec![8, 8],
        bc_lr: 1e-3,
        bc_steps: 5000,
        batch_size: 64,
        ..Default::default()
    };
    let (model, trace) = bc_train(&ds, &cfg).unwrap();
    let rows: Vec<usize> = (0..ds.len()).collect();
    let (x, y) = ds.batch(&rows);
    let final_mse = mse(&model.mlp, x.view(), y.view()).unwrap();
    assert!(final_mse < 1e-3, "final MSE {final_mse}");
    // windowed minibatch loss never rises by more than noise
    let windows: Vec<f64> = trace
        .step_loss
        .chunks(500)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    for w in windows.windows(2).take(4) {
        assert!(w[1] <= w[0] * 1.05, "windowed loss rose: {windows:?}");
    }
    assert!(model.deterministic);
}

#[test]
fn rmsprop_moves_against_the_gradient() {
    let ds = linear_teacher(64, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut mlp = Mlp::new(&[4, 6, 2], &mut rng);
    let rows: Vec<usize> = (0..64).collect();
    let (x, y) = ds.batch(&rows);
    let before = mse(&mlp, x.view(), y.view()).unwrap();
    let (_, g) = crowdgen_core::learning::mse_loss_and_grad(&mlp, x.view(), y.view()).unwrap();
    RmsProp::new(1e-4, 0.9, 1e-8).step(&mut mlp, &g);
    assert!(mse(&mlp, x.view(), y.view()).unwrap() < before);
}

fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, shift: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, dim), |(_, j)| {
        let z: f64 = rng.sample(StandardNormal);
        if j == 0 {
            shift + 0.3 * z
        } else {
            z
        }
    })
}

#[test]
fn discriminator_is_undecided_on_identical_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut disc = Discriminator::new(4, &[16, 16], 1.0, &mut rng);
    let mut opt = RmsProp::new(1e-3, 0.9, 1e-8);
    for _ in 0..1000 {
        let p = gaussian_rows(&mut rng, 128, 6, 0.0);
        let e = gaussian_rows(&mut rng, 128, 6, 0.0);
        discriminator_step_eval(&mut disc, &mut opt, p.view(), e.view()).unwrap();
    }
    let test = gaussian_rows(&mut rng, 2000, 6, 0.0);
    let probs = disc.probs(test.view()).unwrap();
    let dev = probs.iter().map(|d| (d - 0.5).abs()).sum::<f64>() / probs.len() as f64;
    assert!(dev < 0.05, "mean |D - 0.5| = {dev}");
}

#[test]
fn discriminator_separates_disjoint_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut disc = Discriminator::new(4, &[16, 16], 1.0, &mut rng);
    let mut opt = RmsProp::new(1e-3, 0.9, 1e-8);
    let p = gaussian_rows(&mut rng, 256, 6, 1.0);
    let e = gaussian_rows(&mut rng, 256, 6, -1.0);
    let mut last = None;
    for _ in 0..500 {
        last = Some(discriminator_step_eval(&mut disc, &mut opt, p.view(), e.view()).unwrap());
    }
    let acc = last.unwrap().accuracy;
    assert!(acc > 0.95, "accuracy {acc}");
}

#[test]
fn small_discriminator_steps_ascend() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let mut disc = Discriminator::new(3, &[8], 1.0, &mut rng);
        let p = gaussian_rows(&mut rng, 64, 5, 0.5);
        let e = gaussian_rows(&mut rng, 64, 5, -0.5);
        let before = evaluate_discriminator(&disc, p.view(), e.view()).unwrap().objective;
        let mut opt = RmsProp::new(1e-4, 0.9, 1e-8);
        let after = discriminator_step_eval(&mut disc, &mut opt, p.view(), e.view()).unwrap();
        assert!(after.objective > before);
    }
}

/// Single-step episodes on random features; one rollout group.
fn bandit_batch(policy: &PolicyModel, rng: &mut ChaCha8Rng, n: usize) -> PolicyBatch {
    let features = random_matrix(rng, n, 3, 1.0);
    let means = policy.means(features.view()).unwrap();
    let actions: Vec<Vec2> = (0..n)
        .map(|i| {
            let noise = PolicyModel::draw_noise(rng);
            policy.act(Vec2::new(means[[i, 0]], means[[i, 1]]), noise)
        })
        .collect();
    PolicyBatch {
        features,
        executed: actions.clone(),
        actions,
        sequences: (0..n).map(|i| i..i + 1).collect::<Vec<Range<usize>>>(),
        groups: vec![0; n],
    }
}

#[test]
fn policy_steps_climb_a_bandit_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut policy = PolicyModel::new(Mlp::new(&[3, 16, 2], &mut rng), 0.5);
    let cfg = TrainConfig::default();
    let probe = random_matrix(&mut rng, 200, 3, 1.0);
    let mean_x = |p: &PolicyModel| p.means(probe.view()).unwrap().column(0).mean().unwrap();
    let start = mean_x(&policy);
    for _ in 0..100 {
        let batch = bandit_batch(&policy, &mut rng, 256);
        let rewards: Vec<f64> = batch.actions.iter().map(|a| a.x).collect();
        let diag = policy_step_with_rewards(&mut policy, &batch, &rewards, &cfg, &mut rng).unwrap();
        assert!(diag.kl <= kl_bound(cfg.clip) + 1e-12);
    }
    let end = mean_x(&policy);
    assert!(end > start + 0.5, "mean action x went from {start} to {end}");
}

#[test]
fn policy_update_respects_the_kl_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let cfg = TrainConfig {
        policy_lr: 50.0,
        ..Default::default()
    };
    for _ in 0..10 {
        let mut policy = PolicyModel::new(Mlp::new(&[3, 16, 2], &mut rng), 0.5);
        let batch = bandit_batch(&policy, &mut rng, 128);
        let old = policy.means(batch.features.view()).unwrap();
        let rewards: Vec<f64> = batch.actions.iter().map(|a| a.x - a.y).collect();
        let diag = policy_step_with_rewards(&mut policy, &batch, &rewards, &cfg, &mut rng).unwrap();
        let new = policy.means(batch.features.view()).unwrap();
        let kl = mean_kl(old.view(), new.view(), 0.5);
        assert!(kl <= kl_bound(cfg.clip) + 1e-12, "kl {kl}");
        assert!((kl - diag.kl).abs() < 1e-12);
        assert!(diag.step_fraction < 1.0);
    }
}

fn small_world() -> (Scenario, AStarGuidance, SimConfig) {
    let gen = GeneratorConfig {
        obstacles: (1, 2),
        agents: (2, 2),
        area_size: 16.0,
        circumradius: (1.0, 2.0),
        ..Default::default()
    };
    let s = sample_representative(4, &gen).unwrap();
    let p = AStarGuidance::plan(&s, &PlannerConfig::default());
    let sim = SimConfig {
        max_steps: 40,
        ..Default::default()
    };
    (s, p, sim)
}

#[test]
fn replayed_rollout_reproduces_policy_inputs() {
    let (s, p, sim) = small_world();
    let perception = PerceptionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let policy = PolicyModel::new(Mlp::new(&[crowdgen_core::perception::FEATURE_LEN, 8, 2], &mut rng), 0.5);
    let providers: [&dyn GuidanceProvider; 1] = [&p];
    let r = rollout(&[&s], &providers, &policy, &sim, &perception, 9).unwrap().remove(0);
    let replay = expert_pairs(&s, &r.log, &p, &perception, &sim, |_, _| true).unwrap();
    let mut ts = r.transitions.clone();
    ts.sort_by_key(|t| (t.step, t.agent));
    // decisions of agents that arrived on that step leave no outgoing record
    let kept: Vec<_> = ts
        .iter()
        .filter(|t| {
            let track = r.log.agents.iter().find(|a| a.agent_id == t.agent).unwrap();
            track.records.last().map(|l| l.step) != Some(t.step)
        })
        .collect();
    assert_eq!(kept.len(), replay.len());
    for (i, t) in kept.iter().enumerate() {
        let f = replay.features_of(i);
        for (a, b) in f.iter().zip(&t.features) {
            assert!((*a as f64 - b).abs() < 1e-5);
        }
        assert!(replay.action(i).distance(t.executed) < 1e-5);
    }
}

#[test]
fn zero_sigma_rollout_is_deterministic() {
    let (s, p, sim) = small_world();
    let perception = PerceptionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mlp = Mlp::new(&[crowdgen_core::perception::FEATURE_LEN, 8, 2], &mut rng);
    let zero = PolicyModel::new(mlp.clone(), 0.0);
    let det = PolicyModel::new(mlp, 0.5).into_deterministic();
    let providers: [&dyn GuidanceProvider; 1] = [&p];
    let a = rollout(&[&s], &providers, &zero, &sim, &perception, 1).unwrap();
    let b = rollout(&[&s], &providers, &det, &sim, &perception, 2).unwrap();
    assert_eq!(a[0].log, b[0].log);
    assert!(a[0].transitions.iter().all(|t| t.action == t.mean));
}

fn tiny_gail(seed: u64, warm: usize, iterations: usize) -> TrainConfig {
    TrainConfig {
        hidden: vec![16, 16],
        gail_iterations: iterations,
        rollouts_per_iteration: 1,
        warm_start_steps: warm,
        bc_lr: 1e-3,
        batch_size: 32,
        rng_seed: seed,
        ..Default::default()
    }
}

fn expert_log(s: &Scenario, p: &AStarGuidance, sim: &SimConfig) -> crowdgen_core::TrajectoryLog {
    let reg = crowdgen_core::experts::ExpertRegistry::new(&Default::default());
    let mut c = reg.get("social_force").unwrap().controller(p, 0);
    run_simulation(s, c.as_mut(), sim).unwrap()
}

#[test]
fn gail_is_seed_deterministic() {
    let (s, p, sim) = small_world();
    let log = expert_log(&s, &p, &sim);
    let run = |seed| {
        gail_train(&[s.clone()], &[log.clone()], &[&p], &tiny_gail(seed, 0, 3), &sim, &PerceptionConfig::default())
            .unwrap()
    };
    let (pa, ta) = run(5);
    let (pb, tb) = run(5);
    assert_eq!(pa, pb);
    assert_eq!(ta, tb);
    let (pc, _) = run(6);
    assert_ne!(pa, pc);
}

#[test]
fn warm_start_confuses_the_early_discriminator() {
    let (s, p, sim) = small_world();
    let log = expert_log(&s, &p, &sim);
    let early_accuracy = |warm| {
        let (_, t) = gail_train(&[s.clone()], &[log.clone()], &[&p], &tiny_gail(3, warm, 20), &sim, &PerceptionConfig::default())
            .unwrap();
        t.rows.iter().map(|r| r.disc_accuracy).sum::<f64>() / t.rows.len() as f64
    };
    let cold = early_accuracy(0);
    let warm = early_accuracy(2000);
    assert!(warm < cold, "warm {warm} cold {cold}");
}
