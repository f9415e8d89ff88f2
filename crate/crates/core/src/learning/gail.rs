use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bc::bc_train_from;
use super::dataset::{expert_pairs, Dataset};
use super::mlp::{Grads, Mlp};
use super::policy::PolicyModel;
use super::rmsprop::RmsProp;
use super::{LearningError, TrainConfig};
use crate::geometry::Vec2;
use crate::guidance::GuidanceProvider;
use crate::perception::{encode, sense, PerceptionConfig};
use crate::world::{
    run_simulation, step_rng, BoxError, Controller, Scenario, SimConfig, TrajectoryLog, WorldError,
    WorldView,
};

/// `log(sigmoid(z))` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// D(s, a) = sigmoid(mlp([features, action / action_scale])).
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub mlp: Mlp,
    pub action_scale: f64,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(
        feature_dim: usize,
        hidden: &[usize],
        action_scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![feature_dim + 2];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Discriminator {
            mlp: Mlp::new(&sizes, rng),
            action_scale,
        }
    }

    pub fn input_row(&self, features: &[f64], action: Vec2) -> Vec<f64> {
        let mut row = Vec::with_capacity(features.len() + 2);
        row.extend_from_slice(features);
        row.push(action.x / self.action_scale);
        row.push(action.y / self.action_scale);
        row
    }

    /// Input matrix for rows of features and actions.
    pub fn inputs(&self, features: ArrayView2<f64>, actions: &[Vec2]) -> Array2<f64> {
        let (n, d) = features.dim();
        assert_eq!(n, actions.len(), "one action per feature row");
        let mut x = Array2::zeros((n, d + 2));
        for (i, a) in actions.iter().enumerate() {
            x.row_mut(i).slice_mut(ndarray::s![..d]).assign(&features.row(i));
            x[[i, d]] = a.x / self.action_scale;
            x[[i, d + 1]] = a.y / self.action_scale;
        }
        x
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, LearningError> {
        Ok(self.mlp.forward_batch(x)?.column(0).to_owned())
    }

    pub fn probs(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, LearningError> {
        Ok(self.logits(x)?.mapv(sigmoid))
    }
}

/// `mean log D(policy) + mean log(1 − D(expert))` and its parameter gradient.
pub fn discriminator_objective(
    mlp: &Mlp,
    policy_x: ArrayView2<f64>,
    expert_x: ArrayView2<f64>,
) -> Result<(f64, Grads), LearningError> {
    let np = policy_x.nrows() as f64;
    let ne = expert_x.nrows() as f64;
    let cp = mlp.forward_cached(policy_x)?;
    let ce = mlp.forward_cached(expert_x)?;
    let zp = cp.output().column(0);
    let ze = ce.output().column(0);
    let objective = zp.iter().map(|&z| log_sigmoid(z)).sum::<f64>() / np
        + ze.iter().map(|&z| log_sigmoid(-z)).sum::<f64>() / ne;
    // d/dz log σ(z) = 1 − σ(z); d/dz log σ(−z) = −σ(z)
    let gp = zp.mapv(|z| (1.0 - sigmoid(z)) / np).insert_axis(Axis(1));
    let ge = ze.mapv(|z| -sigmoid(z) / ne).insert_axis(Axis(1));
    let mut grads = mlp.backward(&cp, gp.view());
    let g2 = mlp.backward(&ce, ge.view());
    for (a, b) in grads.weights.iter_mut().zip(&g2.weights) {
        *a += b;
    }
    for (a, b) in grads.biases.iter_mut().zip(&g2.biases) {
        *a += b;
    }
    Ok((objective, grads))
}

/// Objective, accuracy and policy-pair logits of a discriminator on fixed batches.
#[derive(Debug, Clone)]
pub struct DiscriminatorEval {
    pub objective: f64,
    pub accuracy: f64,
    pub policy_logits: Array1<f64>,
}

pub fn evaluate_discriminator(
    disc: &Discriminator,
    policy_x: ArrayView2<f64>,
    expert_x: ArrayView2<f64>,
) -> Result<DiscriminatorEval, LearningError> {
    let p = disc.logits(policy_x)?;
    let e = disc.logits(expert_x)?;
    let objective = p.iter().map(|&z| log_sigmoid(z)).sum::<f64>() / p.len() as f64
        + e.iter().map(|&z| log_sigmoid(-z)).sum::<f64>() / e.len() as f64;
    let correct = p.iter().filter(|&&z| z >= 0.0).count() + e.iter().filter(|&&z| z < 0.0).count();
    Ok(DiscriminatorEval {
        objective,
        accuracy: correct as f64 / (p.len() + e.len()) as f64,
        policy_logits: p,
    })
}

/// One RMSprop ascent step pushing D toward 1 on policy pairs and 0 on expert
/// pairs. Returns the objective after the step.
pub fn gail_discriminator_step(
    disc: &mut Discriminator,
    opt: &mut RmsProp,
    policy_x: ArrayView2<f64>,
    expert_x: ArrayView2<f64>,
) -> Result<f64, LearningError> {
    Ok(discriminator_step_eval(disc, opt, policy_x, expert_x)?.objective)
}

/// [`gail_discriminator_step`] returning the full post-step evaluation.
pub fn discriminator_step_eval(
    disc: &mut Discriminator,
    opt: &mut RmsProp,
    policy_x: ArrayView2<f64>,
    expert_x: ArrayView2<f64>,
) -> Result<DiscriminatorEval, LearningError> {
    if policy_x.nrows() == 0 || expert_x.nrows() == 0 {
        return Err(LearningError::EmptyDataset);
    }
    let (objective, mut grads) = discriminator_objective(&disc.mlp, policy_x, expert_x)?;
    if !objective.is_finite() || !grads.is_finite() {
        return Err(LearningError::NonFiniteLoss { batch: 0 });
    }
    grads.scale(-1.0);
    opt.step(&mut disc.mlp, &grads);
    let after = evaluate_discriminator(disc, policy_x, expert_x)?;
    if !after.objective.is_finite() {
        return Err(LearningError::NonFiniteLoss { batch: 0 });
    }
    Ok(after)
}

/// Fraction of pairs on the correct side of 0.5 (policy ≥, expert <).
pub fn discriminator_accuracy(
    disc: &Discriminator,
    policy_x: ArrayView2<f64>,
    expert_x: ArrayView2<f64>,
) -> Result<f64, LearningError> {
    let p = disc.logits(policy_x)?;
    let e = disc.logits(expert_x)?;
    let correct = p.iter().filter(|&&z| z >= 0.0).count() + e.iter().filter(|&&z| z < 0.0).count();
    Ok(correct as f64 / (p.len() + e.len()) as f64)
}

/// One policy decision logged during a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub agent: usize,
    pub step: usize,
    pub features: Vec<f64>,
    pub mean: Vec2,
    /// Standard-normal sample; the action is `mean + sigma * noise`.
    pub noise: Vec2,
    /// Sampled action before the speed clamp.
    pub action: Vec2,
    /// Velocity actually applied.
    pub executed: Vec2,
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub scenario_index: usize,
    pub log: TrajectoryLog,
    pub transitions: Vec<Transition>,
}

/// Acts with a policy on encoded observations and logs every decision.
pub struct PolicyController<'a> {
    pub policy: &'a PolicyModel,
    pub provider: &'a dyn GuidanceProvider,
    pub perception: &'a PerceptionConfig,
    pub seed: u64,
    pub transitions: Vec<Transition>,
}

impl<'a> PolicyController<'a> {
    pub fn new(
        policy: &'a PolicyModel,
        provider: &'a dyn GuidanceProvider,
        perception: &'a PerceptionConfig,
        seed: u64,
    ) -> Self {
        PolicyController {
            policy,
            provider,
            perception,
            seed,
            transitions: Vec::new(),
        }
    }
}

impl Controller for PolicyController<'_> {
    fn decide(&mut self, view: &WorldView<'_>, agent: usize) -> Result<Vec2, BoxError> {
        let v = self.decide_all(view, &[agent])?;
        Ok(v[0])
    }

    fn decide_all(
        &mut self,
        view: &WorldView<'_>,
        agents: &[usize],
    ) -> Result<Vec<Vec2>, WorldError> {
        let dim = self.policy.mlp.input_len();
        let mut x = Array2::zeros((agents.len(), dim));
        let mut feats = Vec::with_capacity(agents.len());
        for (row, &a) in agents.iter().enumerate() {
            let obs = sense(view, a, self.provider, self.perception).map_err(|e| {
                WorldError::Decision {
                    agent: a,
                    step: view.step,
                    source: Box::new(e),
                }
            })?;
            let f = encode(&obs, self.perception);
            if f.len() != dim {
                return Err(WorldError::Decision {
                    agent: a,
                    step: view.step,
                    source: Box::new(LearningError::ShapeMismatch {
                        expected: dim,
                        got: f.len(),
                    }),
                });
            }
            x.row_mut(row).assign(&ndarray::ArrayView1::from(&f[..]));
            feats.push(f);
        }
        let means = self
            .policy
            .means(x.view())
            .map_err(|e| WorldError::Decision {
                agent: agents[0],
                step: view.step,
                source: Box::new(e),
            })?;
        let mut out = Vec::with_capacity(agents.len());
        for (row, (&a, f)) in agents.iter().zip(feats).enumerate() {
            let mean = Vec2::new(means[[row, 0]], means[[row, 1]]);
            let mut rng = step_rng(self.seed, a, view.step);
            let noise = PolicyModel::draw_noise(&mut rng);
            let action = self.policy.act(mean, noise);
            let executed = action.clamp_norm(view.config.max_speed);
            self.transitions.push(Transition {
                agent: a,
                step: view.step,
                features: f,
                mean,
                noise,
                action,
                executed,
            });
            out.push(action);
        }
        Ok(out)
    }
}

/// Seed of scenario `index` within a rollout batch seeded by `seed`.
pub fn rollout_seed(seed: u64, index: usize) -> u64 {
    step_rng(seed, index, usize::MAX).gen()
}

/// Simulates each scenario under the policy with its guidance provider.
pub fn rollout(
    scenarios: &[&Scenario],
    providers: &[&dyn GuidanceProvider],
    policy: &PolicyModel,
    sim: &SimConfig,
    perception: &PerceptionConfig,
    seed: u64,
) -> Result<Vec<Rollout>, LearningError> {
    assert_eq!(scenarios.len(), providers.len(), "one provider per scenario");
    scenarios
        .iter()
        .zip(providers)
        .enumerate()
        .map(|(i, (s, p))| {
            let mut ctl = PolicyController::new(policy, *p, perception, rollout_seed(seed, i));
            let log = run_simulation(s, &mut ctl, sim)?;
            Ok(Rollout {
                scenario_index: i,
                log,
                transitions: ctl.transitions,
            })
        })
        .collect()
}

/// Flattened policy samples grouped into per-agent sequences.
#[derive(Debug, Clone)]
pub struct PolicyBatch {
    pub features: Array2<f64>,
    /// Sampled (pre-clamp) actions.
    pub actions: Vec<Vec2>,
    /// Applied actions, seen by the discriminator.
    pub executed: Vec<Vec2>,
    /// Rows of each time-ordered agent trajectory.
    pub sequences: Vec<Range<usize>>,
    /// Baseline group (rollout) of each row.
    pub groups: Vec<usize>,
}

impl PolicyBatch {
    pub fn from_rollouts(rollouts: &[Rollout]) -> Self {
        let dim = rollouts
            .iter()
            .flat_map(|r| r.transitions.first())
            .map(|t| t.features.len())
            .next()
            .unwrap_or(0);
        let total: usize = rollouts.iter().map(|r| r.transitions.len()).sum();
        let mut features = Array2::zeros((total, dim));
        let mut actions = Vec::with_capacity(total);
        let mut executed = Vec::with_capacity(total);
        let mut sequences = Vec::new();
        let mut groups = Vec::with_capacity(total);
        let mut row = 0;
        for (g, r) in rollouts.iter().enumerate() {
            let mut ts: Vec<&Transition> = r.transitions.iter().collect();
            ts.sort_by_key(|t| (t.agent, t.step));
            let mut start = row;
            for (k, t) in ts.iter().enumerate() {
                if k > 0 && ts[k - 1].agent != t.agent {
                    sequences.push(start..row);
                    start = row;
                }
                features
                    .row_mut(row)
                    .assign(&ndarray::ArrayView1::from(&t.features[..]));
                actions.push(t.action);
                executed.push(t.executed);
                groups.push(g);
                row += 1;
            }
            if row > start {
                sequences.push(start..row);
            }
        }
        PolicyBatch {
            features,
            actions,
            executed,
            sequences,
            groups,
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Discounted reward-to-go within each sequence.
pub fn discounted_returns(rewards: &[f64], sequences: &[Range<usize>], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    for seq in sequences {
        let mut acc = 0.0;
        for i in seq.clone().rev() {
            acc = rewards[i] + gamma * acc;
            out[i] = acc;
        }
    }
    out
}

/// Returns minus their group mean, scaled to unit variance.
pub fn advantages(returns: &[f64], groups: &[usize]) -> Vec<f64> {
    let n_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
    let mut sum = vec![0.0; n_groups];
    let mut count = vec![0usize; n_groups];
    for (&r, &g) in returns.iter().zip(groups) {
        sum[g] += r;
        count[g] += 1;
    }
    let mut adv: Vec<f64> = returns
        .iter()
        .zip(groups)
        .map(|(&r, &g)| r - sum[g] / count[g] as f64)
        .collect();
    let n = adv.len().max(1) as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    if var > 1e-16 {
        let s = var.sqrt();
        adv.iter_mut().for_each(|a| *a /= s);
    }
    adv
}

/// Entropy of the 2-D diagonal Gaussian; constant in the network parameters.
pub fn gaussian_entropy(sigma: f64) -> f64 {
    (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).ln()
}

/// Surrogate value from precomputed policy means.
pub fn surrogate_value(
    means: ArrayView2<f64>,
    actions: &[Vec2],
    old_log_prob: &[f64],
    adv: &[f64],
    sigma: f64,
    clip: f64,
    entropy_weight: f64,
) -> f64 {
    let n = means.nrows();
    let s2 = sigma * sigma;
    let mut value = 0.0;
    for i in 0..n {
        let d = actions[i] - Vec2::new(means[[i, 0]], means[[i, 1]]);
        let logp = -d.norm_sq() / (2.0 * s2) - (2.0 * std::f64::consts::PI * s2).ln();
        let ratio = (logp - old_log_prob[i]).exp();
        let a = adv[i];
        value += (ratio * a).min(ratio.clamp(1.0 - clip, 1.0 + clip) * a);
    }
    value / n.max(1) as f64 + entropy_weight * gaussian_entropy(sigma)
}

/// Clipped-ratio surrogate `mean min(ρA, clip(ρ)A) + λH` and its parameter gradient.
#[allow(clippy::too_many_arguments)]
pub fn surrogate_and_grad(
    mlp: &Mlp,
    x: ArrayView2<f64>,
    actions: &[Vec2],
    old_log_prob: &[f64],
    adv: &[f64],
    sigma: f64,
    clip: f64,
    entropy_weight: f64,
) -> Result<(f64, Grads), LearningError> {
    let n = x.nrows();
    let cache = mlp.forward_cached(x)?;
    let out = cache.output();
    let s2 = sigma * sigma;
    let mut value = 0.0;
    let mut grad_out = Array2::zeros((n, 2));
    for i in 0..n {
        let mean = Vec2::new(out[[i, 0]], out[[i, 1]]);
        let d = actions[i] - mean;
        let logp = -d.norm_sq() / (2.0 * s2) - (2.0 * std::f64::consts::PI * s2).ln();
        let ratio = (logp - old_log_prob[i]).exp();
        let a = adv[i];
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
        let (term, active) = if ratio * a <= clipped * a {
            (ratio * a, true)
        } else {
            (clipped * a, false)
        };
        value += term;
        if active {
            // d ratio / d mean = ratio * (a - mean) / σ²
            let g = d * (ratio * a / s2 / n as f64);
            grad_out[[i, 0]] = g.x;
            grad_out[[i, 1]] = g.y;
        }
    }
    value /= n as f64;
    let value = value + entropy_weight * gaussian_entropy(sigma);
    Ok((value, mlp.backward(&cache, grad_out.view())))
}

/// Mean KL between Gaussians with shared std and the given means.
pub fn mean_kl(old: ArrayView2<f64>, new: ArrayView2<f64>, sigma: f64) -> f64 {
    let n = old.nrows().max(1) as f64;
    let sq: f64 = old.iter().zip(new.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    sq / (2.0 * sigma * sigma) / n
}

/// KL cap on one policy update implied by the clip width.
pub fn kl_bound(clip: f64) -> f64 {
    clip * clip / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDiagnostics {
    pub mean_reward: f64,
    pub surrogate_before: f64,
    pub surrogate_after: f64,
    pub kl: f64,
    /// Fraction of the epoch's step kept by the KL backtracking.
    pub step_fraction: f64,
}

/// Rewards `−log D(s, a)` of the batch's applied actions.
pub fn policy_rewards(disc: &Discriminator, batch: &PolicyBatch) -> Result<Vec<f64>, LearningError> {
    let x = disc.inputs(batch.features.view(), &batch.executed);
    Ok(disc.logits(x.view())?.iter().map(|&z| -log_sigmoid(z)).collect())
}

/// One clipped-surrogate gradient-ascent epoch over shuffled minibatches
/// (step size `cfg.policy_lr`), then backtracking
/// toward the old parameters until the mean KL is within [`kl_bound`].
pub fn gail_policy_step<R: Rng + ?Sized>(
    policy: &mut PolicyModel,
    batch: &PolicyBatch,
    disc: &Discriminator,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<PolicyDiagnostics, LearningError> {
    if batch.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    let rewards = policy_rewards(disc, batch)?;
    policy_step_with_rewards(policy, batch, &rewards, cfg, rng)
}

/// [`gail_policy_step`] with precomputed per-transition rewards.
pub fn policy_step_with_rewards<R: Rng + ?Sized>(
    policy: &mut PolicyModel,
    batch: &PolicyBatch,
    rewards: &[f64],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<PolicyDiagnostics, LearningError> {
    if batch.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    assert_eq!(rewards.len(), batch.len(), "one reward per transition");
    if !(policy.sigma > 0.0) {
        return Err(LearningError::InvalidConfig("policy std must be positive".into()));
    }
    let sigma = policy.sigma;
    let mean_reward = rewards.iter().sum::<f64>() / rewards.len() as f64;
    if !mean_reward.is_finite() {
        return Err(LearningError::NonFiniteLoss { batch: 0 });
    }
    let returns = discounted_returns(rewards, &batch.sequences, cfg.gamma);
    let adv = advantages(&returns, &batch.groups);

    let x = batch.features.view();
    let old_means = policy.means(x)?;
    let old_logp: Vec<f64> = (0..batch.len())
        .map(|i| {
            policy.log_prob(
                Vec2::new(old_means[[i, 0]], old_means[[i, 1]]),
                batch.actions[i],
            )
        })
        .collect();
    let surrogate_before = surrogate_value(
        old_means.view(),
        &batch.actions,
        &old_logp,
        &adv,
        sigma,
        cfg.clip,
        cfg.entropy_weight,
    );

    let old = policy.mlp.clone();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.shuffle(rng);
    let parts = cfg.policy_minibatches.clamp(1, batch.len());
    let chunk = batch.len().div_ceil(parts);
    for (k, rows) in order.chunks(chunk).enumerate() {
        let xb = batch.features.select(Axis(0), rows);
        let ab: Vec<Vec2> = rows.iter().map(|&r| batch.actions[r]).collect();
        let lb: Vec<f64> = rows.iter().map(|&r| old_logp[r]).collect();
        let advb: Vec<f64> = rows.iter().map(|&r| adv[r]).collect();
        let (val, mut grads) = surrogate_and_grad(
            &policy.mlp,
            xb.view(),
            &ab,
            &lb,
            &advb,
            sigma,
            cfg.clip,
            cfg.entropy_weight,
        )?;
        if !val.is_finite() || !grads.is_finite() {
            return Err(LearningError::NonFiniteLoss { batch: k });
        }
        grads.scale(cfg.policy_lr);
        policy.mlp.add_scaled(&grads, 1.0);
    }

    let proposed = policy.mlp.clone();
    let bound = kl_bound(cfg.clip);
    let mut fraction = 1.0;
    let mut new_means = policy.means(x)?;
    let mut kl = mean_kl(old_means.view(), new_means.view(), sigma);
    let mut tries = 0;
    while kl > bound {
        tries += 1;
        if tries > 30 {
            policy.mlp = old.clone();
            new_means = old_means.clone();
            fraction = 0.0;
            kl = 0.0;
            break;
        }
        fraction *= 0.5;
        policy.mlp = old.interpolate(&proposed, fraction);
        new_means = policy.means(x)?;
        kl = mean_kl(old_means.view(), new_means.view(), sigma);
    }
    let surrogate_after = surrogate_value(
        new_means.view(),
        &batch.actions,
        &old_logp,
        &adv,
        sigma,
        cfg.clip,
        cfg.entropy_weight,
    );
    Ok(PolicyDiagnostics {
        mean_reward,
        surrogate_before,
        surrogate_after,
        kl,
        step_fraction: fraction,
    })
}

/// One row per training iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct GailTraceRow {
    pub iteration: usize,
    pub disc_objective: f64,
    pub disc_accuracy: f64,
    pub mean_reward: f64,
    pub kl: f64,
    pub step_fraction: f64,
    pub policy_pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GailTrace {
    pub rows: Vec<GailTraceRow>,
}

impl GailTrace {
    /// Mean reward over consecutive windows of `size` iterations.
    pub fn windowed_reward(&self, size: usize) -> Vec<f64> {
        self.rows
            .chunks(size)
            .filter(|c| c.len() == size)
            .map(|c| c.iter().map(|r| r.mean_reward).sum::<f64>() / size as f64)
            .collect()
    }

    pub const CSV_HEADER: &'static str =
        "iteration,disc_objective,disc_accuracy,mean_reward,kl,step_fraction,policy_pairs";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.9},{:.9},{:.9},{:.9},{:.9},{}\n",
                r.iteration,
                r.disc_objective,
                r.disc_accuracy,
                r.mean_reward,
                r.kl,
                r.step_fraction,
                r.policy_pairs
            ));
        }
        s
    }
}

/// Adversarial imitation: rollouts, one discriminator step and one policy step per iteration.
pub fn gail_train(
    scenarios: &[Scenario],
    expert_logs: &[TrajectoryLog],
    providers: &[&dyn GuidanceProvider],
    cfg: &TrainConfig,
    sim: &SimConfig,
    perception: &PerceptionConfig,
) -> Result<(PolicyModel, GailTrace), LearningError> {
    gail_train_with(scenarios, expert_logs, providers, cfg, sim, perception, |_, _| {})
}

/// [`gail_train`] with a callback after every iteration.
#[allow(clippy::too_many_arguments)]
pub fn gail_train_with(
    scenarios: &[Scenario],
    expert_logs: &[TrajectoryLog],
    providers: &[&dyn GuidanceProvider],
    cfg: &TrainConfig,
    sim: &SimConfig,
    perception: &PerceptionConfig,
    mut on_iteration: impl FnMut(&GailTraceRow, &PolicyModel),
) -> Result<(PolicyModel, GailTrace), LearningError> {
    if scenarios.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    assert_eq!(scenarios.len(), providers.len(), "one provider per scenario");
    let mut expert = Dataset::new(crate::perception::FEATURE_LEN);
    for s in scenarios {
        let log = expert_logs
            .iter()
            .find(|l| l.scenario_id == s.id)
            .ok_or_else(|| LearningError::MissingExpertLog(s.id.clone()))?;
        let idx = scenarios.iter().position(|t| t.id == s.id).unwrap();
        expert.extend(&expert_pairs(s, log, providers[idx], perception, sim, |_, _| true)?);
    }
    if expert.is_empty() {
        return Err(LearningError::EmptyDataset);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(3);
    let sizes = cfg.layer_sizes(expert.dim);
    let mut policy = PolicyModel::new(Mlp::new(&sizes, &mut rng), cfg.sigma);
    let mut disc = Discriminator::new(expert.dim, &cfg.hidden, sim.max_speed, &mut rng);
    if cfg.warm_start_steps > 0 {
        let (warm, _) = bc_train_from(policy.mlp.clone(), &expert, cfg, cfg.warm_start_steps)?;
        policy.mlp = warm.mlp;
    }
    let mut disc_opt = RmsProp::new(cfg.disc_lr, cfg.rms_decay, cfg.rms_eps);

    let expert_actions: Vec<Vec2> = (0..expert.len()).map(|i| expert.action(i)).collect();
    let per_iter = cfg.rollouts_per_iteration.max(1);
    let mut trace = GailTrace::default();
    for it in 0..cfg.gail_iterations {
        let picked: Vec<usize> = (0..per_iter)
            .map(|j| (it * per_iter + j) % scenarios.len())
            .collect();
        let sc: Vec<&Scenario> = picked.iter().map(|&i| &scenarios[i]).collect();
        let pr: Vec<&dyn GuidanceProvider> = picked.iter().map(|&i| providers[i]).collect();
        let seed = rollout_seed(cfg.rng_seed, it);
        let rollouts = rollout(&sc, &pr, &policy, sim, perception, seed)?;
        let batch = PolicyBatch::from_rollouts(&rollouts);
        if batch.is_empty() {
            return Err(LearningError::EmptyDataset);
        }

        let px = disc.inputs(batch.features.view(), &batch.executed);
        let mut rows: Vec<usize> = (0..expert.len()).collect();
        rows.shuffle(&mut rng);
        rows.truncate(batch.len());
        let (ef, _) = expert.batch(&rows);
        let ea: Vec<Vec2> = rows.iter().map(|&r| expert_actions[r]).collect();
        let ex = disc.inputs(ef.view(), &ea);
        let mut eval = None;
        for _ in 0..cfg.disc_steps.max(1) {
            eval = Some(
                discriminator_step_eval(&mut disc, &mut disc_opt, px.view(), ex.view()).map_err(
                    |e| match e {
                        LearningError::NonFiniteLoss { .. } => {
                            LearningError::NonFiniteLoss { batch: it }
                        }
                        other => other,
                    },
                )?,
            );
        }
        let eval = eval.expect("at least one discriminator step");
        // px holds the executed actions, so its logits give the rewards directly
        let rewards: Vec<f64> = eval.policy_logits.iter().map(|&z| -log_sigmoid(z)).collect();
        let diag = policy_step_with_rewards(&mut policy, &batch, &rewards, cfg, &mut rng)?;
        let row = GailTraceRow {
            iteration: it,
            disc_objective: eval.objective,
            disc_accuracy: eval.accuracy,
            mean_reward: diag.mean_reward,
            kl: diag.kl,
            step_fraction: diag.step_fraction,
            policy_pairs: batch.len(),
        };
        on_iteration(&row, &policy);
        trace.rows.push(row);
    }
    Ok((policy.into_deterministic(), trace))
}
