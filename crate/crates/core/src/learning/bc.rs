use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use super::mlp::{Grads, Mlp};
use super::policy::PolicyModel;
use super::rmsprop::RmsProp;
use super::{LearningError, TrainConfig};

/// Rows used for the periodic full-loss estimate.
const EVAL_ROWS: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BcTrace {
    /// Minibatch loss of every step, before its update.
    pub step_loss: Vec<f64>,
    /// `(completed steps, loss on the evaluation rows)`.
    pub eval: Vec<(usize, f64)>,
}

impl BcTrace {
    pub fn eval_at(&self, step: usize) -> Option<f64> {
        self.eval.iter().find(|(s, _)| *s == step).map(|(_, l)| *l)
    }
}

/// Mean squared error over all output entries and its parameter gradient.
pub fn mse_loss_and_grad(
    mlp: &Mlp,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
) -> Result<(f64, Grads), LearningError> {
    let cache = mlp.forward_cached(x)?;
    let diff: Array2<f64> = cache.output() - &y;
    let n = diff.len() as f64;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad_out = diff * (2.0 / n);
    Ok((loss, mlp.backward(&cache, grad_out.view())))
}

pub fn mse(mlp: &Mlp, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64, LearningError> {
    let out = mlp.forward_batch(x)?;
    let diff = out - &y;
    Ok(diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64)
}

/// Behavior cloning from a fresh network of `[dim, hidden..., 2]`.
pub fn bc_train(ds: &Dataset, cfg: &TrainConfig) -> Result<(PolicyModel, BcTrace), LearningError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(1);
    let mlp = Mlp::new(&cfg.layer_sizes(ds.dim), &mut rng);
    bc_train_from(mlp, ds, cfg, cfg.bc_steps)
}

/// Minibatch RMSprop on the L2 loss, starting from `mlp`.
pub fn bc_train_from(
    mut mlp: Mlp,
    ds: &Dataset,
    cfg: &TrainConfig,
    steps: usize,
) -> Result<(PolicyModel, BcTrace), LearningError> {
    if ds.is_empty() {
        return Err(LearningError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(2);
    let mut opt = RmsProp::new(cfg.bc_lr, cfg.rms_decay, cfg.rms_eps);
    let n = ds.len();
    let batch = cfg.batch_size.clamp(1, n);

    let mut eval_rows: Vec<usize> = (0..n).collect();
    if n > EVAL_ROWS {
        eval_rows.shuffle(&mut rng);
        eval_rows.truncate(EVAL_ROWS);
        eval_rows.sort_unstable();
    }
    let (ex, ey) = ds.batch(&eval_rows);

    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut trace = BcTrace::default();
    for step in 0..steps {
        let rows: Vec<usize> = if batch == n {
            order.clone()
        } else {
            if cursor + batch > n {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            cursor += batch;
            order[cursor - batch..cursor].to_vec()
        };
        let (x, y) = ds.batch(&rows);
        let (loss, grads) = mse_loss_and_grad(&mlp, x.view(), y.view())?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(LearningError::NonFiniteLoss { batch: step });
        }
        trace.step_loss.push(loss);
        opt.step(&mut mlp, &grads);
        let done = step + 1;
        if cfg.eval_interval > 0 && (done % cfg.eval_interval == 0 || done == steps) {
            trace.eval.push((done, mse(&mlp, ex.view(), ey.view())?));
        }
    }
    Ok((PolicyModel::new(mlp, cfg.sigma).into_deterministic(), trace))
}
