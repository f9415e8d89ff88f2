use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GuidanceError;
use crate::geometry::Vec2;
use crate::world::TrajectoryLog;

/// Squared-exponential kernel hyperparameters. Fixed, never optimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpHyper {
    pub length_x: f64,
    pub length_y: f64,
    pub length_t: f64,
    pub signal_var: f64,
    pub noise_var: f64,
    pub jitter: f64,
    pub max_samples: usize,
    /// Posterior std (m/s) above which callers fall back to the compass.
    pub fallback_std: f64,
}

impl Default for GpHyper {
    fn default() -> Self {
        GpHyper {
            length_x: 2.0,
            length_y: 2.0,
            length_t: 5.0,
            signal_var: 1.0,
            noise_var: 0.01,
            jitter: 1e-8,
            max_samples: 2000,
            fallback_std: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpSample {
    pub position: Vec2,
    pub time: f64,
    pub velocity: Vec2,
}

/// Two independent scalar GPs (vx, vy) sharing one kernel and one factorization.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyper: GpHyper,
    inputs: Vec<[f64; 3]>,
    chol: Cholesky<f64, Dyn>,
    alpha_x: DVector<f64>,
    alpha_y: DVector<f64>,
}

impl GpModel {
    pub fn from_samples(samples: &[GpSample], hyper: GpHyper) -> Result<Self, GuidanceError> {
        if samples.is_empty() {
            return Err(GuidanceError::NoData);
        }
        let inputs: Vec<[f64; 3]> = samples
            .iter()
            .map(|s| [s.position.x, s.position.y, s.time])
            .collect();
        let n = inputs.len();
        let diag = hyper.noise_var + hyper.jitter;
        let k = DMatrix::from_fn(n, n, |i, j| {
            let v = kernel(&hyper, &inputs[i], &inputs[j]);
            if i == j {
                v + diag
            } else {
                v
            }
        });
        let chol = k.cholesky().ok_or(GuidanceError::DegenerateKernel)?;
        let yx = DVector::from_iterator(n, samples.iter().map(|s| s.velocity.x));
        let yy = DVector::from_iterator(n, samples.iter().map(|s| s.velocity.y));
        let alpha_x = chol.solve(&yx);
        let alpha_y = chol.solve(&yy);
        if alpha_x.iter().chain(alpha_y.iter()).any(|v| !v.is_finite()) {
            return Err(GuidanceError::DegenerateKernel);
        }
        Ok(GpModel {
            hyper,
            inputs,
            chol,
            alpha_x,
            alpha_y,
        })
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Posterior mean velocity and predictive variance (noise included) at `(position, time)`.
    pub fn predict(&self, position: Vec2, time: f64) -> (Vec2, f64) {
        let q = [position.x, position.y, time];
        let kstar = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|x| kernel(&self.hyper, x, &q)),
        );
        let mean = Vec2::new(kstar.dot(&self.alpha_x), kstar.dot(&self.alpha_y));
        let v = self
            .chol
            .l()
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor is non-singular");
        let var = (self.hyper.signal_var - v.dot(&v)).max(0.0) + self.hyper.noise_var;
        (mean, var)
    }
}

fn kernel(h: &GpHyper, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = (a[0] - b[0]) / h.length_x;
    let dy = (a[1] - b[1]) / h.length_y;
    let dt = (a[2] - b[2]) / h.length_t;
    h.signal_var * (-0.5 * (dx * dx + dy * dy + dt * dt)).exp()
}

/// Fits the flow GP on every recorded transition of the expert logs,
/// uniformly subsampled to `hyper.max_samples`.
pub fn fit_gp(logs: &[TrajectoryLog], hyper: GpHyper, seed: u64) -> Result<GpModel, GuidanceError> {
    let mut all = Vec::new();
    for log in logs {
        for track in &log.agents {
            // the final record is a resting state, not a transition
            let n = track.records.len().saturating_sub(1);
            for r in &track.records[..n] {
                all.push(GpSample {
                    position: r.position,
                    time: r.step as f64 * log.dt,
                    velocity: r.velocity,
                });
            }
        }
    }
    if all.is_empty() {
        return Err(GuidanceError::NoData);
    }
    let samples = if all.len() > hyper.max_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, all.len(), hyper.max_samples).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| all[i]).collect()
    } else {
        all
    };
    GpModel::from_samples(&samples, hyper)
}
