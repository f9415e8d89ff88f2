use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use super::LearningError;
use crate::geometry::Vec2;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Gaussian policy around an MLP mean with fixed diagonal std `sigma` (m/s).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    pub mlp: Mlp,
    pub sigma: f64,
    /// Ignore `sigma` and act with the mean.
    pub deterministic: bool,
}

impl PolicyModel {
    pub fn new(mlp: Mlp, sigma: f64) -> Self {
        assert!(sigma >= 0.0, "policy std must be non-negative");
        PolicyModel {
            mlp,
            sigma,
            deterministic: false,
        }
    }

    pub fn into_deterministic(mut self) -> Self {
        self.deterministic = true;
        self
    }

    pub fn mean(&self, features: &[f64]) -> Result<Vec2, LearningError> {
        let out = self.mlp.forward(features)?;
        Ok(Vec2::new(out[0], out[1]))
    }

    pub fn means(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, LearningError> {
        self.mlp.forward_batch(x)
    }

    /// Effective std used when sampling.
    pub fn effective_sigma(&self) -> f64 {
        if self.deterministic {
            0.0
        } else {
            self.sigma
        }
    }

    /// Standard-normal noise for one action.
    pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R) -> Vec2 {
        Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// `mean + sigma * noise` (the mean alone in deterministic mode).
    pub fn act(&self, mean: Vec2, noise: Vec2) -> Vec2 {
        let s = self.effective_sigma();
        if s == 0.0 {
            mean
        } else {
            mean + noise * s
        }
    }

    /// Log density of `action` under N(mean, sigma² I), up to sigma > 0.
    pub fn log_prob(&self, mean: Vec2, action: Vec2) -> f64 {
        let s2 = self.sigma * self.sigma;
        -(action - mean).norm_sq() / (2.0 * s2) - (2.0 * std::f64::consts::PI * s2).ln()
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile::from_mlp(&self.mlp, Some(self.sigma))
    }

    pub fn from_file(file: &ModelFile) -> Result<Self, LearningError> {
        let mlp = file.to_mlp()?;
        if mlp.output_len() != 2 {
            return Err(LearningError::InvalidModel("policy output must be 2-D".into()));
        }
        let sigma = file.sigma.unwrap_or(0.0);
        if !(sigma >= 0.0) {
            return Err(LearningError::InvalidModel("negative sigma".into()));
        }
        Ok(PolicyModel {
            mlp,
            sigma,
            deterministic: true,
        })
    }
}

/// Serialized network parameters; `weights[l]` is row-major `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl ModelFile {
    pub fn from_mlp(mlp: &Mlp, sigma: Option<f64>) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            layer_sizes: mlp.layer_sizes(),
            activation: mlp.activation,
            weights: mlp.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: mlp.biases.iter().map(|b| b.to_vec()).collect(),
            sigma,
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp, LearningError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(LearningError::InvalidModel(format!(
                "schema version {} (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let n = self.layer_sizes.len();
        if n < 2 || self.weights.len() != n - 1 || self.biases.len() != n - 1 {
            return Err(LearningError::InvalidModel("layer count mismatch".into()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..n - 1 {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = Array2::from_shape_vec((fan_out, fan_in), self.weights[l].clone())
                .map_err(|e| LearningError::InvalidModel(format!("layer {l}: {e}")))?;
            if self.biases[l].len() != fan_out {
                return Err(LearningError::InvalidModel(format!("layer {l} bias size")));
            }
            weights.push(w);
            biases.push(Array1::from(self.biases[l].clone()));
        }
        let mlp = Mlp {
            weights,
            biases,
            activation: self.activation,
        };
        mlp.validate()?;
        Ok(mlp)
    }

    pub fn to_json(&self) -> Result<String, LearningError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, LearningError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn model_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = PolicyModel::new(Mlp::new(&[5, 3, 2], &mut rng), 0.5);
        let json = p.to_file().to_json().unwrap();
        let back = PolicyModel::from_file(&ModelFile::from_json(&json).unwrap()).unwrap();
        assert_eq!(back.mlp, p.mlp);
        assert_eq!(back.sigma, 0.5);
        assert!(back.deterministic);
    }

    #[test]
    fn corrupt_model_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut f = ModelFile::from_mlp(&Mlp::new(&[5, 3, 2], &mut rng), None);
        f.weights[0].pop();
        assert!(f.to_mlp().is_err());
        let mut g = ModelFile::from_mlp(&Mlp::zeros(&[2, 2]), None);
        g.weights[0][0] = f64::NAN;
        assert!(g.to_mlp().is_err());
    }

    #[test]
    fn deterministic_ignores_sigma() {
        let p = PolicyModel::new(Mlp::zeros(&[1, 2]), 0.5).into_deterministic();
        let m = Vec2::new(0.3, 0.1);
        assert_eq!(p.act(m, Vec2::new(2.0, -1.0)), m);
    }
}
