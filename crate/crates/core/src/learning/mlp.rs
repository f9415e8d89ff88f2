use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LearningError;

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

/// Fully connected network. `weights[l]` has shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activation: Activation,
}

/// Per-layer inputs and pre-activations saved by [`Mlp::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Gradient (or any parameter-shaped quantity) of an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Grads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Grads {
            weights: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: mlp.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.weights.iter_mut().for_each(|w| *w *= k);
        self.biases.iter_mut().for_each(|b| *b *= k);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.to_flat().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

impl Mlp {
    /// Uniform ±sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Self {
        assert!(layer_sizes.len() >= 2, "need input and output sizes");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for win in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.gen_range(-bound..=bound)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Mlp {
            weights,
            biases,
            activation: Activation::Tanh,
        }
    }

    pub fn zeros(layer_sizes: &[usize]) -> Self {
        assert!(layer_sizes.len() >= 2, "need input and output sizes");
        Mlp {
            weights: layer_sizes
                .windows(2)
                .map(|w| Array2::zeros((w[1], w[0])))
                .collect(),
            biases: layer_sizes[1..].iter().map(|&n| Array1::zeros(n)).collect(),
            activation: Activation::Tanh,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.weights[0].ncols()];
        sizes.extend(self.weights.iter().map(|w| w.nrows()));
        sizes
    }

    pub fn input_len(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn output_len(&self) -> usize {
        self.weights.last().map(|w| w.nrows()).unwrap_or(0)
    }

    pub fn num_params(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    /// Checks layer shapes chain and every parameter is finite.
    pub fn validate(&self) -> Result<(), LearningError> {
        if self.weights.is_empty() || self.weights.len() != self.biases.len() {
            return Err(LearningError::InvalidModel("layer count mismatch".into()));
        }
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.nrows() != b.len() {
                return Err(LearningError::InvalidModel(format!("layer {l} bias size")));
            }
            if l > 0 && w.ncols() != self.weights[l - 1].nrows() {
                return Err(LearningError::InvalidModel(format!("layer {l} input size")));
            }
        }
        if !self.to_flat().iter().all(|x| x.is_finite()) {
            return Err(LearningError::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, LearningError> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous row");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Row-wise forward pass.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, LearningError> {
        self.check_input(x.ncols())?;
        let last = self.weights.len() - 1;
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = h.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(f64::tanh);
            }
            h = z;
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache, LearningError> {
        self.check_input(x.ncols())?;
        let last = self.weights.len() - 1;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = h.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(f64::tanh);
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        Ok(ForwardCache { inputs, output: h })
    }

    /// Parameter gradient of `sum_rows(grad_out · output)`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: ArrayView2<f64>) -> Grads {
        assert_eq!(grad_out.dim(), cache.output.dim(), "output gradient shape");
        let n = self.weights.len();
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        let mut delta = grad_out.to_owned();
        for l in (0..n).rev() {
            let input = &cache.inputs[l];
            gw.push(delta.t().dot(input));
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                // input of layer l is tanh output of layer l-1
                back.zip_mut_with(input, |d, &a| *d *= 1.0 - a * a);
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        Grads {
            weights: gw,
            biases: gb,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for x in w.iter_mut() {
                *x = flat[k];
                k += 1;
            }
            for x in b.iter_mut() {
                *x = flat[k];
                k += 1;
            }
        }
    }

    /// `self += k * g`.
    pub fn add_scaled(&mut self, g: &Grads, k: f64) {
        for (w, d) in self.weights.iter_mut().zip(&g.weights) {
            w.scaled_add(k, d);
        }
        for (b, d) in self.biases.iter_mut().zip(&g.biases) {
            b.scaled_add(k, d);
        }
    }

    /// `self + alpha * (other - self)`, for step backtracking.
    pub fn interpolate(&self, other: &Mlp, alpha: f64) -> Mlp {
        let mut out = self.clone();
        for (w, o) in out.weights.iter_mut().zip(&other.weights) {
            w.zip_mut_with(o, |a, &b| *a += alpha * (b - *a));
        }
        for (w, o) in out.biases.iter_mut().zip(&other.biases) {
            w.zip_mut_with(o, |a, &b| *a += alpha * (b - *a));
        }
        out
    }

    fn check_input(&self, got: usize) -> Result<(), LearningError> {
        let expected = self.input_len();
        if got != expected {
            return Err(LearningError::ShapeMismatch { expected, got });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_output_bias() {
        let mut m = Mlp::zeros(&[3, 4, 2]);
        m.biases[1] = array![0.7, -1.2];
        for x in [[0.0, 0.0, 0.0], [5.0, -3.0, 1.0]] {
            assert_eq!(m.forward(&x).unwrap(), vec![0.7, -1.2]);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let m = Mlp::zeros(&[3, 2]);
        assert_eq!(
            m.forward(&[1.0]).unwrap_err(),
            LearningError::ShapeMismatch {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::new(&[4, 5, 3, 2], &mut rng);
        let mut z = Mlp::zeros(&[4, 5, 3, 2]);
        z.set_flat(&m.to_flat());
        assert_eq!(z, m);
        assert_eq!(m.layer_sizes(), vec![4, 5, 3, 2]);
        assert_eq!(m.num_params(), 4 * 5 + 5 + 5 * 3 + 3 + 3 * 2 + 2);
    }

    #[test]
    fn init_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = Mlp::new(&[10, 6, 2], &mut rng);
        let b0 = (6.0f64 / 16.0).sqrt();
        assert!(m.weights[0].iter().all(|w| w.abs() <= b0));
        assert!(m.biases.iter().all(|b| b.iter().all(|&x| x == 0.0)));
    }
}
