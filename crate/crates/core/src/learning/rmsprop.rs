use super::mlp::{Grads, Mlp};

/// RMSprop: `E ← ρE + (1−ρ)g²`, `p ← p − lr·g/√(E+ε)`.
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    mean_sq: Option<Grads>,
}

impl RmsProp {
    pub fn new(lr: f64, decay: f64, eps: f64) -> Self {
        RmsProp {
            lr,
            decay,
            eps,
            mean_sq: None,
        }
    }

    /// One descent step along `grads`. Negate the gradient to ascend.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &Grads) {
        let (lr, rho, eps) = (self.lr, self.decay, self.eps);
        let ms = self.mean_sq.get_or_insert_with(|| Grads::zeros_like(mlp));
        for ((p, g), e) in mlp
            .weights
            .iter_mut()
            .zip(&grads.weights)
            .zip(ms.weights.iter_mut())
        {
            ndarray::Zip::from(p).and(g).and(e).for_each(|p, &g, e| {
                *e = rho * *e + (1.0 - rho) * g * g;
                *p -= lr * g / (*e + eps).sqrt();
            });
        }
        for ((p, g), e) in mlp
            .biases
            .iter_mut()
            .zip(&grads.biases)
            .zip(ms.biases.iter_mut())
        {
            ndarray::Zip::from(p).and(g).and(e).for_each(|p, &g, e| {
                *e = rho * *e + (1.0 - rho) * g * g;
                *p -= lr * g / (*e + eps).sqrt();
            });
        }
    }
}
