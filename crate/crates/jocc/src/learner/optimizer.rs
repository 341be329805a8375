//! Stochastic gradient descent with classical momentum and global
//! gradient-norm clipping. No adaptive state, so checkpointed parameters
//! fully determine future updates given the same data.

use crate::error::{Error, Result};
use crate::learner::Mlp;

#[derive(Debug, Clone)]
pub struct SgdMomentum {
    lr: f64,
    momentum: f64,
    clip_norm: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(lr: f64, momentum: f64, clip_norm: f64, param_count: usize) -> SgdMomentum {
        SgdMomentum {
            lr,
            momentum,
            clip_norm,
            velocity: vec![0.0; param_count],
        }
    }

    pub fn reset(&mut self) {
        self.velocity.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Applies one update in place. The gradient is clipped to
    /// `clip_norm` in global L2 norm before entering the momentum buffer.
    pub fn step(&mut self, net: &mut Mlp, grad: &[f64]) -> Result<()> {
        if grad.len() != self.velocity.len() {
            return Err(Error::RejectedInput(format!(
                "gradient has {} entries, optimizer tracks {}",
                grad.len(),
                self.velocity.len()
            )));
        }
        let norm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if !norm_sq.is_finite() {
            return Err(Error::TrainingFault(format!(
                "non-finite gradient (norm^2 = {norm_sq})"
            )));
        }
        let norm = norm_sq.sqrt();
        let scale = if norm > self.clip_norm {
            self.clip_norm / norm
        } else {
            1.0
        };
        let mut params = net.flatten_params();
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v + scale * g;
            *p -= self.lr * *v;
        }
        net.set_params(&params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_fresh_net_unchanged() {
        let mut net = Mlp::zeros(&[2, 2]);
        net.set_params(&[1.0, 2.0, 3.0, 4.0, 0.5, -0.5]).unwrap();
        let before = net.flatten_params();
        let mut opt = SgdMomentum::new(0.1, 0.9, 1.0, net.param_count());
        opt.step(&mut net, &vec![0.0; net.param_count()]).unwrap();
        assert_eq!(net.flatten_params(), before);
    }

    #[test]
    fn clipping_bounds_the_step() {
        let mut net = Mlp::zeros(&[1, 1]);
        let mut opt = SgdMomentum::new(1.0, 0.0, 1.0, 2);
        opt.step(&mut net, &[30.0, 40.0]).unwrap();
        // Gradient norm 50 clipped to 1 => step is (0.6, 0.8) scaled by lr.
        let p = net.flatten_params();
        assert!((p[0] + 0.6).abs() < 1e-12);
        assert!((p[1] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_a_training_fault() {
        let mut net = Mlp::zeros(&[1, 1]);
        let mut opt = SgdMomentum::new(0.1, 0.9, 1.0, 2);
        assert!(opt.step(&mut net, &[f64::NAN, 0.0]).is_err());
    }
}
