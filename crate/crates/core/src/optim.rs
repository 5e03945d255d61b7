//! First-order optimizers that only touch trainable parameter groups.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::nn::{ParamGradient, SingleLayerNet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    Sgd { lr: f64 },
}

impl OptimizerConfig {
    /// ADAM with the usual moment decays.
    pub fn adam(lr: f64) -> Self {
        Self::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Adam { lr, beta1, beta2, eps } => {
                if !(lr > 0.0 && lr.is_finite()) {
                    return Err(invalid(format!("learning rate must be positive, got {lr}")));
                }
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                    return Err(invalid("ADAM betas must lie in [0, 1)"));
                }
                if !(eps > 0.0) {
                    return Err(invalid("ADAM eps must be positive"));
                }
                Ok(())
            }
            Self::Sgd { lr } if lr > 0.0 && lr.is_finite() => Ok(()),
            Self::Sgd { lr } => Err(invalid(format!("learning rate must be positive, got {lr}"))),
        }
    }

    pub fn build(&self, n_hidden: usize) -> Result<Box<dyn Optimizer + Send>> {
        self.validate()?;
        Ok(match *self {
            Self::Adam { lr, beta1, beta2, eps } => Box::new(Adam::new(lr, beta1, beta2, eps, n_hidden)),
            Self::Sgd { lr } => Box::new(Sgd { lr }),
        })
    }
}

pub trait Optimizer {
    /// Apply one update from `grads` to the trainable groups of `net`.
    fn step(&mut self, net: &mut SingleLayerNet, grads: &ParamGradient) -> Result<()>;
}

fn check_dims(net: &SingleLayerNet, grads: &ParamGradient) -> Result<()> {
    for (params, g) in net.groups().iter().zip(grads.groups()) {
        if params.len() != g.len() {
            return Err(Error::DimensionMismatch { expected: params.len(), actual: g.len() });
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
}

impl Optimizer for Sgd {
    fn step(&mut self, net: &mut SingleLayerNet, grads: &ParamGradient) -> Result<()> {
        check_dims(net, grads)?;
        for ((trainable, params), g) in net.groups_mut().into_iter().zip(grads.groups()) {
            if trainable {
                for (p, gi) in params.iter_mut().zip(g) {
                    *p -= self.lr * gi;
                }
            }
        }
        Ok(())
    }
}

/// Bias-corrected ADAM. Moment buffers persist across calls.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: ParamGradient,
    v: ParamGradient,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64, n_hidden: usize) -> Self {
        Self { lr, beta1, beta2, eps, t: 0, m: ParamGradient::zeros(n_hidden), v: ParamGradient::zeros(n_hidden) }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn first_moment(&self) -> &ParamGradient {
        &self.m
    }

    pub fn second_moment(&self) -> &ParamGradient {
        &self.v
    }
}

impl Optimizer for Adam {
    fn step(&mut self, net: &mut SingleLayerNet, grads: &ParamGradient) -> Result<()> {
        check_dims(net, grads)?;
        if self.m.len() != grads.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), actual: grads.len() });
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2) = (self.beta1, self.beta2);
        let groups = net.groups_mut().into_iter().zip(grads.groups()).zip(self.m.groups_mut()).zip(self.v.groups_mut());
        for ((((trainable, params), g), m), v) in groups {
            if !trainable {
                continue;
            }
            for i in 0..params.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ActivationKind, Trainable};

    fn net() -> SingleLayerNet {
        SingleLayerNet::new(ActivationKind::Tanh, vec![0.5, -0.2], vec![0.1, 0.3], vec![1.0, 2.0], 0.4, Trainable::ALL).unwrap()
    }

    fn grads() -> ParamGradient {
        ParamGradient { d_w: vec![0.3, -2.0], d_a: vec![1e-3, 5.0], d_v: vec![-0.7, 0.0], d_b: 1.5 }
    }

    #[test]
    fn first_adam_step_moves_by_lr_times_sign() {
        let (lr, eps) = (0.02, 1e-8);
        let mut adam = Adam::new(lr, 0.9, 0.999, eps, 2);
        let before = net();
        let mut after = before.clone();
        adam.step(&mut after, &grads()).unwrap();
        for ((p0, p1), g) in before.groups().iter().flat_map(|s| s.iter()).zip(after.groups().iter().flat_map(|s| s.iter())).zip(grads().iter()) {
            let delta = p1 - p0;
            let expected = -lr * g / (g.abs() + eps);
            assert!((delta - expected).abs() < 1e-8 * lr, "{delta} vs {expected}");
        }
    }

    #[test]
    fn zero_gradient_from_rest_leaves_parameters() {
        let mut adam = Adam::new(0.02, 0.9, 0.999, 1e-8, 2);
        let mut n = net();
        adam.step(&mut n, &ParamGradient::zeros(2)).unwrap();
        assert_eq!(n, net());
    }

    #[test]
    fn zero_gradient_decays_moments() {
        let mut adam = Adam::new(0.02, 0.9, 0.999, 1e-8, 2);
        let mut n = net();
        adam.step(&mut n, &grads()).unwrap();
        let (m1, v1) = (adam.first_moment().clone(), adam.second_moment().clone());
        adam.step(&mut n, &ParamGradient::zeros(2)).unwrap();
        for (a, b) in adam.first_moment().iter().zip(m1.iter()) {
            assert_eq!(a, 0.9 * b);
        }
        for (a, b) in adam.second_moment().iter().zip(v1.iter()) {
            assert_eq!(a, 0.999 * b);
        }
    }

    #[test]
    fn frozen_groups_are_untouched() {
        let mut n = net();
        n.set_trainable(Trainable { w: false, a: true, v: true, b: false });
        let mut adam = Adam::new(0.1, 0.9, 0.999, 1e-8, 2);
        adam.step(&mut n, &grads()).unwrap();
        assert_eq!(n.w(), net().w());
        assert_eq!(n.b(), net().b());
        assert_ne!(n.a(), net().a());
        let mut sgd = Sgd { lr: 0.1 };
        sgd.step(&mut n, &grads()).unwrap();
        assert_eq!(n.w(), net().w());
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let run = || {
            let mut adam = Adam::new(0.02, 0.9, 0.999, 1e-8, 2);
            let mut n = net();
            for k in 0..50 {
                let mut g = grads();
                g.d_b *= (k as f64).sin();
                adam.step(&mut n, &g).unwrap();
            }
            n
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut adam = Adam::new(0.02, 0.9, 0.999, 1e-8, 3);
        let mut n = net();
        assert!(matches!(adam.step(&mut n, &grads()), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(Sgd { lr: 0.1 }.step(&mut n, &ParamGradient::zeros(5)), Err(Error::DimensionMismatch { .. })));
    }
}
