//! Monte-Carlo view of the infinite-width limit.
//!
//! With i.i.d. neurons and `σ_v = A / √N`, the output covariance of a
//! single-hidden-layer network tends to `σ_b² + A² E[h(x; w, a) h(x'; w, a)]`.
//! The expectation is taken over one shared neuron distribution, which has the
//! same law as the width-N sum and carries no finite-width error.

use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{operator_transform, Kernel};
use crate::nn::ActivationKind;
use crate::operators::LinearOperator;
use crate::rng::{self, Rng};

/// Samples per independently seeded block.
const BLOCK: usize = 4096;

/// Prior law of a scalar weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Delta { value: f64 },
    Gaussian { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Law {
    fn validate(&self) -> Result<()> {
        match *self {
            Law::Delta { value } if value.is_finite() => Ok(()),
            Law::Gaussian { sigma } if sigma.is_finite() && sigma >= 0.0 => Ok(()),
            Law::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            other => Err(invalid(format!("invalid prior law {other:?}"))),
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        match *self {
            Law::Delta { value } => value,
            Law::Gaussian { sigma } => Normal::new(0.0, sigma).expect("validated sigma").sample(rng),
            Law::Uniform { lo, hi } => rng.random_range(lo..hi),
        }
    }
}

/// Prior over one neuron's input weight `w` and bias `a`, plus the output
/// bias scale `σ_b` and the output-weight amplitude `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightPrior {
    pub w_law: Law,
    pub a_law: Law,
    pub sigma_b: f64,
    pub amplitude: f64,
}

impl WeightPrior {
    /// Fixed frequency `alpha`, phase uniform on one period, no output bias and
    /// `A² = 2`, which makes the output covariance `cos(alpha (x - x'))`.
    pub fn helmholtz(alpha: f64) -> Self {
        Self {
            w_law: Law::Delta { value: alpha },
            a_law: Law::Uniform { lo: 0.0, hi: TAU },
            sigma_b: 0.0,
            amplitude: std::f64::consts::SQRT_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.w_law.validate()?;
        self.a_law.validate()?;
        if !self.sigma_b.is_finite() || self.sigma_b < 0.0 {
            return Err(invalid(format!("sigma_b must be finite and >= 0, got {}", self.sigma_b)));
        }
        if !self.amplitude.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        Ok(())
    }

    fn is_deterministic(&self) -> bool {
        matches!(self.w_law, Law::Delta { .. }) && matches!(self.a_law, Law::Delta { .. })
    }
}

/// `n_samples` draws of `(w, a)`, seeded block by block.
pub fn prior_samples(prior: &WeightPrior, n_samples: usize, seed: u64) -> Vec<(f64, f64)> {
    let blocks = n_samples.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = rng::stream(seed, block as u64);
            let len = BLOCK.min(n_samples - block * BLOCK);
            (0..len)
                .map(|_| {
                    let w = prior.w_law.sample(&mut rng);
                    let a = prior.a_law.sample(&mut rng);
                    (w, a)
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Mean of `f` over the samples, summed block by block in a fixed order.
fn block_mean(samples: &[(f64, f64)], f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = samples
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().fold(0.0, |acc, &(w, a)| acc + f(w, a)))
        .collect();
    partial.iter().sum::<f64>() / samples.len() as f64
}

/// `(O h)(x)` for one neuron with input weight `w` and bias `a`.
fn transformed_activation(op: &LinearOperator, activation: ActivationKind, w: f64, a: f64, x: f64) -> f64 {
    let z = w * x + a;
    op.combine(activation.eval(z), (w * w) * activation.d2(z))
}

fn check_supported(op: &LinearOperator, activation: ActivationKind) -> Result<()> {
    if activation == ActivationKind::Relu && op.second_order_coeff() != 0.0 {
        return Err(Error::UnsupportedFunction(format!(
            "ReLU has no classical second derivative for the {:?} operator",
            op.kind()
        )));
    }
    Ok(())
}

fn validate_common(prior: &WeightPrior, n_samples: usize) -> Result<()> {
    prior.validate()?;
    if n_samples == 0 {
        return Err(invalid("need at least one Monte-Carlo sample"));
    }
    Ok(())
}

/// Covariance estimator over a fixed sample set.
fn estimate(
    op: &LinearOperator,
    activation: ActivationKind,
    prior: &WeightPrior,
    samples: &[(f64, f64)],
    x: f64,
    x_prime: f64,
) -> f64 {
    let bias = op.combine(prior.sigma_b, 0.0);
    let a2 = prior.amplitude * prior.amplitude;
    let product = |w: f64, a: f64| {
        transformed_activation(op, activation, w, a, x) * transformed_activation(op, activation, w, a, x_prime)
    };
    let mean = if prior.is_deterministic() {
        let (w, a) = samples[0];
        product(w, a)
    } else {
        block_mean(samples, product)
    };
    bias * bias + a2 * mean
}

/// Monte-Carlo estimate of `σ_b² + A² E[h(w x + a) h(w x' + a)]`.
///
/// The same `(w, a)` draws serve both arguments, so the estimate is exactly
/// symmetric in `(x, x')`. A prior with two delta laws is evaluated in closed
/// form.
pub fn mc_covariance(
    activation: ActivationKind,
    prior: &WeightPrior,
    x: f64,
    x_prime: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    validate_common(prior, n_samples)?;
    let samples = prior_samples(prior, if prior.is_deterministic() { 1 } else { n_samples }, seed);
    Ok(estimate(&LinearOperator::identity(), activation, prior, &samples, x, x_prime))
}

/// Per-sample products `(O h)(x) (O h)(x')` before averaging.
pub fn mc_products(
    op: &LinearOperator,
    activation: ActivationKind,
    prior: &WeightPrior,
    x: f64,
    x_prime: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    validate_common(prior, n_samples)?;
    check_supported(op, activation)?;
    Ok(prior_samples(prior, n_samples, seed)
        .into_iter()
        .map(|(w, a)| transformed_activation(op, activation, w, a, x) * transformed_activation(op, activation, w, a, x_prime))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub grid: Vec<(f64, f64)>,
    pub mc_estimate: Vec<f64>,
    pub kernel_value: Vec<f64>,
    pub max_abs_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl CorrespondenceReport {
    pub fn abs_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.mc_estimate.iter().zip(&self.kernel_value).map(|(m, k)| (m - k).abs())
    }
}

fn build_report(
    op: &LinearOperator,
    activation: ActivationKind,
    prior: &WeightPrior,
    target: &Kernel,
    grid: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> Result<CorrespondenceReport> {
    validate_common(prior, n_samples)?;
    if grid.is_empty() {
        return Err(invalid("correspondence grid is empty"));
    }
    let samples = prior_samples(prior, if prior.is_deterministic() { 1 } else { n_samples }, seed);
    let mut mc_estimate = Vec::with_capacity(grid.len());
    let mut kernel_value = Vec::with_capacity(grid.len());
    for &(x, xp) in grid {
        mc_estimate.push(estimate(op, activation, prior, &samples, x, xp));
        kernel_value.push(target.try_eval(x, xp)?);
    }
    let max_abs_error = mc_estimate.iter().zip(&kernel_value).map(|(m, k)| (m - k).abs()).fold(0.0, f64::max);
    Ok(CorrespondenceReport { grid: grid.to_vec(), mc_estimate, kernel_value, max_abs_error, n_samples, seed })
}

/// Compare the Monte-Carlo output covariance with `target` on `grid`.
pub fn correspondence_check(
    activation: ActivationKind,
    prior: &WeightPrior,
    target: &Kernel,
    grid: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> Result<CorrespondenceReport> {
    build_report(&LinearOperator::identity(), activation, prior, target, grid, n_samples, seed)
}

/// Compare `A² E[(O h)(x) (O h)(x')]` with `O_x O_x' target`.
///
/// The operator is applied to the activation analytically, sample by sample.
pub fn transformed_correspondence(
    op: &LinearOperator,
    activation: ActivationKind,
    prior: &WeightPrior,
    target: &Kernel,
    grid: &[(f64, f64)],
    n_samples: usize,
    seed: u64,
) -> Result<CorrespondenceReport> {
    check_supported(op, activation)?;
    build_report(op, activation, prior, &operator_transform(op, target), grid, n_samples, seed)
}

/// All `(x, x')` pairs of an `n`-point equidistant grid on `[lo, hi]`.
pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let pts: Vec<f64> = match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    };
    pts.iter().flat_map(|&x| pts.iter().map(move |&y| (x, y))).collect()
}
