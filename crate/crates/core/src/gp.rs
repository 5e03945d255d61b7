//! Zero-mean Gaussian processes: prior sampling, exact regression and the
//! differential-equation residual of sampled paths.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{gram, Kernel};
use crate::linalg::{self, JitterPolicy};
use crate::operators::LinearOperator;
use crate::rng;

/// Tolerance below zero at which posterior variances are clamped to zero.
const VARIANCE_CLAMP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub kernel: Kernel,
    /// Variance of the additive observation noise.
    pub noise_variance: f64,
    #[serde(default)]
    pub jitter: JitterPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GpPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GpPosterior {
    /// Pointwise standard deviation.
    pub fn std(&self) -> Vec<f64> {
        self.covariance.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

impl GpModel {
    pub fn new(kernel: Kernel, noise_variance: f64) -> Result<Self> {
        if !noise_variance.is_finite() || noise_variance < 0.0 {
            return Err(invalid(format!("noise variance must be finite and >= 0, got {noise_variance}")));
        }
        kernel.validate()?;
        Ok(Self { kernel, noise_variance, jitter: JitterPolicy::default() })
    }

    /// One prior draw `g = L z` at `points`.
    ///
    /// `L` is the pivoted Cholesky factor of the Gram matrix, truncated at the
    /// policy's starting jitter level. Rank-deficient kernels (the cosine
    /// kernel has rank two) therefore produce paths that lie exactly in the
    /// kernel's span instead of carrying white jitter noise.
    pub fn sample_prior(&self, points: &[f64], seed: u64) -> Result<Vec<f64>> {
        let g = gram(&self.kernel, points)?;
        let scale = linalg::mean_diagonal(&g).abs();
        let factor = linalg::pivoted_cholesky(&g, self.jitter.start * scale, self.jitter.max * scale)?;
        let mut rng = rng::stream(seed, 0);
        let z = DVector::from_iterator(factor.ncols(), (0..factor.ncols()).map(|_| StandardNormal.sample(&mut rng)));
        Ok((factor * z).iter().copied().collect())
    }

    /// Exact conditioning on `(train_x, train_y)`, evaluated at `query_x`.
    pub fn posterior(&self, train_x: &[f64], train_y: &[f64], query_x: &[f64]) -> Result<GpPosterior> {
        if train_x.is_empty() {
            return Err(invalid("posterior needs at least one training point"));
        }
        if train_x.len() != train_y.len() {
            return Err(Error::DimensionMismatch { expected: train_x.len(), actual: train_y.len() });
        }
        if query_x.is_empty() {
            return Err(invalid("posterior needs at least one query point"));
        }
        let mut k = gram(&self.kernel, train_x)?;
        for i in 0..train_x.len() {
            k[(i, i)] += self.noise_variance;
        }
        let chol = linalg::jittered_cholesky(&k, &self.jitter)?;

        let mut cross = DMatrix::zeros(train_x.len(), query_x.len());
        for (i, &xt) in train_x.iter().enumerate() {
            for (j, &xq) in query_x.iter().enumerate() {
                cross[(i, j)] = self.kernel.try_eval(xt, xq)?;
            }
        }
        let y = DVector::from_column_slice(train_y);
        let alpha = chol.factor.solve(&y);
        let mean = cross.transpose() * alpha;

        let v = chol
            .factor
            .l_dirty()
            .solve_lower_triangular(&cross)
            .ok_or_else(|| Error::InvalidMatrix("singular Cholesky factor".into()))?;
        let prior = gram(&self.kernel, query_x)?;
        let mut covariance = prior - v.transpose() * v;
        covariance = (&covariance + covariance.transpose()) * 0.5;
        for i in 0..query_x.len() {
            let d = covariance[(i, i)];
            if d < 0.0 && d >= -VARIANCE_CLAMP {
                covariance[(i, i)] = 0.0;
            }
        }
        Ok(GpPosterior { mean, covariance })
    }

    /// `max |O g|` over the interior of an equidistant grid for one prior
    /// draw `g`, with the second derivative taken as a grid second difference.
    pub fn pde_residual_of_sample(&self, op: &LinearOperator, points: &[f64], seed: u64) -> Result<f64> {
        let h = grid_step(points)?;
        let g = self.sample_prior(points, seed)?;
        Ok(grid_residual(op, &g, h))
    }
}

/// Spacing of an equidistant grid with at least five points.
pub fn grid_step(points: &[f64]) -> Result<f64> {
    if points.len() < 5 {
        return Err(invalid(format!("residual grid needs at least 5 points, got {}", points.len())));
    }
    let h = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("residual grid must be strictly increasing"));
    }
    for w in points.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(invalid("residual grid must be equidistant"));
        }
    }
    Ok(h)
}

/// `max_i |O g|(x_i)` over interior grid nodes.
pub fn grid_residual(op: &LinearOperator, values: &[f64], h: f64) -> f64 {
    values
        .windows(3)
        .map(|w| op.combine(w[1], (w[0] - 2.0 * w[1] + w[2]) / (h * h)).abs())
        .fold(0.0, f64::max)
}
