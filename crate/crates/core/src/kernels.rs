//! Covariance functions and their images under linear operators.
//!
//! A kernel `k(x, x')` that satisfies `O_x O_x' k(x, x')|_{x = x'} = 0` yields a
//! Gaussian process whose every sample path solves `O g = 0`. The cosine
//! kernel `cos(α(x - x'))` is the one-dimensional Helmholtz example; its
//! Mercer form is the pair of basis functions `sin(αx)` and `sin(αx + π/2)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, JitterPolicy, JitteredCholesky};
use crate::operators::{apply_fd, FdScheme, LinearOperator};

/// Step used by nested finite differences on kernels.
///
/// `O_x O_x'` is a fourth-order mixed derivative, so rounding error grows like
/// `eps / h⁴`; a step of 1e-2 keeps it near 1e-8 while the second-order
/// truncation term stays small.
pub const KERNEL_FD_STEP: f64 = 1e-2;

/// Symmetry tolerance for Mercer weight matrices.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Sinusoid,
}

/// `amplitude * sin(frequency * x + phase)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisFunction {
    pub family: BasisFamily,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl BasisFunction {
    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self { family: BasisFamily::Sinusoid, amplitude, frequency, phase }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.family {
            BasisFamily::Sinusoid => self.amplitude * (self.frequency * x + self.phase).sin(),
        }
    }

    /// `ψ = O φ`, which for a sinusoid is again a sinusoid of the same
    /// frequency and phase with a rescaled amplitude.
    pub fn transformed(&self, op: &LinearOperator) -> Self {
        match self.family {
            BasisFamily::Sinusoid => {
                let w = self.frequency;
                let amplitude = op.combine(self.amplitude, -(w * w) * self.amplitude);
                Self { amplitude, ..*self }
            }
        }
    }
}

/// How an operator-transformed kernel obtains its derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum DerivativeRoute {
    /// Closed form where the base kernel supports it, nested finite
    /// differences with [`KERNEL_FD_STEP`] otherwise.
    Auto,
    FiniteDifference { step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Kernel {
    /// `cos(alpha (x - x'))`
    Cosine { alpha: f64 },
    /// `variance * exp(-(x - x')² / (2 lengthscale²))`
    SquaredExponential { lengthscale: f64, variance: f64 },
    /// `Σ_ij φ_i(x) m_ij φ_j(x')`
    MercerSum { basis: Vec<BasisFunction>, m: Vec<Vec<f64>> },
    /// `O_x O'_x' base(x, x')`
    OperatorTransformed {
        op_x: LinearOperator,
        op_x_prime: LinearOperator,
        base: Box<Kernel>,
        route: DerivativeRoute,
    },
}

impl Kernel {
    pub fn cosine(alpha: f64) -> Self {
        Self::Cosine { alpha }
    }

    pub fn squared_exponential(lengthscale: f64, variance: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) || !(variance > 0.0 && variance.is_finite()) {
            return Err(invalid(format!(
                "squared exponential needs positive lengthscale and variance, got {lengthscale}, {variance}"
            )));
        }
        Ok(Self::SquaredExponential { lengthscale, variance })
    }

    /// The canonical Mercer pair for the cosine kernel:
    /// `sin(αx) sin(αx') + sin(αx + π/2) sin(αx' + π/2)`.
    pub fn cosine_mercer_pair(alpha: f64) -> Self {
        let basis = vec![BasisFunction::sinusoid(1.0, alpha, 0.0), BasisFunction::sinusoid(1.0, alpha, FRAC_PI_2)];
        Self::MercerSum { basis, m: vec![vec![1.0, 0.0], vec![0.0, 1.0]] }
    }

    /// Check the variant's parameter invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Cosine { alpha } if !alpha.is_finite() => Err(invalid("cosine alpha must be finite")),
            Self::Cosine { .. } => Ok(()),
            Self::SquaredExponential { lengthscale, variance } => {
                Self::squared_exponential(*lengthscale, *variance).map(|_| ())
            }
            Self::MercerSum { basis, m } => validate_mercer(basis, m),
            Self::OperatorTransformed { base, route, .. } => {
                if let DerivativeRoute::FiniteDifference { step } = route {
                    FdScheme::new(*step)?;
                }
                base.validate()
            }
        }
    }

    /// `k(x, x')`. Non-finite inputs propagate as NaN; see [`Kernel::try_eval`].
    pub fn eval(&self, x: f64, x_prime: f64) -> f64 {
        match self {
            Self::Cosine { alpha } => (alpha * (x - x_prime)).cos(),
            Self::SquaredExponential { lengthscale, variance } => {
                let d = x - x_prime;
                variance * (-(d * d) / (2.0 * lengthscale * lengthscale)).exp()
            }
            Self::MercerSum { basis, m } => mercer_eval(basis, basis, m, x, x_prime),
            Self::OperatorTransformed { op_x, op_x_prime, base, route } => {
                transformed_eval(op_x, op_x_prime, base, route, x, x_prime).unwrap_or(f64::NAN)
            }
        }
    }

    /// `k(x, x')`, rejecting non-finite inputs and results.
    pub fn try_eval(&self, x: f64, x_prime: f64) -> Result<f64> {
        if !x.is_finite() || !x_prime.is_finite() {
            return Err(invalid(format!("kernel inputs must be finite, got ({x}, {x_prime})")));
        }
        let value = match self {
            Self::OperatorTransformed { op_x, op_x_prime, base, route } => {
                transformed_eval(op_x, op_x_prime, base, route, x, x_prime)?
            }
            _ => self.eval(x, x_prime),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteValue { x })
        }
    }
}

fn validate_mercer(basis: &[BasisFunction], m: &[Vec<f64>]) -> Result<()> {
    let n = basis.len();
    if m.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: m.len() });
    }
    if let Some(row) = m.iter().find(|row| row.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: row.len() });
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("weight matrix has non-finite entries".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidMatrix(format!("weight matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    if n > 0 {
        let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
        let scale = mat.abs().max().max(1.0);
        let min = linalg::min_eigenvalue(&mat);
        if min < -1e-12 * scale {
            return Err(Error::InvalidMatrix(format!("weight matrix is not positive semi-definite (eigenvalue {min:e})")));
        }
    }
    Ok(())
}

fn mercer_eval(left: &[BasisFunction], right: &[BasisFunction], m: &[Vec<f64>], x: f64, x_prime: f64) -> f64 {
    let phi_right: Vec<f64> = right.iter().map(|b| b.eval(x_prime)).collect();
    left.iter()
        .zip(m)
        .map(|(bi, row)| {
            let inner: f64 = row.iter().zip(&phi_right).map(|(mij, pj)| mij * pj).sum();
            bi.eval(x) * inner
        })
        .sum()
}

fn transformed_eval(
    op_x: &LinearOperator,
    op_x_prime: &LinearOperator,
    base: &Kernel,
    route: &DerivativeRoute,
    x: f64,
    x_prime: f64,
) -> Result<f64> {
    if *route == DerivativeRoute::Auto {
        match base {
            Kernel::Cosine { alpha } => {
                // Each side maps cos to (c0 - c2 α²) cos.
                let a2 = alpha * alpha;
                let fx = op_x.combine(1.0, -a2);
                let fxp = op_x_prime.combine(1.0, -a2);
                return Ok(fx * fxp * (alpha * (x - x_prime)).cos());
            }
            Kernel::MercerSum { basis, m } => {
                let left: Vec<_> = basis.iter().map(|b| b.transformed(op_x)).collect();
                let right: Vec<_> = basis.iter().map(|b| b.transformed(op_x_prime)).collect();
                return Ok(mercer_eval(&left, &right, m, x, x_prime));
            }
            _ => {}
        }
    }
    let step = match route {
        DerivativeRoute::Auto => KERNEL_FD_STEP,
        DerivativeRoute::FiniteDifference { step } => *step,
    };
    let scheme = FdScheme::new(step)?;
    apply_fd(
        op_x,
        |t| apply_fd(op_x_prime, |s| base.eval(t, s), x_prime, &scheme).unwrap_or(f64::NAN),
        x,
        &scheme,
    )
}

/// Gram matrix `G_ij = k(points_i, points_j)`.
///
/// The upper triangle is evaluated entry by entry (rows in parallel) and
/// mirrored, so `G` is exactly symmetric and independent of thread count.
pub fn gram(kernel: &Kernel, points: &[f64]) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(invalid("gram matrix needs at least one point"));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(invalid(format!("non-finite point {p}")));
    }
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel.try_eval(points[i], points[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Gram matrix and its jittered Cholesky factor.
pub fn gram_cholesky(kernel: &Kernel, points: &[f64], policy: &JitterPolicy) -> Result<(DMatrix<f64>, JitteredCholesky)> {
    let g = gram(kernel, points)?;
    let chol = linalg::jittered_cholesky(&g, policy)?;
    Ok((g, chol))
}

/// Build a Mercer-sum kernel, checking that `m` is square, symmetric and PSD.
pub fn mercer_from_basis(basis: Vec<BasisFunction>, m: Vec<Vec<f64>>) -> Result<Kernel> {
    validate_mercer(&basis, &m)?;
    Ok(Kernel::MercerSum { basis, m })
}

/// `O_x O_x' k(x, x')`.
///
/// Mercer sums are transformed basis function by basis function and stay
/// Mercer sums; every other kernel is wrapped with the automatic route.
pub fn operator_transform(op: &LinearOperator, kernel: &Kernel) -> Kernel {
    match kernel {
        Kernel::MercerSum { basis, m } => Kernel::MercerSum {
            basis: basis.iter().map(|b| b.transformed(op)).collect(),
            m: m.clone(),
        },
        _ => Kernel::OperatorTransformed {
            op_x: *op,
            op_x_prime: *op,
            base: Box::new(kernel.clone()),
            route: DerivativeRoute::Auto,
        },
    }
}

/// `O_x O_x' k(x, x')` by nested finite differences, whatever the base kernel.
pub fn operator_transform_fd(op: &LinearOperator, kernel: &Kernel, scheme: &FdScheme) -> Kernel {
    Kernel::OperatorTransformed {
        op_x: *op,
        op_x_prime: *op,
        base: Box::new(kernel.clone()),
        route: DerivativeRoute::FiniteDifference { step: scheme.step() },
    }
}

fn diagonal_max(kernel: &Kernel, points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(invalid("residual needs at least one point"));
    }
    points.iter().try_fold(0.0f64, |acc, &p| Ok(acc.max(kernel.try_eval(p, p)?.abs())))
}

/// `max_p |O_x O_x' k(x, x')|` on the diagonal `x = x' = p`.
pub fn boogaart_residual(op: &LinearOperator, kernel: &Kernel, points: &[f64]) -> Result<f64> {
    diagonal_max(&operator_transform(op, kernel), points)
}

/// [`boogaart_residual`] evaluated with nested finite differences.
pub fn boogaart_residual_fd(op: &LinearOperator, kernel: &Kernel, points: &[f64], scheme: &FdScheme) -> Result<f64> {
    diagonal_max(&operator_transform_fd(op, kernel, scheme), points)
}
