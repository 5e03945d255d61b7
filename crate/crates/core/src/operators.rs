//! Linear differential operators in one input dimension.
//!
//! Every supported operator has the form `c2 * d²/dx² + c0`, which is all the
//! Helmholtz family needs. [`LinearOperator::combine`] is the single place
//! where a function value and its second derivative are turned into `(O f)(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Identity,
    Laplace,
    Helmholtz,
}

/// A linear differential operator `O_x` with constant coefficients.
///
/// `nu` is the Helmholtz wave number and is ignored by the other kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOperator")]
pub struct LinearOperator {
    kind: OperatorKind,
    #[serde(default)]
    nu: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    kind: OperatorKind,
    #[serde(default)]
    nu: f64,
}

impl TryFrom<RawOperator> for LinearOperator {
    type Error = Error;

    fn try_from(raw: RawOperator) -> Result<Self> {
        LinearOperator::new(raw.kind, raw.nu)
    }
}

impl LinearOperator {
    pub fn new(kind: OperatorKind, nu: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(invalid(format!("wave number must be finite and >= 0, got {nu}")));
        }
        Ok(Self { kind, nu })
    }

    pub const fn identity() -> Self {
        Self { kind: OperatorKind::Identity, nu: 0.0 }
    }

    pub const fn laplace() -> Self {
        Self { kind: OperatorKind::Laplace, nu: 0.0 }
    }

    /// `d²/dx² + nu²`.
    ///
    /// # Panics
    /// If `nu` is negative or not finite.
    pub fn helmholtz(nu: f64) -> Self {
        Self::new(OperatorKind::Helmholtz, nu).expect("invalid Helmholtz wave number")
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Coefficient of the second derivative.
    pub fn second_order_coeff(&self) -> f64 {
        match self.kind {
            OperatorKind::Identity => 0.0,
            OperatorKind::Laplace | OperatorKind::Helmholtz => 1.0,
        }
    }

    /// Coefficient of the function value.
    pub fn zeroth_order_coeff(&self) -> f64 {
        match self.kind {
            OperatorKind::Identity => 1.0,
            OperatorKind::Laplace => 0.0,
            OperatorKind::Helmholtz => self.nu * self.nu,
        }
    }

    /// `(O f)(x)` from `f(x)` and `f''(x)`.
    ///
    /// The Helmholtz branch multiplies `nu * nu` first so that a sinusoid at
    /// frequency `nu` cancels bit-for-bit when `second` was formed as
    /// `(nu * nu) * (-value)`.
    #[inline]
    pub fn combine(&self, value: f64, second: f64) -> f64 {
        match self.kind {
            OperatorKind::Identity => value,
            OperatorKind::Laplace => second,
            OperatorKind::Helmholtz => second + (self.nu * self.nu) * value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdOrder {
    Second,
}

/// Central finite-difference scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    step: f64,
    order: FdOrder,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self { step: DEFAULT_FD_STEP, order: FdOrder::Second }
    }
}

impl FdScheme {
    pub fn new(step: f64) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 || step > 1e-1 {
            return Err(invalid(format!("finite-difference step must lie in (0, 0.1], got {step}")));
        }
        Ok(Self { step, order: FdOrder::Second })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn order(&self) -> FdOrder {
        self.order
    }

    /// Second derivative by `(f(x-h) - 2 f(x) + f(x+h)) / h²`.
    pub fn second_derivative<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<f64> {
        let h = self.step;
        let lo = checked(&f, x - h)?;
        let mid = checked(&f, x)?;
        let hi = checked(&f, x + h)?;
        Ok((lo - 2.0 * mid + hi) / (h * h))
    }
}

fn checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteValue { x })
    }
}

/// `(O f)(x)` with the central second-difference stencil.
pub fn apply_fd<F: Fn(f64) -> f64>(op: &LinearOperator, f: F, x: f64, scheme: &FdScheme) -> Result<f64> {
    match op.kind {
        OperatorKind::Identity => checked(&f, x),
        OperatorKind::Laplace | OperatorKind::Helmholtz => {
            let second = scheme.second_derivative(&f, x)?;
            let value = if op.kind == OperatorKind::Helmholtz { checked(&f, x)? } else { 0.0 };
            Ok(op.combine(value, second))
        }
    }
}

/// Closed-form functions with exact second derivatives.
#[derive(Clone, Debug)]
pub enum AnalyticFunction {
    /// `amplitude * sin(frequency * x + phase)`
    Sinusoid { amplitude: f64, frequency: f64, phase: f64 },
    /// Coefficients in ascending powers of `x`.
    Polynomial(Vec<f64>),
    /// `scale * exp(rate * x)`
    Exponential { scale: f64, rate: f64 },
    /// `Σ c_i f_i`
    Combination(Vec<(f64, AnalyticFunction)>),
    /// Evaluable only; no derivatives are known.
    Custom(fn(f64) -> f64),
}

impl AnalyticFunction {
    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self::Sinusoid { amplitude, frequency, phase }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Sinusoid { amplitude, frequency, phase } => amplitude * (frequency * x + phase).sin(),
            Self::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            Self::Exponential { scale, rate } => scale * (rate * x).exp(),
            Self::Combination(terms) => terms.iter().map(|(c, f)| c * f.eval(x)).sum(),
            Self::Custom(f) => f(x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Self::Sinusoid { amplitude, frequency, phase } => {
                -(frequency * frequency) * (amplitude * (frequency * x + phase).sin())
            }
            Self::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * x + (k * (k - 1)) as f64 * ck),
            Self::Exponential { scale, rate } => rate * rate * scale * (rate * x).exp(),
            Self::Combination(terms) => {
                let mut sum = 0.0;
                for (c, f) in terms {
                    sum += c * f.second_derivative(x)?;
                }
                sum
            }
            Self::Custom(_) => {
                return Err(Error::UnsupportedFunction("custom function has no analytic derivatives".into()))
            }
        })
    }
}

/// Exact `(O f)(x)`.
pub fn apply_analytic(op: &LinearOperator, f: &AnalyticFunction, x: f64) -> Result<f64> {
    let value = f.eval(x);
    if op.kind == OperatorKind::Identity {
        return Ok(value);
    }
    Ok(op.combine(value, f.second_derivative(x)?))
}
