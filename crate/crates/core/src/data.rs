//! Noisy observations of a Helmholtz fundamental solution.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Parameters a dataset was generated from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataMeta {
    pub omega: f64,
    pub phi: f64,
    pub noise_frac: f64,
    pub seed: u64,
    pub domain: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    pub meta: Option<DataMeta>,
}

impl Dataset {
    /// Pairs with strictly increasing abscissae.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), actual: ys.len() });
        }
        if xs.is_empty() {
            return Err(invalid("dataset is empty"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("dataset abscissae must be strictly increasing"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("dataset values must be finite"));
        }
        Ok(Self { xs, ys, meta: None })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

/// The clean signal `sin(omega x + phi)`.
pub fn fundamental_solution(omega: f64, phi: f64, x: f64) -> f64 {
    (omega * x + phi).sin()
}

/// `n` equidistant points on `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// `y = sin(omega x + phi) + ε` on an equidistant grid, `ε ~ N(0, noise_frac²)`.
///
/// The clean signal has unit amplitude, so `noise_frac` is the noise standard
/// deviation.
pub fn generate(omega: f64, phi: f64, n_points: usize, noise_frac: f64, domain: (f64, f64), seed: u64) -> Result<Dataset> {
    let (lo, hi) = domain;
    if n_points < 2 {
        return Err(invalid(format!("need at least 2 points, got {n_points}")));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid(format!("invalid domain [{lo}, {hi}]")));
    }
    if !(noise_frac >= 0.0) || !noise_frac.is_finite() {
        return Err(invalid(format!("noise fraction must be finite and >= 0, got {noise_frac}")));
    }
    if !omega.is_finite() || !phi.is_finite() {
        return Err(invalid("omega and phi must be finite"));
    }
    let xs = linspace(lo, hi, n_points);
    let mut rng = rng::stream(seed, 0);
    let ys = xs
        .iter()
        .map(|&x| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            fundamental_solution(omega, phi, x) + noise_frac * eps
        })
        .collect();
    let mut data = Dataset::new(xs, ys)?;
    data.meta = Some(DataMeta { omega, phi, noise_frac, seed, domain });
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{apply_analytic, AnalyticFunction, LinearOperator};
    use std::f64::consts::PI;

    const DOMAIN: (f64, f64) = (0.0, 4.0 * PI);

    #[test]
    fn noiseless_data_is_the_clean_signal() {
        let d = generate(0.51, 0.50001, 11, 0.0, DOMAIN, 1).unwrap();
        assert_eq!(d.len(), 11);
        for (x, y) in d.iter() {
            assert_eq!(y, (0.51 * x + 0.50001f64).sin());
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(0.51, 0.5, 11, 0.2, DOMAIN, 4).unwrap();
        assert_eq!(a, generate(0.51, 0.5, 11, 0.2, DOMAIN, 4).unwrap());
        assert_ne!(a, generate(0.51, 0.5, 11, 0.2, DOMAIN, 5).unwrap());
    }

    #[test]
    fn noise_has_requested_std() {
        let d = generate(0.51, 0.5, 10_000, 0.2, DOMAIN, 8).unwrap();
        let eps: Vec<f64> = d.iter().map(|(x, y)| y - fundamental_solution(0.51, 0.5, x)).collect();
        let mean = eps.iter().sum::<f64>() / eps.len() as f64;
        let std = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (eps.len() - 1) as f64).sqrt();
        assert!((std - 0.2).abs() < 0.01, "{std}");
    }

    #[test]
    fn grid_is_equidistant() {
        let d = generate(1.0, 0.0, 11, 0.0, DOMAIN, 0).unwrap();
        let gap = d.xs()[1] - d.xs()[0];
        for w in d.xs().windows(2) {
            assert!((w[1] - w[0] - gap).abs() < 1e-12);
        }
        assert_eq!(d.xs()[0], 0.0);
        assert_eq!(*d.xs().last().unwrap(), 4.0 * PI);
    }

    #[test]
    fn clean_signal_solves_helmholtz() {
        let f = AnalyticFunction::sinusoid(1.0, 0.51, 0.50001);
        for x in linspace(0.0, 4.0 * PI, 37) {
            assert_eq!(apply_analytic(&LinearOperator::helmholtz(0.51), &f, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn invalid_arguments() {
        assert!(generate(0.5, 0.0, 1, 0.1, DOMAIN, 0).is_err());
        assert!(generate(0.5, 0.0, 5, 0.1, (1.0, 1.0), 0).is_err());
        assert!(generate(0.5, 0.0, 5, -0.1, DOMAIN, 0).is_err());
        assert!(Dataset::new(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(Dataset::new(vec![], vec![]).is_err());
    }
}
