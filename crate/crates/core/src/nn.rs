//! Single-hidden-layer network `f(x) = Σ_k v_k h(w_k x + a_k) + b`.
//!
//! Besides the forward pass the network exposes exact input derivatives up to
//! second order and exact parameter gradients of both `f` and `f''`, which is
//! everything a physics loss built from a second-order operator needs.

use std::f64::consts::TAU;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operators::LinearOperator;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    Tanh,
    Sin,
}

impl ActivationKind {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Self::Relu => z.max(0.0),
            Self::Tanh => z.tanh(),
            Self::Sin => z.sin(),
        }
    }

    /// First derivative. ReLU uses the subgradient 0 at the kink.
    #[inline]
    pub fn d1(self, z: f64) -> f64 {
        match self {
            Self::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Self::Sin => z.cos(),
        }
    }

    /// Second derivative; zero everywhere for ReLU.
    #[inline]
    pub fn d2(self, z: f64) -> f64 {
        match self {
            Self::Relu => 0.0,
            Self::Tanh => {
                let t = z.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Self::Sin => -z.sin(),
        }
    }

    #[inline]
    pub fn d3(self, z: f64) -> f64 {
        match self {
            Self::Relu => 0.0,
            Self::Tanh => {
                let t = z.tanh();
                (1.0 - t * t) * (6.0 * t * t - 2.0)
            }
            Self::Sin => -z.cos(),
        }
    }
}

/// Which parameter groups an optimizer may update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trainable {
    pub w: bool,
    pub a: bool,
    pub v: bool,
    pub b: bool,
}

impl Trainable {
    pub const ALL: Self = Self { w: true, a: true, v: true, b: true };

    pub fn as_array(&self) -> [bool; 4] {
        [self.w, self.a, self.v, self.b]
    }
}

/// Gradient with respect to `(w, a, v, b)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamGradient {
    pub d_w: Vec<f64>,
    pub d_a: Vec<f64>,
    pub d_v: Vec<f64>,
    pub d_b: f64,
}

impl ParamGradient {
    pub fn zeros(n: usize) -> Self {
        Self { d_w: vec![0.0; n], d_a: vec![0.0; n], d_v: vec![0.0; n], d_b: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.d_v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_v.is_empty()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ParamGradient, scale: f64) {
        for (dst, src) in [(&mut self.d_w, &other.d_w), (&mut self.d_a, &other.d_a), (&mut self.d_v, &other.d_v)] {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
        self.d_b += scale * other.d_b;
    }

    /// Groups in the order `w, a, v, b`.
    pub fn groups(&self) -> [&[f64]; 4] {
        [&self.d_w, &self.d_a, &self.d_v, std::slice::from_ref(&self.d_b)]
    }

    pub fn groups_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.d_w, &mut self.d_a, &mut self.d_v, std::slice::from_mut(&mut self.d_b)]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups().into_iter().flatten().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetCheckpoint")]
pub struct SingleLayerNet {
    activation: ActivationKind,
    w: Vec<f64>,
    a: Vec<f64>,
    v: Vec<f64>,
    b: f64,
    trainable: Trainable,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetCheckpoint {
    activation: ActivationKind,
    w: Vec<f64>,
    a: Vec<f64>,
    v: Vec<f64>,
    b: f64,
    trainable: Trainable,
}

impl TryFrom<NetCheckpoint> for SingleLayerNet {
    type Error = Error;

    fn try_from(c: NetCheckpoint) -> Result<Self> {
        SingleLayerNet::new(c.activation, c.w, c.a, c.v, c.b, c.trainable)
    }
}

impl SingleLayerNet {
    pub fn new(
        activation: ActivationKind,
        w: Vec<f64>,
        a: Vec<f64>,
        v: Vec<f64>,
        b: f64,
        trainable: Trainable,
    ) -> Result<Self> {
        let n = v.len();
        if n == 0 {
            return Err(invalid("network needs at least one hidden neuron"));
        }
        for len in [w.len(), a.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, actual: len });
            }
        }
        if w.iter().chain(&a).chain(&v).any(|p| !p.is_finite()) || !b.is_finite() {
            return Err(invalid("network parameters must be finite"));
        }
        Ok(Self { activation, w, a, v, b, trainable })
    }

    /// Seeded random initialization.
    ///
    /// `v_k ~ N(0, amplitude² / N)`; `a_k ~ U[0, 2π)` for sine networks and
    /// `N(0, 1)` otherwise; `w_k ~ N(0, 1)` unless `fixed_w` pins every input
    /// weight (and freezes the group). The output bias starts at zero.
    pub fn init(activation: ActivationKind, n_hidden: usize, amplitude: f64, fixed_w: Option<f64>, seed: u64) -> Result<Self> {
        if n_hidden == 0 {
            return Err(invalid("network needs at least one hidden neuron"));
        }
        let mut rng = rng::stream(seed, 0);
        let w: Vec<f64> = match fixed_w {
            Some(value) => vec![value; n_hidden],
            None => (0..n_hidden).map(|_| StandardNormal.sample(&mut rng)).collect(),
        };
        let a: Vec<f64> = match activation {
            ActivationKind::Sin => (0..n_hidden).map(|_| rng.random_range(0.0..TAU)).collect(),
            _ => (0..n_hidden).map(|_| StandardNormal.sample(&mut rng)).collect(),
        };
        let v_law = Normal::new(0.0, amplitude / (n_hidden as f64).sqrt())
            .map_err(|e| invalid(format!("output weight scale: {e}")))?;
        let v: Vec<f64> = (0..n_hidden).map(|_| v_law.sample(&mut rng)).collect();
        let trainable = Trainable { w: fixed_w.is_none(), ..Trainable::ALL };
        Self::new(activation, w, a, v, 0.0, trainable)
    }

    /// Sine network whose input weights all equal the wave number `nu` and
    /// whose output bias is zero, so `f'' + nu² f = 0` for every `v` and `a`.
    ///
    /// With `learn_frequency` the input weights start at `nu` but are left
    /// trainable, which gives up exact annihilation once they move.
    pub fn physics_constrained(nu: f64, n_hidden: usize, seed: u64, learn_frequency: bool) -> Result<Self> {
        let mut net = Self::init(ActivationKind::Sin, n_hidden, 1.0, Some(nu), seed)?;
        net.trainable = Trainable { w: learn_frequency, a: true, v: true, b: false };
        Ok(net)
    }

    pub fn n_hidden(&self) -> usize {
        self.v.len()
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn trainable(&self) -> Trainable {
        self.trainable
    }

    pub fn set_trainable(&mut self, trainable: Trainable) {
        self.trainable = trainable;
    }

    /// Parameter groups in the order `w, a, v, b`, paired with their flags.
    pub fn groups_mut(&mut self) -> [(bool, &mut [f64]); 4] {
        let t = self.trainable;
        [
            (t.w, &mut self.w[..]),
            (t.a, &mut self.a[..]),
            (t.v, &mut self.v[..]),
            (t.b, std::slice::from_mut(&mut self.b)),
        ]
    }

    pub fn groups(&self) -> [&[f64]; 4] {
        [&self.w, &self.a, &self.v, std::slice::from_ref(&self.b)]
    }

    /// `Σ_k |v_k|`
    pub fn output_scale(&self) -> f64 {
        self.v.iter().map(|v| v.abs()).sum()
    }

    fn pre_activations(&self, x: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.w.iter().zip(&self.a).map(move |(w, a)| w * x + a).enumerate()
    }

    pub fn forward(&self, x: f64) -> f64 {
        let h = self.activation;
        let mut sum = 0.0;
        for (k, z) in self.pre_activations(x) {
            sum += self.v[k] * h.eval(z);
        }
        sum + self.b
    }

    pub fn forward_dx(&self, x: f64) -> f64 {
        let h = self.activation;
        let mut sum = 0.0;
        for (k, z) in self.pre_activations(x) {
            sum += self.v[k] * self.w[k] * h.d1(z);
        }
        sum
    }

    /// `∂²f/∂x² = Σ_k v_k w_k² h''(w_k x + a_k)`
    pub fn forward_dx2(&self, x: f64) -> f64 {
        let h = self.activation;
        let mut sum = 0.0;
        for (k, z) in self.pre_activations(x) {
            let w = self.w[k];
            sum += self.v[k] * ((w * w) * h.d2(z));
        }
        sum
    }

    /// `(O f)(x)`, applying the operator neuron by neuron.
    ///
    /// Each term is `v_k (O h_k)(x)`, so a neuron that the operator
    /// annihilates contributes an exact zero rather than a rounding residue.
    pub fn operator_residual(&self, op: &LinearOperator, x: f64) -> f64 {
        let h = self.activation;
        let mut sum = 0.0;
        for (k, z) in self.pre_activations(x) {
            let w = self.w[k];
            sum += self.v[k] * op.combine(h.eval(z), (w * w) * h.d2(z));
        }
        sum + op.combine(self.b, 0.0)
    }

    /// Gradient of `upstream * f(x)` with respect to all parameters.
    pub fn grad_params(&self, x: f64, upstream: f64) -> ParamGradient {
        let h = self.activation;
        let mut g = ParamGradient::zeros(self.n_hidden());
        for (k, z) in self.pre_activations(x) {
            let dz = upstream * self.v[k] * h.d1(z);
            g.d_v[k] = upstream * h.eval(z);
            g.d_a[k] = dz;
            g.d_w[k] = dz * x;
        }
        g.d_b = upstream;
        g
    }

    /// Gradient of `upstream * f''(x)` with respect to all parameters.
    pub fn grad_params_of_dx2(&self, x: f64, upstream: f64) -> ParamGradient {
        let h = self.activation;
        let mut g = ParamGradient::zeros(self.n_hidden());
        for (k, z) in self.pre_activations(x) {
            let (w, v) = (self.w[k], self.v[k]);
            let (d2, d3) = (h.d2(z), h.d3(z));
            g.d_v[k] = upstream * w * w * d2;
            g.d_a[k] = upstream * v * w * w * d3;
            g.d_w[k] = upstream * v * (2.0 * w * d2 + w * w * x * d3);
        }
        g
    }

    /// Gradient of `upstream * (O f)(x)`.
    pub fn grad_operator_residual(&self, op: &LinearOperator, x: f64, upstream: f64) -> ParamGradient {
        let c2 = op.second_order_coeff();
        let c0 = op.zeroth_order_coeff();
        let mut g = ParamGradient::zeros(self.n_hidden());
        if c2 != 0.0 {
            g.add_scaled(&self.grad_params_of_dx2(x, upstream), c2);
        }
        if c0 != 0.0 {
            g.add_scaled(&self.grad_params(x, upstream), c0);
        }
        g
    }
}
