//! Neural networks that satisfy a linear differential equation by construction.
//!
//! The crate follows one chain of reasoning end to end and keeps every link
//! numerically checkable:
//!
//! - [`operators`]: linear differential operators (identity, Laplace, Helmholtz)
//!   applied analytically or with central finite differences.
//! - [`kernels`]: covariance functions, Mercer sums of basis functions and
//!   operator-transformed kernels, plus the kernel annihilation residual.
//! - [`gp`]: zero-mean Gaussian-process sampling and exact regression.
//! - [`nn`]: the single-hidden-layer network with analytic input and
//!   parameter derivatives.
//! - [`width_limit`]: Monte-Carlo estimates of the infinite-width output
//!   covariance under a weight prior, compared against a target kernel.
//! - [`training`]: data loss plus weighted physics loss, ADAM/SGD, and the
//!   training loop.
//! - [`data`]: noisy samples of a Helmholtz fundamental solution.
//! - [`io`]: CSV and JSON readers/writers for every artifact.
//!
//! All randomness flows through [`rng`], a seeded ChaCha stream, so every
//! stochastic result is reproducible from its seed.

pub mod data;
pub mod error;
pub mod gp;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod nn;
pub mod operators;
pub mod optim;
pub mod rng;
pub mod training;
pub mod width_limit;

pub use error::{Error, Result};
