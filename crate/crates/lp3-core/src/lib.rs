//! Training one-dimensional random-feature maps on short periodic datasets and
//! analysing the dynamical systems they induce.
//!
//! The crate has three layers:
//!
//! * **Kernels and regression** — [`kernels`] provides the closed-form
//!   infinite-width kernels Θ(x, y) of one-layer random-feature networks
//!   (erf / sin / cos / ReLU activations, their singular large-scale limits,
//!   uniform-weight quadrature kernels, and deep NNGP/NTK recursions),
//!   together with first and second x-derivatives and a Monte-Carlo
//!   estimator. [`elm`] is the finite-N counterpart (sampled features plus a
//!   ridgeless, minimum-norm readout), and [`limitmap`] solves the exact
//!   N → ∞ interpolation map f(x) = Θ(x, X) Θ(X, X)⁻¹ Y.
//! * **Dynamics** — [`dynamics`] iterates any 1-D map with divergence guards,
//!   Lyapunov exponents and attractor-period detection; [`orbits`] runs
//!   multistart Newton censuses of periodic orbits and continues them in the
//!   feedback strength; [`quadratic`] covers the quadratic-interpolation
//!   theory: conjugacy to x² + κ, κ-type classification, logistic-parameter
//!   mapping and birth-order scans.
//! * **Support** — [`dataset`] (validated training pairs), [`linalg`],
//!   [`quadrature`], [`rng`] (a named, portable ChaCha12 generator) and
//!   [`math`] (libm-backed scalar helpers).
//!
//! The crate is `no_std` + `alloc`; everything is deterministic given the
//! seeds that appear explicitly in the APIs.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod dynamics;
pub mod elm;
pub mod kernels;
pub mod limitmap;
pub mod linalg;
pub mod math;
pub mod orbits;
pub mod quadratic;
pub mod quadrature;
pub mod rng;
