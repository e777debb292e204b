//! Core library for conservative bilinear ("Euler-type") vector fields on
//! `R^d` with partial linear damping and degenerate stochastic forcing.
//!
//! The library is organized around the linear constraint class of symmetric
//! coefficient tensors whose quadratic fields conserve energy, are
//! divergence-free, and vanish on every coordinate axis. On top of that it
//! provides:
//!
//! * [`tensor`] — representation, sampling, and validation of constraint-class
//!   coefficient tensors (including the cyclic advection model built in);
//! * [`spectral`] — axis linearizations, a dense real eigensolver, hyperbolicity
//!   classification, and stable/unstable/center splittings;
//! * [`ladder`] — the inductive Lie-bracket ladder and its determinant
//!   certificate for hypoellipticity, plus a numeric bracket-span check;
//! * [`flow`] — the conservative ODE integrator, derivative polynomials, and
//!   kernel-passthrough scans;
//! * [`sde`] — tamed Euler–Maruyama simulation of the damped/forced SDE and its
//!   high-energy rescaling, with energy-balance, exit-time, flux, and
//!   coercivity estimators;
//! * [`chain`] — the coefficient-switched Markov chain and its Lyapunov drift
//!   and moment diagnostics.
//!
//! Everything is deterministic given a master seed: stochastic kernels derive
//! one counter-based stream per (path, coordinate) via [`rng::seed_derive`],
//! so ensembles reproduce bitwise regardless of scheduling.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable default features
//! and enable `libm` for builds without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

#[macro_use]
extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("eulerflow-core requires either the `std` or the `libm` feature");

pub mod chain;
pub mod error;
pub mod flow;
pub mod ladder;
pub(crate) mod math;
pub mod matrix;
pub mod polyfield;
pub mod rng;
pub mod sde;
pub mod spectral;
pub mod stats;
pub mod tensor;

pub use error::CoreError;
pub use matrix::Mat;
pub use tensor::CoefficientTensor;
