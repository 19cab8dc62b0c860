//! Scenario-based robust blackbox optimization in a Gaussian-process bandit
//! setting.
//!
//! The problem is `max_x min_d F(x, d)` over a finite grid, where `F` can
//! only be queried with noise and the uncertainty `d` is known only through
//! i.i.d. samples. The library provides:
//!
//! - uncertainty-parameterized kernels and their spectra ([`kernel`]),
//! - exact per-scenario GP posteriors ([`gp`]),
//! - scenario sampling, sample-complexity formulas, and the re-draw
//!   schedule ([`scenario`]),
//! - a synthetic ground-truth environment ([`env`]),
//! - the single-GP and scenario UCB decision loops ([`algo`]),
//! - regret under re-draw, information gain, and bound curves ([`regret`]),
//! - Monte-Carlo validation suites for the probabilistic guarantees
//!   ([`validate`]).

pub mod algo;
pub mod env;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod maxmin;
pub mod regret;
pub mod rng;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
