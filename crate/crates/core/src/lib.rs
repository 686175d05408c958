//! Horton-Strahler and Tokunaga statistics of Kingman's coalescent and of
//! level-set trees of white noise.
//!
//! * [`tree`]: rooted binary trees, Horton-Strahler orders, Tokunaga counts,
//!   pruning, canonical shapes and the selected-leaf metric.
//! * [`coalescent`]: Kingman and general-kernel coalescent simulation and the
//!   dual uniform fragmentation.
//! * [`levelset`]: level-set trees of time series and extended white noise.
//! * [`ode`]: Smoluchowski-Horton ODE solvers, asymptotic Horton ratios,
//!   Tokunaga indices and the Horton exponent.
//! * [`stats`]: Monte-Carlo harnesses comparing simulations with each other
//!   and with the ODE limits.

pub mod coalescent;
pub mod error;
pub mod levelset;
pub mod ode;
pub mod par;
pub mod rng;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
