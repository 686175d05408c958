//! Smoluchowski-Horton ODE solvers.
//!
//! * [`solve_h_system`] integrates the h-system on `[0, 1]`, from which
//!   [`horton_ratios`], [`tokunaga_matrix`] and [`gamma_sequence`] follow.
//! * [`iterate_functional`] applies the integrating-factor map
//!   `h_k -> h_{k+1}` by quadrature alone and serves as a check.
//! * [`solve_g_system`] integrates the same dynamics in coalescent time.
//! * [`solve_general_smoluchowski_horton`] handles an arbitrary kernel with
//!   cluster masses tracked up to a truncation.

mod dopri;
mod g;
mod general;
mod h;

pub use dopri::{integrate, Dopri5Options, Dopri5Stats};
pub use g::{solve_g_system, GRatios, GSolution};
pub use general::{solve_general_smoluchowski_horton, GeneralConfig, GeneralSolution, MassOrderState};
pub use h::{
    estimate_r, gamma_sequence, horton_ratios, iterate_functional, solve_h_system, tokunaga_matrix, FunctionalImage,
    GammaSequence, Grid, HortonRatios, HortonSolution, REstimate, SolverConfig,
};

use serde::Serialize;

use crate::error::Result;

pub const SUMMARY_SCHEMA: &str = "horton.summary/1";

/// Everything derived from one h-system solve, ready for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HortonSummary {
    pub schema: &'static str,
    pub config: SolverConfig,
    /// `N_k`, `k = 1..K`.
    pub ratios: Vec<f64>,
    /// Contribution of `[1 - eps, 1]` to each `N_k`.
    pub tail: Vec<f64>,
    /// `n_k = N_k / N_{k+1}`.
    pub horton_ratio_quotients: Vec<f64>,
    pub gamma: GammaSequence,
    pub r: Option<REstimate>,
    /// Tokunaga indices `T[a-1][b-1]`, present when `K >= 3`.
    pub tokunaga: Option<Vec<Vec<f64>>>,
    pub steps: Dopri5Stats,
}

pub fn summarize(sol: &HortonSolution) -> Result<HortonSummary> {
    let hr = horton_ratios(sol);
    let k = sol.max_order();
    Ok(HortonSummary {
        schema: SUMMARY_SCHEMA,
        config: sol.config,
        horton_ratio_quotients: hr.ratios(),
        r: estimate_r(&hr.values).ok(),
        ratios: hr.values,
        tail: hr.tail,
        gamma: gamma_sequence(sol),
        tokunaga: if k >= 3 { Some(tokunaga_matrix(sol, k - 1)?) } else { None },
        steps: sol.stats,
    })
}
