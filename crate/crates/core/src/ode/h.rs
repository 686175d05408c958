//! The h-system on `[0, 1]`.
//!
//! `h_1 = 1`, `h_{k+1}' = 2 h_k h_{k+1} - h_k^2`, `h_k(0) = 1`. Each `h_k` is
//! finite and smooth at `x = 1` but approaches the envelope `1/(1 - x)` on
//! `[0, 1 - c/h_k(1)]`, so the interesting structure sits in a boundary
//! layer of width about `R^-k`.
//!
//! The system is integrated in `d = 1 - x` so grid points near `x = 1` are
//! represented exactly. The output grid is uniform in `s = -ln d` from
//! `d = 1` down to `d = eps`, followed by the point `d = 0`.
//! Integrals `int_0^1 f dx` are split into `int f e^{-s} ds` over the
//! geometric part (composite Simpson) and a trapezoid over `[1 - eps, 1]`.

use serde::Serialize;

use super::dopri::{integrate, Dopri5Options, Dopri5Stats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Number of functions `h_1..h_K`.
    pub max_order: usize,
    /// The geometric grid stops at `x = 1 - eps`.
    pub eps: f64,
    /// Smallest step the integrator may take before reporting failure.
    pub delta_min: f64,
    /// Relative local error tolerance.
    pub tol: f64,
    /// Number of geometric grid intervals (even).
    pub grid_intervals: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_order: 12,
            eps: 1e-8,
            delta_min: 1e-12,
            tol: 1e-12,
            grid_intervals: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn with_order(max_order: usize) -> Self {
        Self {
            max_order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_order < 2 {
            return Err(Error::Domain(format!("max order {} < 2", self.max_order)));
        }
        if !(self.eps > 0.0 && self.eps <= 1e-6) {
            return Err(Error::Domain(format!("eps {} outside (0, 1e-6]", self.eps)));
        }
        if !(self.delta_min >= 1e-12) {
            return Err(Error::Domain(format!("delta_min {} < 1e-12", self.delta_min)));
        }
        if !(self.tol > 0.0 && self.tol < 1e-3) {
            return Err(Error::Domain(format!("tolerance {} outside (0, 1e-3)", self.tol)));
        }
        if self.grid_intervals < 4 || self.grid_intervals % 2 != 0 {
            return Err(Error::Domain("grid intervals must be even and at least 4".into()));
        }
        Ok(())
    }
}

/// Output grid shared by the h-solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// `d_i = 1 - x_i`, decreasing from 1 to `eps`, then 0.
    pub d: Vec<f64>,
    /// Spacing of the uniform `s = -ln d` part.
    pub ds: f64,
    pub eps: f64,
}

impl Grid {
    pub fn new(eps: f64, intervals: usize) -> Self {
        let s_max = -eps.ln();
        let ds = s_max / intervals as f64;
        let mut d: Vec<f64> = (0..intervals).map(|i| (-(i as f64) * ds).exp()).collect();
        d.push(eps);
        d.push(0.0);
        Self { d, ds, eps }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Index of the last geometric point, `d = eps`.
    pub fn geometric_end(&self) -> usize {
        self.d.len() - 2
    }

    pub fn x(&self, i: usize) -> f64 {
        1.0 - self.d[i]
    }

    /// `int_0^1 f(x) dx` from values `f(i)` at every grid point.
    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let (main, tail) = self.integrate_split(f);
        main + tail
    }

    /// Geometric part and `[1 - eps, 1]` tail separately.
    pub fn integrate_split(&self, f: impl Fn(usize) -> f64) -> (f64, f64) {
        let m = self.geometric_end();
        let mut acc = 0.0;
        for i in 0..=m {
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * f(i) * self.d[i];
        }
        let main = acc * self.ds / 3.0;
        let tail = self.eps * 0.5 * (f(m) + f(m + 1));
        (main, tail)
    }

    /// Running integrals `int_0^{x_i} f dx` at every grid point.
    ///
    /// Fourth-order cumulative rule in `s` on the geometric part, trapezoid
    /// on the last interval.
    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        let m = self.geometric_end();
        let g: Vec<f64> = (0..=m).map(|i| f[i] * self.d[i]).collect();
        let h = self.ds / 24.0;
        let mut out = vec![0.0; self.len()];
        for i in 0..m {
            let piece = if i == 0 {
                9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]
            } else if i + 1 == m {
                g[m - 3] - 5.0 * g[m - 2] + 19.0 * g[m - 1] + 9.0 * g[m]
            } else {
                -g[i - 1] + 13.0 * g[i] + 13.0 * g[i + 1] - g[i + 2]
            };
            out[i + 1] = out[i] + h * piece;
        }
        out[m + 1] = out[m] + 0.5 * self.eps * (f[m] + f[m + 1]);
        out
    }
}

/// Numerical solution `h_1..h_K` on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct HortonSolution {
    pub config: SolverConfig,
    pub grid: Grid,
    /// `h[k - 1][i] = h_k(x_i)`.
    pub h: Vec<Vec<f64>>,
    pub stats: Dopri5Stats,
}

impl HortonSolution {
    pub fn max_order(&self) -> usize {
        self.h.len()
    }

    /// `h_k` on the grid; `h_0 = 0`.
    pub fn h_k(&self, k: usize) -> Option<&[f64]> {
        if k == 0 {
            return None;
        }
        self.h.get(k - 1).map(Vec::as_slice)
    }

    /// `u_k = (1 - x) h_k = h_k / h` at grid point `i`; `u_0 = 0`.
    pub fn u(&self, k: usize, i: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.grid.d[i] * self.h[k - 1][i]
        }
    }

    /// `h_k(1)`.
    pub fn at_one(&self, k: usize) -> f64 {
        *self.h[k - 1].last().expect("grid is not empty")
    }

    /// Grid as CSV with columns `x, h_1, ..., h_K`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("x");
        for k in 1..=self.max_order() {
            write!(out, ",h_{k}").unwrap();
        }
        out.push('\n');
        for i in 0..self.grid.len() {
            write!(out, "{}", self.grid.x(i)).unwrap();
            for hk in &self.h {
                write!(out, ",{}", hk[i]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates the h-system jointly for `h_2..h_K`.
///
/// The system is lower triangular, so a joint adaptive solve is the same as
/// solving the linear equation for each `h_{k+1}` given `h_k`, with a single
/// step-size sequence controlling the error of all orders at once.
pub fn solve_h_system(cfg: &SolverConfig) -> Result<HortonSolution> {
    cfg.validate()?;
    let grid = Grid::new(cfg.eps, cfg.grid_intervals);
    let kk = cfg.max_order;
    let mut h = vec![vec![0.0; grid.len()]; kk];
    h[0].fill(1.0);
    let opts = Dopri5Options {
        rtol: cfg.tol,
        atol: cfg.tol,
        h_min: cfg.delta_min,
        h_max: 0.05,
        max_steps: 50_000_000,
    };
    // State y[m] = h_{m+2}; d/dd = -d/dx.
    let rhs = |_d: f64, y: &[f64], dy: &mut [f64]| {
        let mut prev = 1.0;
        for (m, v) in y.iter().enumerate() {
            dy[m] = -(2.0 * prev * v - prev * prev);
            prev = *v;
        }
    };
    let y0 = vec![1.0; kk - 1];
    let stops = &grid.d[1..];
    for k in 1..kk {
        h[k][0] = 1.0;
    }
    let stats = integrate(rhs, 1.0, &y0, stops, &opts, |idx, _, y, _| {
        for (m, v) in y.iter().enumerate() {
            h[m + 1][idx + 1] = *v;
        }
    })
    .map_err(|e| match e {
        Error::SolverFailure { x, message } => Error::SolverFailure { x: 1.0 - x, message },
        other => other,
    })?;
    Ok(HortonSolution {
        config: *cfg,
        grid,
        h,
        stats,
    })
}

/// Asymptotic Horton ratios with their `[1 - eps, 1]` tail contributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HortonRatios {
    /// `values[k - 1] = N_k`, `k = 1..K`.
    pub values: Vec<f64>,
    /// Part of each value contributed by `[1 - eps, 1]`; bounded by `eps`.
    pub tail: Vec<f64>,
}

impl HortonRatios {
    /// `n_k = N_k / N_{k+1}`, `k = 1..K-1`.
    pub fn ratios(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// `N_k = int_0^1 (1 - h_{k-1}/h)^2 dx` for `k = 1..K`.
pub fn horton_ratios(sol: &HortonSolution) -> HortonRatios {
    let (values, tail) = (1..=sol.max_order())
        .map(|k| sol.grid.integrate_split(|i| (1.0 - sol.u(k - 1, i)).powi(2)))
        .map(|(main, tail)| (main + tail, tail))
        .unzip();
    HortonRatios { values, tail }
}

/// Tokunaga indices from the h-system, `t[a - 1][b - 1]` for `1 <= a < b`:
///
/// `T_ab = 2 int (h_a - h_{a+1})(h_b - h_{b+1}) / h^2 dx / int (1 - h_b/h)^2 dx`.
///
/// Counted on simulated trees these values appear one order up: the
/// empirical `tau_{a+1,b+1}` estimates `T_ab` (so `tau_23 ~ T_12`), and the
/// empirical `tau_12 ~ 0.7918` has no entry here.
pub fn tokunaga_matrix(sol: &HortonSolution, max_order: usize) -> Result<Vec<Vec<f64>>> {
    if max_order + 1 > sol.max_order() {
        return Err(Error::Domain(format!(
            "Tokunaga indices up to {max_order} need h up to order {}, solved {}",
            max_order + 1,
            sol.max_order()
        )));
    }
    let mut t = vec![vec![0.0; max_order]; max_order];
    for b in 2..=max_order {
        let den = sol.grid.integrate(|x| (1.0 - sol.u(b, x)).powi(2));
        for a in 1..b {
            let num = sol
                .grid
                .integrate(|x| (sol.u(a, x) - sol.u(a + 1, x)) * (sol.u(b, x) - sol.u(b + 1, x)));
            t[a - 1][b - 1] = 2.0 * num / den;
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSequence {
    /// `gamma[k - 1] = h_k(1) / h_{k+1}(1)`, `k = 1..K-1`.
    pub gamma: Vec<f64>,
    /// `1 / gamma_{K-1}`.
    pub r_via_gamma: f64,
    /// Indices `k` with `gamma_{k+1} < gamma_k`.
    pub monotonicity_violations: Vec<usize>,
}

pub fn gamma_sequence(sol: &HortonSolution) -> GammaSequence {
    let gamma: Vec<f64> = (1..sol.max_order()).map(|k| sol.at_one(k) / sol.at_one(k + 1)).collect();
    let monotonicity_violations = gamma
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(k, _)| k + 1)
        .collect();
    GammaSequence {
        r_via_gamma: 1.0 / gamma.last().copied().unwrap_or(f64::NAN),
        gamma,
        monotonicity_violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct REstimate {
    /// `N_K^(-1/K)`.
    pub r_root: f64,
    /// `N_{K-1} / N_K`.
    pub r_ratio: f64,
    pub difference: f64,
}

pub fn estimate_r(values: &[f64]) -> Result<REstimate> {
    if values.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 ratios, got {}", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("non-positive Horton ratio {v}")));
    }
    let k = values.len();
    let r_root = values[k - 1].powf(-1.0 / k as f64);
    let r_ratio = values[k - 2] / values[k - 1];
    Ok(REstimate {
        r_root,
        r_ratio,
        difference: r_root - r_ratio,
    })
}

/// Result of one application of the integrating-factor functional.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalImage {
    pub values: Vec<f64>,
    /// Largest `x` where the bracket `1 - int f^2 e^{-2F}` keeps at least
    /// eight significant digits.
    pub max_usable_x: f64,
    /// Number of leading grid points at which `values` is usable.
    pub usable: usize,
}

/// `(Hf)(x) = [1 - int_0^x f^2 e^{-2F}] e^{2F}` with `F = int_0^x f`,
/// evaluated by cumulative quadrature on `grid`.
pub fn iterate_functional(grid: &Grid, f: &[f64]) -> Result<FunctionalImage> {
    if f.len() != grid.len() {
        return Err(Error::Domain(format!("{} values for a grid of {}", f.len(), grid.len())));
    }
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("functional needs finite f >= 0, got {v}")));
    }
    let big_f = grid.cumulative(f);
    let inner: Vec<f64> = f.iter().zip(&big_f).map(|(v, ff)| v * v * (-2.0 * ff).exp()).collect();
    let inner = grid.cumulative(&inner);
    let mut values = Vec::with_capacity(f.len());
    let mut usable = 0;
    for (i, (ff, q)) in big_f.iter().zip(&inner).enumerate() {
        let bracket = 1.0 - q;
        let growth = (2.0 * ff).exp();
        let v = bracket * growth;
        if usable == i && bracket.abs() > 1e-8 * q.abs().max(1.0) && v.is_finite() {
            usable = i + 1;
        }
        values.push(v);
    }
    let max_usable_x = if usable == 0 { 0.0 } else { grid.x(usable - 1) };
    Ok(FunctionalImage {
        values,
        max_usable_x,
        usable,
    })
}
