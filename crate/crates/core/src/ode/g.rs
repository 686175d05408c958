//! The g-system in coalescent time.
//!
//! `g_j(t)` is the relative number of clusters of order at least `j`:
//! `g_1 = 2/(t+2)`, `g_{j+1}' = g_j^2/2 - g_j g_{j+1}`, `g_j(0) = 0` for
//! `j >= 2`. Order-`j` counts are `eta_j = g_j - g_{j+1}` and the Horton
//! ratios are `N_j = int_0^inf g_j^2 / 2 dt`.

use serde::Serialize;

use super::dopri::{integrate, Dopri5Options, Dopri5Stats};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GSolution {
    pub t_max: f64,
    pub t: Vec<f64>,
    /// `g[j - 1][i] = g_j(t_i)`.
    pub g: Vec<Vec<f64>>,
    /// Derivatives, used for cubic Hermite interpolation.
    pub dg: Vec<Vec<f64>>,
    /// `int_0^{t_max} g_j^2 / 2`.
    pub integral: Vec<f64>,
    /// Tail estimate `2 / t_max` for the rest of each integral.
    pub tail: f64,
    pub stats: Dopri5Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GRatios {
    pub values: Vec<f64>,
    pub tail: f64,
}

impl GSolution {
    pub fn max_order(&self) -> usize {
        self.g.len()
    }

    /// `g_j(t)` for `0 <= t <= t_max`; `None` outside the solved range.
    pub fn eval(&self, j: usize, t: f64) -> Option<f64> {
        if j == 0 || j > self.g.len() || !(0.0..=self.t_max).contains(&t) {
            return None;
        }
        if j == 1 {
            return Some(2.0 / (t + 2.0));
        }
        let (g, dg) = (&self.g[j - 1], &self.dg[j - 1]);
        let i = self.t.partition_point(|&s| s <= t).clamp(1, self.t.len() - 1) - 1;
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * g[i] + h10 * h * dg[i] + h01 * g[i + 1] + h11 * h * dg[i + 1])
    }

    /// `eta_j(t) = g_j(t) - g_{j+1}(t)`; needs `j < K`.
    pub fn eta(&self, j: usize, t: f64) -> Option<f64> {
        Some(self.eval(j, t)? - self.eval(j + 1, t)?)
    }

    /// `h_k(x) = 1/(1-x) - g_{k+1}(t) / (1-x)^2` with `t = 2x/(1-x)`.
    pub fn h_from_g(&self, k: usize, x: f64) -> Option<f64> {
        let d = 1.0 - x;
        let g = self.eval(k + 1, 2.0 * x / d)?;
        Some(1.0 / d - g / (d * d))
    }

    pub fn ratios(&self) -> GRatios {
        GRatios {
            values: self.integral.iter().map(|v| v + self.tail).collect(),
            tail: self.tail,
        }
    }
}

/// Solves for `g_1..g_K` on `[0, t_max]`, recording `points + 1` values
/// spaced uniformly in `ln(1 + t)`.
pub fn solve_g_system(max_order: usize, t_max: f64, tol: f64, points: usize) -> Result<GSolution> {
    if max_order < 1 {
        return Err(Error::Domain("g-system needs at least one order".into()));
    }
    if !(t_max >= 1e3) || !t_max.is_finite() {
        return Err(Error::Domain(format!("t_max {t_max} < 1e3")));
    }
    if points < 2 {
        return Err(Error::Domain("need at least two output points".into()));
    }
    let kk = max_order;
    let lmax = t_max.ln_1p();
    let mut t: Vec<f64> = (0..=points).map(|i| (lmax * i as f64 / points as f64).exp_m1()).collect();
    t[0] = 0.0;
    t[points] = t_max;

    let mut g = vec![vec![0.0; t.len()]; kk];
    let mut dg = vec![vec![0.0; t.len()]; kk];
    let mut integral = vec![0.0; kk];
    let g1 = |t: f64| 2.0 / (t + 2.0);
    for (i, &ti) in t.iter().enumerate() {
        g[0][i] = g1(ti);
        dg[0][i] = -g1(ti).powi(2) / 2.0;
    }
    // y = [g_2..g_K, Q_1..Q_K]
    let m = kk - 1;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let mut prev = g1(t);
        dy[m] = prev * prev / 2.0;
        for j in 0..m {
            let v = y[j];
            dy[j] = prev * prev / 2.0 - prev * v;
            dy[m + 1 + j] = v * v / 2.0;
            prev = v;
        }
    };
    let opts = Dopri5Options {
        rtol: tol,
        atol: tol * 1e-3,
        h_min: 1e-12,
        h_max: f64::INFINITY,
        max_steps: 50_000_000,
    };
    let y0 = vec![0.0; 2 * kk - 1];
    let stats = integrate(rhs, 0.0, &y0, &t[1..], &opts, |idx, _, y, dy| {
        for j in 0..m {
            g[j + 1][idx + 1] = y[j];
            dg[j + 1][idx + 1] = dy[j];
        }
        if idx + 2 == t.len() {
            integral.copy_from_slice(&y[m..]);
        }
    })?;
    // Initial derivatives: g_2'(0) = g_1(0)^2 / 2 = 1/2, higher orders 0.
    if kk >= 2 {
        dg[1][0] = 0.5;
    }
    Ok(GSolution {
        t_max,
        t,
        g,
        dg,
        integral,
        tail: 2.0 / t_max,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let sol = solve_g_system(4, 1e3, 1e-11, 2000).unwrap();
        for &t in &[0.0, 0.37, 5.0, 123.0, 999.0] {
            assert_relative_eq!(sol.eval(1, t).unwrap(), 2.0 / (t + 2.0), max_relative = 1e-14);
            // g_2 = 2t/(t+2)^2 from h_1 = 1
            assert_relative_eq!(sol.eval(2, t).unwrap(), 2.0 * t / (t + 2.0).powi(2), max_relative = 1e-8, epsilon = 1e-14);
        }
        assert!(sol.eval(1, 1e3 + 1.0).is_none());
        assert!(sol.eval(5, 1.0).is_none());
        assert_relative_eq!(sol.integral[0], 1.0 - 2.0 / (1e3 + 2.0), max_relative = 1e-10);
        assert_relative_eq!(sol.ratios().values[1], 1.0 / 3.0, max_relative = 1e-4);
    }

    #[test]
    fn total_is_sum_of_orders() {
        let sol = solve_g_system(6, 1e3, 1e-10, 1000).unwrap();
        for &t in &[0.5, 3.0, 40.0] {
            let s: f64 = (1..6).map(|j| sol.eta(j, t).unwrap()).sum::<f64>() + sol.eval(6, t).unwrap();
            assert_relative_eq!(s, 2.0 / (t + 2.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn rejects_short_horizon() {
        assert!(matches!(solve_g_system(3, 10.0, 1e-8, 100), Err(Error::Domain(_))));
    }
}
