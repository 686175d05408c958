//! Order-and-mass classified Smoluchowski system for a general kernel.
//!
//! `eta[j][k]` is the relative number of clusters of Horton-Strahler order
//! `j + 1` and mass `k + 1`. An order-`j` cluster has mass at least
//! `2^(j-1)`. Orders above `J` are not tracked individually, but the total
//! mass spectrum `rho` is integrated alongside so every collision rate sees
//! all clusters. Collisions that would produce a mass above `M` remove both
//! partners and credit their mass to a lost-mass account.

use serde::Serialize;

use super::dopri::{integrate, Dopri5Options, Dopri5Stats};
use crate::coalescent::Kernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralConfig {
    pub kernel: Kernel,
    /// Highest order tracked, `J`.
    pub max_order: usize,
    /// Mass truncation `M`.
    pub max_mass: usize,
    pub t_max: f64,
    pub tol: f64,
    /// Number of equal output intervals on `[0, t_max]`.
    pub output_intervals: usize,
    /// Lost-mass fraction above which a warning is attached.
    pub lost_mass_warning: f64,
}

impl GeneralConfig {
    pub fn new(kernel: Kernel, max_order: usize, max_mass: usize, t_max: f64) -> Self {
        Self {
            kernel,
            max_order,
            max_mass,
            t_max,
            tol: 1e-9,
            output_intervals: 400,
            lost_mass_warning: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassOrderState {
    pub t: f64,
    /// `eta[j - 1][k - 1]`.
    pub eta: Vec<Vec<f64>>,
    /// Total mass spectrum over all orders, `rho[k - 1]`.
    pub rho: Vec<f64>,
    /// Mass fraction routed past `M`.
    pub lost_mass: f64,
    /// Relative number of collisions routed past `M`.
    pub lost_clusters: f64,
    /// Running `N_j` accumulators (creations of order `j` up to `t`).
    pub created: Vec<f64>,
}

impl MassOrderState {
    /// `sum_k eta_{j,k}` for `j = 1..J`.
    pub fn order_totals(&self) -> Vec<f64> {
        self.eta.iter().map(|row| row.iter().sum()).collect()
    }

    /// Mass still in the system, `sum_k k rho_k`.
    pub fn mass(&self) -> f64 {
        self.rho.iter().enumerate().map(|(k, r)| (k + 1) as f64 * r).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralSolution {
    pub kernel: String,
    pub max_order: usize,
    pub max_mass: usize,
    pub states: Vec<MassOrderState>,
    /// `N_j` estimates at `t_max`, `j = 1..J`.
    pub horton: Vec<f64>,
    pub warnings: Vec<String>,
    pub stats: Dopri5Stats,
}

impl GeneralSolution {
    pub fn last(&self) -> &MassOrderState {
        self.states.last().expect("at least the initial state")
    }
}

pub fn solve_general_smoluchowski_horton(cfg: &GeneralConfig) -> Result<GeneralSolution> {
    let (jj, mm) = (cfg.max_order, cfg.max_mass);
    if jj < 1 {
        return Err(Error::Domain("need at least one order".into()));
    }
    if jj >= 63 || mm < (1usize << jj) {
        return Err(Error::Domain(format!("max mass {mm} < 2^{jj}")));
    }
    if !(cfg.t_max > 0.0) || !cfg.t_max.is_finite() {
        return Err(Error::Domain(format!("t_max {} must be positive", cfg.t_max)));
    }
    if cfg.output_intervals < 1 {
        return Err(Error::Domain("need at least one output interval".into()));
    }
    if let Some(m) = cfg.kernel.max_mass() {
        if (m as usize) < mm {
            return Err(Error::Domain(format!("kernel table covers masses up to {m}, need {mm}")));
        }
    }
    let mut kt = vec![0.0; mm * mm];
    for a in 0..mm {
        for b in 0..mm {
            kt[a * mm + b] = cfg.kernel.rate(a as u64 + 1, b as u64 + 1)?;
        }
    }
    let kern = |a: usize, b: usize| kt[a * mm + b];
    let min_mass = |j: usize| 1usize << j; // zero-based order j, minimum mass index 2^j - 1

    // Layout: eta (J*M), rho (M), created (J), lost mass, lost clusters.
    let rho_at = jj * mm;
    let created_at = rho_at + mm;
    let lost_at = created_at + jj;
    let n = lost_at + 2;

    let mut lower = vec![0.0; mm];
    let mut absorb = vec![0.0; mm];
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy.fill(0.0);
        let rho = &y[rho_at..rho_at + mm];
        // absorb[k] = sum_q K(k, q) rho_q
        for a in 0..mm {
            absorb[a] = (0..mm).map(|b| kern(a, b) * rho[b]).sum();
        }
        // Total spectrum.
        let (mut lost_mass, mut lost_count) = (0.0, 0.0);
        for a in 0..mm {
            if rho[a] == 0.0 {
                continue;
            }
            for b in 0..mm {
                let r = 0.5 * kern(a, b) * rho[a] * rho[b];
                if a + b + 1 < mm {
                    dy[rho_at + a + b + 1] += r;
                } else {
                    lost_mass += r * (a + b + 2) as f64;
                    lost_count += r;
                }
            }
            dy[rho_at + a] -= rho[a] * absorb[a];
        }
        dy[lost_at] = lost_mass;
        dy[lost_at + 1] = lost_count;

        lower.fill(0.0);
        for j in 0..jj {
            let row = &y[j * mm..(j + 1) * mm];
            let lo = min_mass(j) - 1;
            // Order j absorbs a lower-order cluster.
            if j > 0 {
                for kap in lo..mm {
                    if row[kap] == 0.0 {
                        continue;
                    }
                    for q in 0..mm - kap - 1 {
                        if lower[q] != 0.0 {
                            dy[j * mm + kap + q + 1] += row[kap] * kern(kap, q) * lower[q];
                        }
                    }
                }
                // Two clusters of order j - 1 create order j.
                let prev = &y[(j - 1) * mm..j * mm];
                let plo = min_mass(j - 1) - 1;
                let mut created = 0.0;
                for a in plo..mm {
                    if prev[a] == 0.0 {
                        continue;
                    }
                    for b in plo..mm {
                        let r = 0.5 * kern(a, b) * prev[a] * prev[b];
                        created += r;
                        if a + b + 1 < mm {
                            dy[j * mm + a + b + 1] += r;
                        }
                    }
                }
                dy[created_at + j] = created;
            }
            for k in lo..mm {
                dy[j * mm + k] -= row[k] * absorb[k];
            }
            for (l, v) in lower.iter_mut().zip(row) {
                *l += v;
            }
        }
    };

    let mut y0 = vec![0.0; n];
    y0[0] = 1.0;
    y0[rho_at] = 1.0;
    y0[created_at] = 1.0;
    let stops: Vec<f64> = (1..=cfg.output_intervals)
        .map(|i| cfg.t_max * i as f64 / cfg.output_intervals as f64)
        .collect();
    let unpack = |t: f64, y: &[f64]| MassOrderState {
        t,
        eta: (0..jj).map(|j| y[j * mm..(j + 1) * mm].to_vec()).collect(),
        rho: y[rho_at..rho_at + mm].to_vec(),
        lost_mass: y[lost_at],
        lost_clusters: y[lost_at + 1],
        created: y[created_at..created_at + jj].to_vec(),
    };
    let mut states = vec![unpack(0.0, &y0)];
    let opts = Dopri5Options {
        rtol: cfg.tol,
        atol: cfg.tol * 1e-3,
        h_min: 1e-12,
        h_max: f64::INFINITY,
        max_steps: 10_000_000,
    };
    let mut overflow = None;
    let stats = integrate(rhs, 0.0, &y0, &stops, &opts, |_, t, y, _| {
        if overflow.is_none() && y[lost_at] > 0.5 {
            overflow = Some(t);
        }
        states.push(unpack(t, y));
    })?;
    if let Some(t) = overflow {
        return Err(Error::Accuracy(format!(
            "more than half of the mass passed the truncation M = {mm} by t = {t}"
        )));
    }
    let mut warnings = Vec::new();
    let last = states.last().expect("initial state");
    if last.lost_mass > cfg.lost_mass_warning {
        warnings.push(format!(
            "lost mass fraction {:.3e} exceeds {:.1e} (M = {mm}, t = {})",
            last.lost_mass, cfg.lost_mass_warning, cfg.t_max
        ));
    }
    Ok(GeneralSolution {
        kernel: cfg.kernel.name().to_string(),
        max_order: jj,
        max_mass: mm,
        horton: last.created.clone(),
        states,
        warnings,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small(kernel: Kernel, t_max: f64) -> GeneralSolution {
        let mut cfg = GeneralConfig::new(kernel, 3, 64, t_max);
        cfg.output_intervals = 20;
        solve_general_smoluchowski_horton(&cfg).unwrap()
    }

    #[test]
    fn initial_state() {
        let s = small(Kernel::Constant, 1.0);
        let s0 = &s.states[0];
        assert_eq!(s0.eta[0][0], 1.0);
        assert_eq!(s0.eta.iter().flatten().sum::<f64>(), 1.0);
        assert_eq!(s.states.len(), 21);
    }

    #[test]
    fn constant_kernel_spectrum() {
        // rho_k(t) = (2/(t+2))^2 (t/(t+2))^(k-1) before truncation matters.
        let s = small(Kernel::Constant, 2.0);
        let last = s.last();
        let q: f64 = 2.0 / 4.0;
        for k in 1..=10 {
            assert_relative_eq!(last.rho[k - 1], 0.25 * q.powi(k as i32 - 1), max_relative = 1e-6);
        }
    }

    #[test]
    fn mass_is_conserved_with_losses() {
        for (kernel, t) in [(Kernel::Constant, 8.0), (Kernel::Additive, 1.5)] {
            let s = small(kernel, t);
            for st in &s.states {
                assert!((st.mass() + st.lost_mass - 1.0).abs() < 1e-7, "{}", st.mass() + st.lost_mass);
                assert!(st.eta.iter().flatten().all(|&v| v >= -1e-12));
            }
        }
        assert!(small(Kernel::Constant, 8.0).last().lost_mass > 0.0);
    }

    #[test]
    fn minimum_mass_per_order() {
        let s = small(Kernel::Constant, 4.0);
        let last = s.last();
        assert!(last.eta[1][0] == 0.0 && last.eta[1][1] > 0.0);
        assert!(last.eta[2][2] == 0.0 && last.eta[2][3] > 0.0);
    }

    #[test]
    fn preconditions() {
        assert!(solve_general_smoluchowski_horton(&GeneralConfig::new(Kernel::Constant, 4, 15, 1.0)).is_err());
        let k = Kernel::tabulated(vec![vec![1.0; 8]; 8]).unwrap();
        assert!(matches!(
            solve_general_smoluchowski_horton(&GeneralConfig::new(k, 2, 16, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn runaway_loss_is_an_error() {
        let mut cfg = GeneralConfig::new(Kernel::Multiplicative, 2, 8, 5.0);
        cfg.output_intervals = 10;
        assert!(matches!(solve_general_smoluchowski_horton(&cfg), Err(Error::Accuracy(_))));
    }
}
