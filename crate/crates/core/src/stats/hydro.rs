use serde::Serialize;

use crate::coalescent::{order_count_trajectories, simulate_kingman_with, OrderTrajectory};
use crate::error::{Error, Result};
use crate::ode::GSolution;
use crate::par::map_replicates;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HydroReport {
    pub n: usize,
    pub reps: usize,
    pub horizon: f64,
    /// Mean over replicates of the `L2[0, K]` distance between the total
    /// cluster count `eta_N(t)` and `2/(t+2)`.
    pub total_l2_mean: f64,
    pub total_l2_sd: f64,
    /// Mean `L2[0, K]` distance between `eta_{j,N}` and `eta_j`, `j = 1..`.
    pub order_l2_mean: Vec<f64>,
    pub eta_at_horizon_mean: f64,
    /// `int_K^inf eta^2 / 2 dt = 2 / (K + 2)`.
    pub tail_closed_form: f64,
}

/// `int_a^b (c - 2/(t+2))^2 dt`.
fn step_piece(c: f64, a: f64, b: f64) -> f64 {
    c * c * (b - a) - 4.0 * c * ((b + 2.0) / (a + 2.0)).ln() + 4.0 * (1.0 / (a + 2.0) - 1.0 / (b + 2.0))
}

/// Exact `L2[0, horizon]` distance between the total count step function and
/// `2/(t+2)`.
pub fn step_l2_against_total(traj: &OrderTrajectory, horizon: f64) -> f64 {
    let mut sq = 0.0;
    for s in 0..traj.states() {
        let a = traj.times[s];
        if a >= horizon {
            break;
        }
        let b = traj.times.get(s + 1).map_or(horizon, |&t| t.min(horizon));
        let c = (traj.n - s) as f64 / traj.n as f64;
        sq += step_piece(c, a, b);
    }
    sq.max(0.0).sqrt()
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_2),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_2),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

/// `L2[0, horizon]` distance between `eta_{j,N}` and `eta_j` for
/// `j = 1..=max_order`. Pieces are the common refinement of the event times
/// and the ODE output grid, integrated by 4-point Gauss-Legendre.
fn order_l2(traj: &OrderTrajectory, ode: &GSolution, horizon: f64, max_order: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = traj
        .times
        .iter()
        .chain(ode.t.iter())
        .copied()
        .filter(|&t| t < horizon)
        .chain([horizon])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut sq = vec![0.0; max_order];
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let s = traj.state_at(a);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        for (j, acc) in sq.iter_mut().enumerate() {
            let c = traj.counts.get(j).map_or(0.0, |c| c[s] as f64 / traj.n as f64);
            for &(x, wt) in &GAUSS4 {
                let e = ode.eta(j + 1, mid + half * x).expect("horizon checked");
                *acc += wt * half * (c - e).powi(2);
            }
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// Kingman replicates at `n` leaves against the g-system on `[0, horizon]`.
pub fn hydrodynamic_check(
    n: usize,
    reps: usize,
    base_seed: u64,
    ode: &GSolution,
    horizon: f64,
    max_order: usize,
) -> Result<HydroReport> {
    if n < 2 || reps < 2 {
        return Err(Error::Domain(format!("need n >= 2 and reps >= 2, got n = {n}, reps = {reps}")));
    }
    if !(horizon > 0.0) || horizon > ode.t_max {
        return Err(Error::Domain(format!("horizon {horizon} outside (0, {}]", ode.t_max)));
    }
    if max_order + 1 > ode.max_order() {
        return Err(Error::Domain(format!(
            "order {max_order} needs g up to {}, solved to {}",
            max_order + 1,
            ode.max_order()
        )));
    }
    let per_rep: Vec<(f64, Vec<f64>, f64)> = map_replicates(reps, |r| {
        let traj = simulate_kingman_with(n, &mut substream(base_seed, r))?;
        let ot = order_count_trajectories(&traj);
        Ok((
            step_l2_against_total(&ot, horizon),
            order_l2(&ot, ode, horizon, max_order),
            ot.eta_total(horizon),
        ))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let m = reps as f64;
    let total_l2_mean = per_rep.iter().map(|p| p.0).sum::<f64>() / m;
    let total_l2_sd = (per_rep.iter().map(|p| (p.0 - total_l2_mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let order_l2_mean = (0..max_order)
        .map(|j| per_rep.iter().map(|p| p.1[j]).sum::<f64>() / m)
        .collect();
    Ok(HydroReport {
        n,
        reps,
        horizon,
        total_l2_mean,
        total_l2_sd,
        order_l2_mean,
        eta_at_horizon_mean: per_rep.iter().map(|p| p.2).sum::<f64>() / m,
        tail_closed_form: 2.0 / (horizon + 2.0),
    })
}
