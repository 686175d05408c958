//! Dormand-Prince 5(4) with step-size control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step the controller may ask for before giving up.
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Dopri5Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` through every time in `stops`.
///
/// `stops` must be strictly monotone in one direction away from `t0`; the
/// integration may run backwards. Steps are shortened to land exactly on
/// each stop, where `on_stop(index, t, y, y')` is called.
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    stops: &[f64],
    opts: &Dopri5Options,
    mut on_stop: S,
) -> Result<Dopri5Stats>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(usize, f64, &[f64], &[f64]),
{
    let n = y0.len();
    let mut stats = Dopri5Stats::default();
    let Some(&last) = stops.last() else {
        return Ok(stats);
    };
    let dir = if last >= t0 { 1.0 } else { -1.0 };
    if stops.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) || (stops[0] - t0) * dir < 0.0 {
        return Err(Error::Domain("integration stops must be monotone".into()));
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k1);
    stats.evaluations += 1;

    // Initial step from the derivative scale.
    let scale = |v: f64| opts.atol + opts.rtol * v.abs();
    let d0 = (y.iter().map(|v| (v / scale(*v)).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    let d1 = (y.iter().zip(&k1).map(|(v, d)| (d / scale(*v)).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(opts.h_max).min((last - t0).abs()).max(opts.h_min);

    let mut next = 0;
    while next < stops.len() && stops[next] == t {
        on_stop(next, t, &y, &k1);
        next += 1;
    }
    while next < stops.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::SolverFailure {
                x: t,
                message: format!("step budget of {} exhausted", opts.max_steps),
            });
        }
        let target = stops[next];
        let remaining = (target - t).abs();
        let lands = h >= remaining;
        let step = if lands { remaining } else { h };
        let hs = dir * step;

        for i in 0..n {
            tmp[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if lands { target } else { t + hs };
        f(t + hs, &tmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t_new, &ynew, &mut k7);
        stats.evaluations += 6;

        let mut err = 0.0;
        for i in 0..n {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::SolverFailure {
                x: t,
                message: "non-finite error estimate".into(),
            });
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            // A step shortened to hit a stop says little about the next one.
            if !lands || step >= h {
                h = (step * factor).min(opts.h_max);
            }
            if lands {
                on_stop(next, t, &y, &k1);
                next += 1;
            }
        } else {
            stats.rejected += 1;
            h = step * factor.min(1.0);
            if h < opts.h_min {
                return Err(Error::SolverFailure {
                    x: t,
                    message: format!("tolerance not met with step {h:e}"),
                });
            }
        }
    }
    Ok(stats)
}
