use std::fmt::Write;

use super::CoalescentTrajectory;

/// Per-order cluster counts along a coalescent trajectory.
///
/// State `s` is the configuration after the first `s` merges; it holds on
/// `[times[s], times[s + 1])`, with `times[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTrajectory {
    pub n: usize,
    pub times: Vec<f64>,
    /// `counts[j - 1][s]`: clusters of order `j` in state `s`.
    pub counts: Vec<Vec<u32>>,
}

impl OrderTrajectory {
    pub fn states(&self) -> usize {
        self.times.len()
    }

    pub fn max_order(&self) -> u32 {
        self.counts.len() as u32
    }

    /// Index of the state holding at time `t >= 0`.
    pub fn state_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Relative number of order-`j` clusters, `count / n`, at time `t`.
    pub fn eta(&self, j: u32, t: f64) -> f64 {
        match self.counts.get(j as usize - 1) {
            Some(c) => c[self.state_at(t)] as f64 / self.n as f64,
            None => 0.0,
        }
    }

    /// Relative total number of clusters at time `t`.
    pub fn eta_total(&self, t: f64) -> f64 {
        (self.n - self.state_at(t)) as f64 / self.n as f64
    }
}

/// Replays the merge sequence, updating order counts incrementally.
pub fn order_count_trajectories(traj: &CoalescentTrajectory) -> OrderTrajectory {
    let states = traj.events.len() + 1;
    let mut current: Vec<u32> = vec![traj.n as u32];
    let mut counts: Vec<Vec<u32>> = vec![Vec::with_capacity(states)];
    counts[0].push(traj.n as u32);
    let mut times = Vec::with_capacity(states);
    times.push(0.0);
    for (s, ev) in traj.events.iter().enumerate() {
        let k = ev.order();
        if current.len() < k as usize {
            current.resize(k as usize, 0);
            counts.push(vec![0; s + 1]);
        }
        current[ev.order_a as usize - 1] -= 1;
        current[ev.order_b as usize - 1] -= 1;
        current[k as usize - 1] += 1;
        for (c, &v) in counts.iter_mut().zip(&current) {
            c.push(v);
        }
        times.push(ev.time);
    }
    OrderTrajectory {
        n: traj.n,
        times,
        counts,
    }
}

/// Merge events as CSV, one row per event.
pub fn trajectory_csv(traj: &CoalescentTrajectory) -> String {
    let mut out = String::from("event,time,vertex_a,vertex_b,mass_a,mass_b,order_a,order_b,order\n");
    for (i, e) in traj.events.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            i + 1,
            e.time,
            e.a,
            e.b,
            e.mass_a,
            e.mass_b,
            e.order_a,
            e.order_b,
            e.order()
        )
        .expect("write to string");
    }
    out
}
