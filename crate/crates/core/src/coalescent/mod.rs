//! Coalescent simulation.
//!
//! [`simulate_kingman`] runs Kingman's N-coalescent with every pair of
//! clusters merging at rate `1/N`, so the relative cluster count follows
//! `eta' = -eta^2 / 2` as N grows. [`simulate_general`] runs an exact
//! Gillespie simulation for an arbitrary symmetric [`Kernel`], and
//! [`simulate_uniform_fragmentation`] builds the dual top-down tree in which
//! a mass `m` splits into `(x, m - x)` with `x` uniform on `1..m`.

mod kernel;
mod trajectory;

pub use kernel::Kernel;
pub use trajectory::{order_count_trajectories, trajectory_csv, OrderTrajectory};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tree::{Node, NodeId, RootedTree, TreeBuilder};

/// One merge of two clusters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MergeEvent {
    pub time: f64,
    /// Tree vertices of the merging clusters.
    pub a: NodeId,
    pub b: NodeId,
    pub mass_a: u64,
    pub mass_b: u64,
    pub order_a: u32,
    pub order_b: u32,
}

impl MergeEvent {
    pub fn mass(&self) -> u64 {
        self.mass_a + self.mass_b
    }

    /// Horton-Strahler order of the merged cluster.
    pub fn order(&self) -> u32 {
        if self.order_a == self.order_b {
            self.order_a + 1
        } else {
            self.order_a.max(self.order_b)
        }
    }
}

/// Full merger history of a coalescent run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentTrajectory {
    /// Number of initial particles.
    pub n: usize,
    /// Merge events in time order.
    pub events: Vec<MergeEvent>,
    /// Time-marked merger tree; leaves carry mark 0.
    pub tree: RootedTree,
}

#[derive(Debug, Clone, Copy)]
struct Cluster {
    node: NodeId,
    mass: u64,
    order: u32,
}

fn merged(builder: &mut TreeBuilder, x: Cluster, y: Cluster, time: f64) -> (Cluster, MergeEvent) {
    let node = builder.join(x.node, y.node, Some(time));
    let event = MergeEvent {
        time,
        a: x.node,
        b: y.node,
        mass_a: x.mass,
        mass_b: y.mass,
        order_a: x.order,
        order_b: y.order,
    };
    let c = Cluster {
        node,
        mass: x.mass + y.mass,
        order: event.order(),
    };
    (c, event)
}

fn singletons(n: usize, builder: &mut TreeBuilder) -> Vec<Cluster> {
    (0..n)
        .map(|_| Cluster {
            node: builder.add_leaf(Some(0.0)),
            mass: 1,
            order: 1,
        })
        .collect()
}

/// Kingman's N-coalescent with pair rate `1/n`, seeded.
pub fn simulate_kingman(n: usize, seed: u64) -> Result<CoalescentTrajectory> {
    simulate_kingman_with(n, &mut seeded(seed))
}

/// Kingman's N-coalescent drawing from a caller-supplied generator.
pub fn simulate_kingman_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CoalescentTrajectory> {
    if n == 0 {
        return Err(Error::Domain("the coalescent needs at least one particle".into()));
    }
    let mut builder = TreeBuilder::with_capacity(2 * n - 1);
    let mut active = singletons(n, &mut builder);
    let mut events = Vec::with_capacity(n - 1);
    let scale = 1.0 / n as f64;
    let mut time = 0.0;
    while active.len() > 1 {
        let m = active.len();
        let rate = scale * (m * (m - 1) / 2) as f64;
        let wait: f64 = rng.sample(Exp1);
        time += wait / rate;
        let i = rng.gen_range(0..m);
        let mut j = rng.gen_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let (c, ev) = merged(&mut builder, active[i], active[j], time);
        events.push(ev);
        active[lo] = c;
        active.swap_remove(hi);
    }
    let root = active[0].node;
    Ok(CoalescentTrajectory {
        n,
        events,
        tree: builder.finish(root),
    })
}

/// Exact simulation of a coalescent with collision kernel `kernel`.
///
/// With `rescale` the kernel is multiplied by `1/n`, which puts the
/// constant kernel on the same clock as [`simulate_kingman`].
pub fn simulate_general(n: usize, kernel: &Kernel, rescale: bool, seed: u64) -> Result<CoalescentTrajectory> {
    simulate_general_with(n, kernel, rescale, &mut seeded(seed))
}

pub fn simulate_general_with<R: Rng + ?Sized>(
    n: usize,
    kernel: &Kernel,
    rescale: bool,
    rng: &mut R,
) -> Result<CoalescentTrajectory> {
    if n == 0 {
        return Err(Error::Domain("the coalescent needs at least one particle".into()));
    }
    let scale = if rescale { 1.0 / n as f64 } else { 1.0 };
    let k = |a: u64, b: u64| kernel.rate(a, b).map(|r| r * scale);

    let mut builder = TreeBuilder::with_capacity(2 * n - 1);
    let mut active = singletons(n, &mut builder);
    // row[a] = sum over b != a of K(m_a, m_b)
    let mut row = vec![0.0; n];
    let refresh = |active: &[Cluster], row: &mut Vec<f64>| -> Result<()> {
        row.truncate(active.len());
        for (x, cx) in active.iter().enumerate() {
            let mut s = 0.0;
            for (y, cy) in active.iter().enumerate() {
                if x != y {
                    s += k(cx.mass, cy.mass)?;
                }
            }
            row[x] = s;
        }
        Ok(())
    };
    refresh(&active, &mut row)?;
    let mut events = Vec::with_capacity(n - 1);
    let mut time = 0.0;
    while active.len() > 1 {
        let m = active.len();
        let twice_total: f64 = row.iter().sum();
        if !(twice_total > 0.0) {
            return Err(Error::Domain("total collision rate vanished".into()));
        }
        let wait: f64 = rng.sample(Exp1);
        time += 2.0 * wait / twice_total;

        let mut u = rng.gen::<f64>() * twice_total;
        let mut i = m - 1;
        for (x, r) in row.iter().enumerate() {
            if u < *r {
                i = x;
                break;
            }
            u -= r;
        }
        let mut v = rng.gen::<f64>() * row[i];
        let mut j = if i == m - 1 { m - 2 } else { m - 1 };
        for y in 0..m {
            if y == i {
                continue;
            }
            let r = k(active[i].mass, active[y].mass)?;
            if v < r {
                j = y;
                break;
            }
            v -= r;
        }

        let (x, y) = (active[i], active[j]);
        let (c, ev) = merged(&mut builder, x, y, time);
        events.push(ev);
        let (lo, hi) = (i.min(j), i.max(j));
        active[lo] = c;
        active.swap_remove(hi);
        row.swap_remove(hi);
        if events.len() % 64 == 0 {
            refresh(&active, &mut row)?;
        } else {
            row[lo] = 0.0;
            for z in 0..active.len() {
                if z == lo {
                    continue;
                }
                let mz = active[z].mass;
                let delta = k(mz, c.mass)? - k(mz, x.mass)? - k(mz, y.mass)?;
                row[z] += delta;
                row[lo] += k(mz, c.mass)?;
            }
        }
    }
    let root = active[0].node;
    Ok(CoalescentTrajectory {
        n,
        events,
        tree: builder.finish(root),
    })
}

/// Top-down fragmentation tree: mass `m` splits into `(x, m - x)` with `x`
/// uniform on `{1, ..., m - 1}`; mass-one clusters are leaves.
pub fn simulate_uniform_fragmentation(n: usize, seed: u64) -> Result<RootedTree> {
    simulate_uniform_fragmentation_with(n, &mut seeded(seed))
}

pub fn simulate_uniform_fragmentation_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RootedTree> {
    if n == 0 {
        return Err(Error::Domain("fragmentation needs a positive mass".into()));
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(2 * n - 1);
    nodes.push(Node {
        parent: None,
        children: None,
        mark: None,
    });
    let mut stack = vec![(0usize, n)];
    while let Some((v, m)) = stack.pop() {
        if m == 1 {
            continue;
        }
        let x = rng.gen_range(1..m);
        let left = nodes.len();
        for _ in 0..2 {
            nodes.push(Node {
                parent: Some(v),
                children: None,
                mark: None,
            });
        }
        nodes[v].children = Some([left, left + 1]);
        stack.push((left + 1, m - x));
        stack.push((left, x));
    }
    Ok(RootedTree::from_nodes_unchecked(nodes, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{assign_horton_strahler, canonical_shape};
    use std::collections::HashMap;

    fn shape_freq(samples: impl Iterator<Item = RootedTree>) -> HashMap<String, f64> {
        let mut h: HashMap<String, f64> = HashMap::new();
        let mut total = 0.0;
        for t in samples {
            *h.entry(canonical_shape(&t).to_string()).or_default() += 1.0;
            total += 1.0;
        }
        h.values_mut().for_each(|c| *c /= total);
        h
    }

    #[test]
    fn single_particle() {
        let t = simulate_kingman(1, 3).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.tree.len(), 1);
        assert!(matches!(simulate_kingman(0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn structure_and_marks() {
        let t = simulate_kingman(500, 11).unwrap();
        assert_eq!(t.events.len(), 499);
        assert_eq!(t.tree.leaf_count(), 500);
        assert_eq!(t.tree.internal_count(), 499);
        assert!(t.events.windows(2).all(|w| w[0].time < w[1].time));
        assert_eq!(t.events.last().unwrap().mass(), 500);
        for v in 0..t.tree.len() {
            if let Some(p) = t.tree.parent(v) {
                assert!(t.tree.mark(p).unwrap() > t.tree.mark(v).unwrap());
            }
        }
        let a = assign_horton_strahler(&t.tree).unwrap();
        assert_eq!(a.omega, t.events.last().unwrap().order());
    }

    #[test]
    fn same_seed_same_trajectory() {
        assert_eq!(simulate_kingman(300, 5).unwrap(), simulate_kingman(300, 5).unwrap());
        assert_ne!(simulate_kingman(300, 5).unwrap(), simulate_kingman(300, 6).unwrap());
    }

    #[test]
    fn pair_merge_time_has_mean_two() {
        // Two particles, pair rate 1/2.
        let reps = 100_000;
        let mean = (0..reps)
            .map(|i| simulate_kingman_with(2, &mut crate::rng::substream(1, i)).unwrap().events[0].time)
            .sum::<f64>()
            / reps as f64;
        // sd of Exp(1/2) is 2, standard error 2/sqrt(1e5) ~ 0.0063
        assert!((mean - 2.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn total_duration_matches_expectation() {
        // E[T] = sum_{m=2}^{N} N / C(m, 2) = 2 (N - 1).
        let n = 64;
        let reps = 20_000;
        let mean = (0..reps)
            .map(|i| {
                simulate_kingman_with(n, &mut crate::rng::substream(2, i))
                    .unwrap()
                    .events
                    .last()
                    .unwrap()
                    .time
            })
            .sum::<f64>()
            / reps as f64;
        let expected = 2.0 * (n as f64 - 1.0);
        // Var[T] = sum (N/C(m,2))^2 ~ 4 N^2 (pi^2/3 - 3) ~ 5.3e3 at N = 64.
        assert!((mean - expected).abs() < 4.0 * (5.3e3f64 / reps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn four_leaf_shape_frequencies() {
        let kingman = shape_freq((0..60_000).map(|i| {
            simulate_kingman_with(4, &mut crate::rng::substream(3, i)).unwrap().tree
        }));
        let frag = shape_freq((0..60_000).map(|i| {
            simulate_uniform_fragmentation_with(4, &mut crate::rng::substream(4, i)).unwrap()
        }));
        for h in [&kingman, &frag] {
            assert!((h["((LL)(LL))"] - 1.0 / 3.0).abs() < 0.01);
            assert!((h["(((LL)L)L)"] - 2.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn fragmentation_small_cases() {
        for seed in 0..20 {
            assert_eq!(canonical_shape(&simulate_uniform_fragmentation(2, seed).unwrap()).as_str(), "(LL)");
            assert_eq!(canonical_shape(&simulate_uniform_fragmentation(3, seed).unwrap()).as_str(), "((LL)L)");
        }
        let t = simulate_uniform_fragmentation(1000, 9).unwrap();
        assert_eq!(t.leaf_count(), 1000);
        assert!(assign_horton_strahler(&t).is_ok());
    }

    #[test]
    fn multiplicative_pair_merges_at_unit_rate() {
        let reps = 50_000;
        let mean = (0..reps)
            .map(|i| {
                simulate_general_with(2, &Kernel::Multiplicative, false, &mut crate::rng::substream(5, i))
                    .unwrap()
                    .events[0]
                    .time
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn additive_first_merge_is_uniform() {
        // Three singletons: all pair rates equal K(1, 1) = 2. The third
        // (unmerged) particle is equally likely to be any of the three.
        let reps = 30_000;
        let mut counts = [0usize; 3];
        for i in 0..reps {
            let t = simulate_general_with(3, &Kernel::Additive, false, &mut crate::rng::substream(6, i)).unwrap();
            let ev = t.events[0];
            let left_out = 3 - ev.a - ev.b;
            counts[left_out] += 1;
        }
        for c in counts {
            assert!((c as f64 / reps as f64 - 1.0 / 3.0).abs() < 0.015, "{counts:?}");
        }
    }

    #[test]
    fn constant_kernel_matches_kingman_shapes() {
        let general = shape_freq((0..40_000).map(|i| {
            simulate_general_with(4, &Kernel::Constant, true, &mut crate::rng::substream(7, i))
                .unwrap()
                .tree
        }));
        assert!((general["((LL)(LL))"] - 1.0 / 3.0).abs() < 0.012);
    }

    #[test]
    fn tabulated_kernel_too_small_is_a_domain_error() {
        let k = Kernel::tabulated(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(simulate_general(3, &k, false, 1).is_ok());
        assert!(matches!(simulate_general(5, &k, false, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn general_kernel_tree_is_valid() {
        let t = simulate_general(200, &Kernel::Additive, false, 8).unwrap();
        assert_eq!(t.tree.leaf_count(), 200);
        assert!(t.events.windows(2).all(|w| w[0].time < w[1].time));
    }
}
