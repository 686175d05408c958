use horton::coalescent::{simulate_kingman, simulate_uniform_fragmentation};
use horton::levelset::{
    extend_white_noise, level_set_tree, local_extrema, path_pseudo_metric_dx, sample_white_noise, NoiseDistribution,
};
use horton::ode::{gamma_sequence, horton_ratios, solve_g_system, solve_h_system, HortonSolution, SolverConfig};
use horton::par::map_replicates_sequential;
use horton::stats::{branch_statistics, Generator};
use horton::tree::{
    assign_horton_strahler, canonical_shape, forest_decomposition, mu_distance, parse_tree, prune, serialize_tree,
    tokunaga_counts, RootedTree, SelectedLeafTree,
};
use proptest::prelude::*;

const WN: Generator = Generator::WhiteNoise(NoiseDistribution::Uniform01);

fn generator() -> impl Strategy<Value = Generator> {
    prop_oneof![
        Just(Generator::Kingman),
        Just(Generator::Fragmentation),
        Just(WN),
        Just(Generator::WhiteNoise(NoiseDistribution::Exponential)),
    ]
}

/// A random tree from one of the generators, with 1 to `max` leaves.
fn tree(max: usize) -> impl Strategy<Value = RootedTree> {
    (generator(), 1..=max, any::<u64>()).prop_map(|(g, n, seed)| g.replicate(n, seed, 0).unwrap())
}

fn swap_some(t: &RootedTree, mask: u64) -> RootedTree {
    t.swap_children(|v| (mask.rotate_left(v as u32 % 64) & 1) == 1)
}

fn selected(t: RootedTree, pick: usize) -> SelectedLeafTree {
    let leaves = t.leaves();
    let leaf = leaves[pick % leaves.len()];
    SelectedLeafTree::new(t, leaf).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn horton_counts(t in tree(400)) {
        let h = assign_horton_strahler(&t).unwrap();
        let c = &h.branch_counts;
        prop_assert_eq!(c[0], t.leaf_count() as u64);
        prop_assert_eq!(*c.last().unwrap(), 1);
        prop_assert_eq!(c.len(), h.omega as usize);
        for k in 1..c.len() {
            prop_assert!(c[k - 1] >= 2 * c[k]);
        }
    }

    #[test]
    fn merge_identity(t in tree(400)) {
        // Each merge either starts a branch (equal orders) or adds a side branch.
        let h = assign_horton_strahler(&t).unwrap();
        let tc = tokunaga_counts(&t, &h).unwrap();
        let starts: u64 = h.branch_counts.iter().skip(1).sum();
        let side: u64 = tc.side.iter().flatten().sum();
        prop_assert_eq!(starts + side, t.leaf_count() as u64 - 1);
    }

    #[test]
    fn orders_ignore_embedding(t in tree(300), mask in any::<u64>()) {
        let h = assign_horton_strahler(&t).unwrap();
        let swapped = swap_some(&t, mask);
        let hs = assign_horton_strahler(&swapped).unwrap();
        prop_assert_eq!(&h.branch_counts, &hs.branch_counts);
        prop_assert_eq!(
            tokunaga_counts(&t, &h).unwrap().side,
            tokunaga_counts(&swapped, &hs).unwrap().side
        );
        prop_assert_eq!(canonical_shape(&t), canonical_shape(&swapped));
    }

    #[test]
    fn text_round_trip(t in tree(300)) {
        let back = parse_tree(&serialize_tree(&t)).unwrap();
        let (a, b) = (assign_horton_strahler(&t).unwrap(), assign_horton_strahler(&back).unwrap());
        prop_assert_eq!(a.branch_counts, b.branch_counts);
        let mut oa = a.orders.clone();
        let mut ob = b.orders.clone();
        oa.sort_unstable();
        ob.sort_unstable();
        prop_assert_eq!(oa, ob);
        prop_assert_eq!(canonical_shape(&t), canonical_shape(&back));
    }

    #[test]
    fn prune_shifts_counts(t in tree(300)) {
        let h = assign_horton_strahler(&t).unwrap();
        match prune(&t) {
            None => prop_assert_eq!(h.omega, 1),
            Some(p) => {
                let hp = assign_horton_strahler(&p).unwrap();
                prop_assert_eq!(&hp.branch_counts[..], &h.branch_counts[1..]);
            }
        }
    }

    #[test]
    fn forest_conserves_leaves(t in tree(200), pick in any::<usize>()) {
        let s = selected(t, pick);
        let forest = forest_decomposition(&s).unwrap();
        let total: usize = forest.iter().map(RootedTree::leaf_count).sum();
        prop_assert_eq!(s.tree.leaf_count(), 1 + total);
    }

    #[test]
    fn mu_is_an_ultrametric(
        a in tree(12), b in tree(12), c in tree(12),
        pa in any::<usize>(), pb in any::<usize>(), pc in any::<usize>(),
        mask in any::<u64>(),
    ) {
        let (a, b, c) = (selected(a, pa), selected(b, pb), selected(c, pc));
        let ab = mu_distance(&a, &b).unwrap();
        let bc = mu_distance(&b, &c).unwrap();
        let ac = mu_distance(&a, &c).unwrap();
        prop_assert_eq!(ab, mu_distance(&b, &a).unwrap());
        prop_assert_eq!(mu_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(ac <= ab.max(bc));
        prop_assert!(ac <= ab + bc);
        prop_assert!((0.0..=1.0).contains(&ab));
        // Re-embedding the tree keeps the distance at zero.
        let leaf = a.leaf;
        let a2 = SelectedLeafTree::new(swap_some(&a.tree, mask), leaf).unwrap();
        prop_assert_eq!(mu_distance(&a, &a2).unwrap(), 0.0);
    }

    #[test]
    fn mu_zero_only_for_equal_shapes(a in tree(10), b in tree(10), pa in any::<usize>(), pb in any::<usize>()) {
        let (a, b) = (selected(a, pa), selected(b, pb));
        if mu_distance(&a, &b).unwrap() == 0.0 {
            prop_assert_eq!(canonical_shape(&a.tree), canonical_shape(&b.tree));
        }
    }

    #[test]
    fn coalescent_tree_structure(n in 1usize..500, seed in any::<u64>()) {
        let traj = simulate_kingman(n, seed).unwrap();
        let t = &traj.tree;
        prop_assert_eq!(t.leaf_count(), n);
        prop_assert_eq!(t.internal_count(), n - 1);
        prop_assert_eq!(traj.events.len(), n - 1);
        for v in 0..t.len() {
            if let Some(p) = t.parent(v) {
                prop_assert!(t.mark(p).unwrap() > t.mark(v).unwrap());
            }
        }
        prop_assert_eq!(&simulate_kingman(n, seed).unwrap(), &traj);
        let f = simulate_uniform_fragmentation(n, seed).unwrap();
        prop_assert_eq!(f.leaf_count(), n);
    }

    #[test]
    fn level_set_counts(n in 1usize..300, seed in any::<u64>()) {
        let s = sample_white_noise(n, NoiseDistribution::Gaussian, seed);
        let ex = local_extrema(&s).unwrap();
        let t = level_set_tree(&s).unwrap();
        prop_assert_eq!(t.leaf_count(), ex.maxima.len());
        prop_assert_eq!(t.internal_count(), ex.minima.len());
    }

    #[test]
    fn pruning_extended_noise(n in 3usize..200, seed in any::<u64>()) {
        let w = sample_white_noise(n, NoiseDistribution::Uniform01, seed);
        prop_assume!(local_extrema(&w).unwrap().maxima.len() >= 2);
        let ext = level_set_tree(&extend_white_noise(&w).unwrap()).unwrap();
        let pruned = prune(&ext).unwrap();
        prop_assert_eq!(canonical_shape(&pruned), canonical_shape(&level_set_tree(&w).unwrap()));
    }

    #[test]
    fn dx_is_a_pseudo_metric(
        n in 2usize..60, seed in any::<u64>(),
        a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64,
    ) {
        let s = sample_white_noise(n, NoiseDistribution::Gaussian, seed);
        let span = (n - 1) as f64;
        let (a, b, c) = (a * span, b * span, c * span);
        let d = |x, y| path_pseudo_metric_dx(&s, x, y).unwrap();
        let tol = 1e-12;
        prop_assert!((d(a, b) - d(b, a)).abs() <= tol);
        prop_assert!(d(a, a).abs() <= tol);
        prop_assert!(d(a, b) >= -tol);
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + tol);
        // Positions at the same level with nothing lower in between are identified.
        let k = (a as usize).min(n - 2);
        let lo = s[k].min(s[k + 1]);
        let at = if s[k] == lo { k } else { k + 1 } as f64;
        prop_assert!(d(at, at).abs() <= tol);
    }
}

fn check_h_invariants(sol: &HortonSolution) -> Result<(), TestCaseError> {
    let kk = sol.max_order();
    let g = &sol.grid;
    // Envelope in u_k = (1 - x) h_k: 0 <= u_k <= u_{k+1} <= 1, up to the
    // global error of the integration (a small multiple of the local
    // tolerance; about 10x is observed on 4000-interval grids).
    let slack = 100.0 * sol.config.tol;
    for k in 1..=kk {
        for i in 0..g.len() {
            let u = sol.u(k, i);
            prop_assert!(u >= -slack && u <= 1.0 + slack, "u_{k} = {u} at {i}");
            if k < kk {
                prop_assert!(u <= sol.u(k + 1, i) * (1.0 + slack), "order at {i}, k = {k}");
            }
        }
    }
    let norm2 = |f: &dyn Fn(usize) -> f64| g.integrate(|i| f(i).powi(2));
    for k in 1..kk {
        // ||1 - h_{k+1}/h|| = ||h_{k+1}/h - h_k/h||
        let lhs = norm2(&|i| 1.0 - sol.u(k + 1, i)).sqrt();
        let rhs = norm2(&|i| sol.u(k + 1, i) - sol.u(k, i)).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-6, "k = {k}: {lhs} vs {rhs}");
        // ||1 - h_{k+1}/h||^2 <= 1/h_{k+1}(1) <= ||1 - h_k/h||^2
        let upper = norm2(&|i| 1.0 - sol.u(k, i));
        let mid = 1.0 / sol.at_one(k + 1);
        prop_assert!(lhs * lhs <= mid && mid <= upper, "k = {k}: {} <= {mid} <= {upper}", lhs * lhs);
    }
    let hr = horton_ratios(sol);
    for (k, n) in hr.ratios().iter().enumerate() {
        prop_assert!(*n > 2.0 && *n < 4.0, "n_{} = {n}", k + 1);
    }
    let gs = gamma_sequence(sol);
    prop_assert!(gs.monotonicity_violations.is_empty(), "{:?}", gs.monotonicity_violations);
    prop_assert!(gs.gamma.windows(2).all(|w| w[0] <= w[1]));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn h_system_invariants(
        max_order in 3usize..=12,
        eps_exp in 7i32..=9,
        intervals in prop_oneof![Just(4_000usize), Just(10_000), Just(20_000)],
        tol in prop_oneof![Just(1e-10), Just(1e-12)],
    ) {
        let cfg = SolverConfig {
            max_order,
            eps: 10f64.powi(-eps_exp),
            tol,
            grid_intervals: intervals,
            ..SolverConfig::default()
        };
        check_h_invariants(&solve_h_system(&cfg).unwrap())?;
    }
}

#[test]
fn g_system_tends_to_total() {
    let sol = solve_g_system(6, 1e4, 1e-10, 2000).unwrap();
    let t = 1e4;
    for j in 1..=3 {
        let v = t * sol.eval(j, t).unwrap();
        assert!((v - 2.0).abs() <= 0.02, "t g_{j}(t) = {v}");
    }
}

#[test]
fn harness_is_schedule_independent() {
    for g in [Generator::Kingman, WN, Generator::Fragmentation] {
        let par = branch_statistics(g, 500, 16, 21).unwrap();
        let counts = map_replicates_sequential(16, |r| {
            assign_horton_strahler(&g.replicate(500, 21, r).unwrap()).unwrap().branch_counts
        });
        let n2: f64 = counts.iter().map(|c| c[1] as f64).sum::<f64>() / 16.0;
        assert_eq!(par.order(2).unwrap().mean_count, n2);
    }
}
