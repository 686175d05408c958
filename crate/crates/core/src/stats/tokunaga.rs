use std::fmt::Write;

use serde::Serialize;

use super::Generator;
use crate::error::{Error, Result};
use crate::par::map_replicates;
use crate::tree::{assign_horton_strahler, tokunaga_counts, RootedTree};

/// Averaged Tokunaga indices `T_k`, `k = 1..`.
///
/// Every order-`(i + k)` branch with `i >= 2` in every tree carries equal
/// weight, so `T_k = sum N_{i,i+k} / sum N_{i+k}` over trees and `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokunagaEstimate {
    /// `t_hat[k - 1]`; `NaN` when no pair contributed.
    pub t_hat: Vec<f64>,
    /// Number of `(tree, i)` pairs with `N_{i+k} > 0` for each `k`.
    pub pairs: Vec<u64>,
    /// Number of order-`(i + k)` branches pooled for each `k`.
    pub branches: Vec<u64>,
}

impl TokunagaEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,T_k\n");
        for (k, t) in self.t_hat.iter().enumerate() {
            writeln!(out, "{},{}", k + 1, t).unwrap();
        }
        out
    }
}

#[derive(Clone, Default)]
struct Tally {
    side: Vec<u64>,
    branches: Vec<u64>,
    pairs: Vec<u64>,
}

impl Tally {
    fn new(max_k: usize) -> Self {
        Self {
            side: vec![0; max_k],
            branches: vec![0; max_k],
            pairs: vec![0; max_k],
        }
    }

    fn add_tree(&mut self, tree: &RootedTree) -> Result<()> {
        let h = assign_horton_strahler(tree)?;
        let tc = tokunaga_counts(tree, &h)?;
        let omega = h.omega;
        for k in 1..=self.side.len() as u32 {
            for i in 2..=omega.saturating_sub(k) {
                let nj = h.n(i + k);
                if nj > 0 {
                    self.side[k as usize - 1] += tc.n_ij(i, i + k);
                    self.branches[k as usize - 1] += nj;
                    self.pairs[k as usize - 1] += 1;
                }
            }
        }
        Ok(())
    }

    fn merge(mut self, other: &Tally) -> Self {
        for k in 0..self.side.len() {
            self.side[k] += other.side[k];
            self.branches[k] += other.branches[k];
            self.pairs[k] += other.pairs[k];
        }
        self
    }

    fn finish(self) -> TokunagaEstimate {
        TokunagaEstimate {
            t_hat: self
                .side
                .iter()
                .zip(&self.branches)
                .map(|(&s, &b)| if b > 0 { s as f64 / b as f64 } else { f64::NAN })
                .collect(),
            pairs: self.pairs,
            branches: self.branches,
        }
    }
}

/// Pools `tau_{i,i+k}` over trees and over `i >= 2`.
pub fn tokunaga_from_trees<'a>(trees: impl IntoIterator<Item = &'a RootedTree>, max_k: usize) -> Result<TokunagaEstimate> {
    let mut tally = Tally::new(max_k);
    for tree in trees {
        tally.add_tree(tree)?;
    }
    Ok(tally.finish())
}

pub fn empirical_tokunaga(generator: Generator, n: usize, reps: usize, base_seed: u64, max_k: usize) -> Result<TokunagaEstimate> {
    if n < 2 || reps < 1 || max_k < 1 {
        return Err(Error::Domain(format!("need n >= 2, reps >= 1, max_k >= 1 (n = {n}, reps = {reps}, max_k = {max_k})")));
    }
    let per_tree: Vec<Tally> = map_replicates(reps, |r| {
        let mut t = Tally::new(max_k);
        t.add_tree(&generator.replicate(n, base_seed, r)?)?;
        Ok(t)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(per_tree.iter().fold(Tally::new(max_k), Tally::merge).finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::{comb, perfect};
    use crate::tree::{assign_horton_strahler, tokunaga_counts};

    #[test]
    fn comb_has_n_minus_two_side_branches() {
        let comb = comb(9);
        let h = assign_horton_strahler(&comb).unwrap();
        assert_eq!(tokunaga_counts(&comb, &h).unwrap().tau_ij(1, 2), 7.0);
        // A comb has only orders 1 and 2, so no pair with i >= 2 exists.
        let est = tokunaga_from_trees([&comb], 2).unwrap();
        assert_eq!(est.pairs, vec![0, 0]);
        assert!(est.t_hat[0].is_nan());
    }

    #[test]
    fn perfect_tree_has_no_side_branches() {
        let t = perfect(5);
        let est = tokunaga_from_trees([&t], 3).unwrap();
        assert_eq!(est.pairs, vec![4, 3, 2]);
        assert_eq!(est.branches, vec![8 + 4 + 2 + 1, 4 + 2 + 1, 2 + 1]);
        assert_eq!(est.t_hat, vec![0.0, 0.0, 0.0]);
        assert_eq!(est.to_csv(), "k,T_k\n1,0\n2,0\n3,0\n");
    }

    #[test]
    fn pooled_by_branch() {
        // Two order-3 subtrees under the root, an order-2 side branch joining
        // the order-4 branch: N_24 = 1 but nothing for k = 1.
        let t = crate::tree::parse_tree("((((L,L),(L,L)),((L,L),(L,L))),((L,L),L))").unwrap();
        let est = tokunaga_from_trees([&t], 1).unwrap();
        assert_eq!(est.t_hat[0], 0.0);
        let t = crate::tree::parse_tree("((((L,L),(L,L)),(L,L)),(((L,L),(L,L)),L))").unwrap();
        let h = assign_horton_strahler(&t).unwrap();
        assert_eq!(h.omega, 4);
        let est = tokunaga_from_trees([&t], 1).unwrap();
        // i = 2: N_23 = 1 over N_3 = 2; i = 3: N_34 = 0 over N_4 = 1.
        assert_eq!(est.branches[0], 3);
        assert_eq!(est.t_hat[0], 1.0 / 3.0);
    }

    #[test]
    fn harness_matches_tree_pooling() {
        let trees: Vec<_> = (0..4).map(|r| Generator::Kingman.replicate(600, 11, r).unwrap()).collect();
        let a = tokunaga_from_trees(&trees, 3).unwrap();
        let b = empirical_tokunaga(Generator::Kingman, 600, 4, 11, 3).unwrap();
        assert_eq!(a, b);
    }
}
