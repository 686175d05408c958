//! Monte-Carlo harnesses.
//!
//! Replicate `r` of a batch draws from [`substream`](crate::rng::substream)
//! `(base_seed, r)` and results are reduced in replicate order, so every
//! output depends only on the inputs, not on thread scheduling.

mod equivalence;
mod hydro;
mod tokunaga;

pub use equivalence::{equivalence_test, EquivalenceReport};
pub use hydro::{hydrodynamic_check, step_l2_against_total, HydroReport};
pub use tokunaga::{empirical_tokunaga, tokunaga_from_trees, TokunagaEstimate};

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::Rng;
use serde::Serialize;

use crate::coalescent::{simulate_kingman_with, simulate_uniform_fragmentation_with};
use crate::error::{Error, Result};
use crate::levelset::{white_noise_tree_with, NoiseDistribution};
use crate::par::map_replicates;
use crate::rng::substream;
use crate::tree::{assign_horton_strahler, canonical_shape, CanonicalShape, RootedTree};

/// Random tree model with a prescribed number of leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub enum Generator {
    Kingman,
    WhiteNoise(NoiseDistribution),
    Fragmentation,
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kingman" => Ok(Self::Kingman),
            "whitenoise" => Ok(Self::WhiteNoise(NoiseDistribution::Uniform01)),
            "fragmentation" => Ok(Self::Fragmentation),
            other => match other.strip_prefix("whitenoise-") {
                Some(d) => Ok(Self::WhiteNoise(d.parse()?)),
                None => Err(Error::Domain(format!("unknown generator '{other}'"))),
            },
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Generator::Kingman => f.write_str("kingman"),
            Generator::WhiteNoise(NoiseDistribution::Uniform01) => f.write_str("whitenoise"),
            Generator::WhiteNoise(NoiseDistribution::Gaussian) => f.write_str("whitenoise-gaussian"),
            Generator::WhiteNoise(NoiseDistribution::Exponential) => f.write_str("whitenoise-exponential"),
            Generator::Fragmentation => f.write_str("fragmentation"),
        }
    }
}

impl From<Generator> for String {
    fn from(g: Generator) -> String {
        g.to_string()
    }
}

impl Generator {
    pub fn sample<R: Rng + ?Sized>(&self, leaves: usize, rng: &mut R) -> Result<RootedTree> {
        match self {
            Generator::Kingman => Ok(simulate_kingman_with(leaves, rng)?.tree),
            Generator::WhiteNoise(d) => white_noise_tree_with(leaves, *d, rng),
            Generator::Fragmentation => simulate_uniform_fragmentation_with(leaves, rng),
        }
    }

    /// Tree for replicate `rep` of the batch keyed by `base_seed`.
    pub fn replicate(&self, leaves: usize, base_seed: u64, rep: u64) -> Result<RootedTree> {
        self.sample(leaves, &mut substream(base_seed, rep))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStat {
    pub k: u32,
    /// Mean of `N_k / N_1`.
    pub mean_ratio: f64,
    /// Standard error of `mean_ratio`.
    pub se_ratio: f64,
    pub mean_count: f64,
    /// `sd(N_k) / mean(N_k)`; `None` when the mean is zero.
    pub cv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchStats {
    pub generator: Generator,
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub orders: Vec<OrderStat>,
}

impl BranchStats {
    pub fn order(&self, k: u32) -> Option<&OrderStat> {
        self.orders.get(k as usize - 1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean,cv,se\n");
        for o in &self.orders {
            let cv = o.cv.map(|c| c.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", o.k, o.mean_ratio, cv, o.se_ratio).unwrap();
        }
        out
    }
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt())
}

/// Per-order branch-count statistics over `reps` independent trees.
pub fn branch_statistics(generator: Generator, n: usize, reps: usize, base_seed: u64) -> Result<BranchStats> {
    if n < 2 || reps < 2 {
        return Err(Error::Domain(format!("need n >= 2 and reps >= 2, got n = {n}, reps = {reps}")));
    }
    let counts: Vec<Vec<u64>> = map_replicates(reps, |r| {
        let tree = generator.replicate(n, base_seed, r)?;
        Ok(assign_horton_strahler(&tree)?.branch_counts)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let omega = counts.iter().map(Vec::len).max().unwrap_or(0);
    let get = |c: &Vec<u64>, k: usize| c.get(k).copied().unwrap_or(0) as f64;
    let orders = (0..omega)
        .map(|k| {
            let (mean, sd) = mean_sd(counts.iter().map(|c| get(c, k)), reps);
            let (mean_ratio, sd_ratio) = mean_sd(counts.iter().map(|c| get(c, k) / get(c, 0)), reps);
            OrderStat {
                k: k as u32 + 1,
                mean_ratio,
                se_ratio: sd_ratio / (reps as f64).sqrt(),
                mean_count: mean,
                cv: (mean > 0.0).then(|| sd / mean),
            }
        })
        .collect();
    Ok(BranchStats {
        generator,
        n,
        reps,
        base_seed,
        orders,
    })
}

/// Counts of canonical shapes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeHistogram {
    pub n: usize,
    pub reps: u64,
    pub counts: BTreeMap<CanonicalShape, u64>,
}

impl ShapeHistogram {
    pub fn from_shapes(n: usize, shapes: impl IntoIterator<Item = CanonicalShape>) -> Self {
        let mut counts = BTreeMap::new();
        let mut reps = 0;
        for s in shapes {
            *counts.entry(s).or_insert(0) += 1;
            reps += 1;
        }
        Self { n, reps, counts }
    }

    pub fn frequency(&self, shape: &str) -> f64 {
        let c = self
            .counts
            .iter()
            .find(|(k, _)| k.as_str() == shape)
            .map_or(0, |(_, v)| *v);
        c as f64 / self.reps as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("shape,count\n");
        for (s, c) in &self.counts {
            writeln!(out, "{s},{c}").unwrap();
        }
        out
    }
}

/// Largest leaf count accepted by [`shape_distribution`].
pub const MAX_HISTOGRAM_LEAVES: usize = 12;

pub fn shape_distribution(generator: Generator, n: usize, reps: usize, base_seed: u64) -> Result<ShapeHistogram> {
    if n == 0 || n > MAX_HISTOGRAM_LEAVES {
        return Err(Error::Domain(format!(
            "shape histograms need 1 <= n <= {MAX_HISTOGRAM_LEAVES}, got {n}"
        )));
    }
    let shapes: Vec<CanonicalShape> = map_replicates(reps, |r| Ok(canonical_shape(&generator.replicate(n, base_seed, r)?)))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(ShapeHistogram::from_shapes(n, shapes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parse_generators() {
        assert_eq!("kingman".parse::<Generator>().unwrap(), Generator::Kingman);
        assert_eq!(
            "whitenoise-gaussian".parse::<Generator>().unwrap(),
            Generator::WhiteNoise(NoiseDistribution::Gaussian)
        );
        assert!("brownian".parse::<Generator>().is_err());
        for g in ["kingman", "whitenoise", "whitenoise-exponential", "fragmentation"] {
            assert_eq!(g.parse::<Generator>().unwrap().to_string(), g);
        }
    }

    #[test]
    fn two_leaves_is_deterministic() {
        for g in [Generator::Kingman, Generator::Fragmentation, Generator::WhiteNoise(NoiseDistribution::Uniform01)] {
            let s = branch_statistics(g, 2, 10, 1).unwrap();
            assert_eq!(s.orders.len(), 2);
            assert_eq!(s.orders[0].mean_count, 2.0);
            assert_eq!(s.orders[1].mean_count, 1.0);
            assert_eq!(s.orders[1].cv, Some(0.0));
            assert_eq!(s.orders[1].mean_ratio, 0.5);
        }
        assert!(branch_statistics(Generator::Kingman, 1, 10, 1).is_err());
        assert!(branch_statistics(Generator::Kingman, 10, 1, 1).is_err());
    }

    #[test]
    fn branch_stats_are_reproducible() {
        let a = branch_statistics(Generator::Kingman, 300, 20, 9).unwrap();
        let b = branch_statistics(Generator::Kingman, 300, 20, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.orders.windows(2).all(|w| w[0].mean_ratio >= w[1].mean_ratio));
        assert_relative_eq!(a.orders[1].mean_ratio, 1.0 / 3.0, epsilon = 0.02);
        assert!(a.to_csv().starts_with("k,mean,cv,se\n1,1,0,0\n"));
    }

    #[test]
    fn three_leaf_histogram() {
        let h = shape_distribution(Generator::Kingman, 3, 100, 2).unwrap();
        assert_eq!(h.counts.len(), 1);
        assert_eq!(h.frequency("((LL)L)"), 1.0);
        assert_eq!(h.counts.values().sum::<u64>(), 100);
        assert!(shape_distribution(Generator::Kingman, 13, 10, 2).is_err());
        assert_eq!(h.to_csv(), "shape,count\n((LL)L),100\n");
    }

    #[test]
    fn four_leaf_histograms() {
        for g in [Generator::Kingman, Generator::Fragmentation, Generator::WhiteNoise(NoiseDistribution::Exponential)] {
            let h = shape_distribution(g, 4, 30_000, 5).unwrap();
            assert!((h.frequency("((LL)(LL))") - 1.0 / 3.0).abs() < 0.01, "{g}");
            assert!((h.frequency("(((LL)L)L)") - 2.0 / 3.0).abs() < 0.01, "{g}");
        }
    }
}
