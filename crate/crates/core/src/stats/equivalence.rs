use std::collections::BTreeSet;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::ShapeHistogram;
use crate::error::{Error, Result};

/// Minimum expected count per cell after pooling.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Total-variation distance between the raw empirical distributions.
    pub tv_distance: f64,
    /// Cells left after pooling.
    pub cells: usize,
}

/// Two-sample chi-square test of equal shape distributions.
///
/// Cells are sorted by combined count and the rarest are pooled until every
/// cell has expected count at least [`MIN_EXPECTED`] in both samples.
pub fn equivalence_test(a: &ShapeHistogram, b: &ShapeHistogram) -> Result<EquivalenceReport> {
    if a.n != b.n {
        return Err(Error::Domain(format!("histograms over {} and {} leaves", a.n, b.n)));
    }
    let (na, nb) = (a.reps as f64, b.reps as f64);
    if a.reps == 0 || b.reps == 0 {
        return Err(Error::TestUndefined("empty histogram".into()));
    }
    let keys: BTreeSet<_> = a.counts.keys().chain(b.counts.keys()).collect();
    let mut cells: Vec<(f64, f64)> = keys
        .iter()
        .map(|k| {
            (
                a.counts.get(*k).copied().unwrap_or(0) as f64,
                b.counts.get(*k).copied().unwrap_or(0) as f64,
            )
        })
        .collect();
    let tv_distance = 0.5 * cells.iter().map(|(x, y)| (x / na - y / nb).abs()).sum::<f64>();

    let total = na + nb;
    let min_expected = |(x, y): (f64, f64)| (x + y) * na.min(nb) / total;
    cells.sort_by(|p, q| (p.0 + p.1).total_cmp(&(q.0 + q.1)));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for c in cells {
        acc = (acc.0 + c.0, acc.1 + c.1);
        if min_expected(acc) >= MIN_EXPECTED {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => pooled.push(acc),
        }
    }
    if pooled.len() < 2 || pooled.iter().any(|&c| min_expected(c) < MIN_EXPECTED) {
        return Err(Error::TestUndefined(format!(
            "{} usable cell(s) after pooling to expected count {MIN_EXPECTED}",
            pooled.iter().filter(|&&c| min_expected(c) >= MIN_EXPECTED).count()
        )));
    }
    let statistic: f64 = pooled
        .iter()
        .map(|&(x, y)| {
            let ea = (x + y) * na / total;
            let eb = (x + y) * nb / total;
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let dof = pooled.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::TestUndefined(e.to_string()))?;
    Ok(EquivalenceReport {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        tv_distance,
        cells: pooled.len(),
    })
}
