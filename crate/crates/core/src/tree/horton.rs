use super::RootedTree;
use crate::error::{Error, Result};

/// Horton-Strahler orders and branch counts of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HortonAnalysis {
    /// Order of every vertex, indexed by vertex id.
    pub orders: Vec<u32>,
    /// Order of the root.
    pub omega: u32,
    /// `branch_counts[k - 1]` is the number of order-`k` branches.
    pub branch_counts: Vec<u64>,
}

impl HortonAnalysis {
    /// Number of order-`k` branches, zero past the tree order.
    pub fn n(&self, k: u32) -> u64 {
        if k == 0 {
            return 0;
        }
        self.branch_counts.get(k as usize - 1).copied().unwrap_or(0)
    }

    pub fn leaf_count(&self) -> u64 {
        self.n(1)
    }
}

/// Side-branch counts `N_ij` and Tokunaga ratios `tau_ij = N_ij / N_j`.
///
/// Both matrices are `omega x omega` and indexed `[i - 1][j - 1]`; only
/// entries with `i < j` are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct TokunagaCounts {
    pub side: Vec<Vec<u64>>,
    pub tau: Vec<Vec<f64>>,
}

impl TokunagaCounts {
    pub fn n_ij(&self, i: u32, j: u32) -> u64 {
        self.side
            .get(i as usize - 1)
            .and_then(|r| r.get(j as usize - 1))
            .copied()
            .unwrap_or(0)
    }

    pub fn tau_ij(&self, i: u32, j: u32) -> f64 {
        self.tau
            .get(i as usize - 1)
            .and_then(|r| r.get(j as usize - 1))
            .copied()
            .unwrap_or(0.0)
    }
}

fn merge_order(a: u32, b: u32) -> u32 {
    if a == b {
        a + 1
    } else {
        a.max(b)
    }
}

/// Assigns Horton-Strahler orders leaves-up and counts branches.
///
/// A branch starts at a leaf or at a vertex whose two children share the
/// same order; every other internal vertex extends the branch of its
/// higher-order child.
pub fn assign_horton_strahler(tree: &RootedTree) -> Result<HortonAnalysis> {
    let mut orders = vec![0u32; tree.len()];
    let post = tree.postorder();
    if post.len() != tree.len() {
        return Err(Error::StructuralInvalid(
            "vertices unreachable from the root".into(),
        ));
    }
    let mut counts: Vec<u64> = Vec::new();
    let bump = |k: u32, counts: &mut Vec<u64>| {
        if counts.len() < k as usize {
            counts.resize(k as usize, 0);
        }
        counts[k as usize - 1] += 1;
    };
    for v in post {
        let order = match tree.children(v) {
            None => {
                bump(1, &mut counts);
                1
            }
            Some([a, b]) => {
                let (oa, ob) = (orders[a], orders[b]);
                if oa == 0 || ob == 0 {
                    return Err(Error::StructuralInvalid(format!(
                        "child of vertex {v} visited after its parent"
                    )));
                }
                if oa == ob {
                    bump(oa + 1, &mut counts);
                }
                merge_order(oa, ob)
            }
        };
        orders[v] = order;
    }
    let omega = orders[tree.root()];
    Ok(HortonAnalysis {
        orders,
        omega,
        branch_counts: counts,
    })
}

/// Counts order-`i` branches that join an order-`j` branch, `i < j`.
pub fn tokunaga_counts(tree: &RootedTree, analysis: &HortonAnalysis) -> Result<TokunagaCounts> {
    if analysis.orders.len() != tree.len() {
        return Err(Error::Consistency(format!(
            "analysis has {} orders for a tree with {} vertices",
            analysis.orders.len(),
            tree.len()
        )));
    }
    let omega = analysis.omega as usize;
    let mut side = vec![vec![0u64; omega]; omega];
    for v in 0..tree.len() {
        let expected = match tree.children(v) {
            None => 1,
            Some([a, b]) => {
                let (oa, ob) = (analysis.orders[a], analysis.orders[b]);
                if oa != ob {
                    let (lo, hi) = (oa.min(ob) as usize, oa.max(ob) as usize);
                    if hi > omega {
                        return Err(Error::Consistency(format!(
                            "vertex order {hi} exceeds tree order {omega}"
                        )));
                    }
                    side[lo - 1][hi - 1] += 1;
                }
                merge_order(oa, ob)
            }
        };
        if analysis.orders[v] != expected {
            return Err(Error::Consistency(format!(
                "vertex {v} has order {} but its children imply {expected}",
                analysis.orders[v]
            )));
        }
    }
    let tau = side
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &c)| {
                    let nj = analysis.n(j as u32 + 1);
                    if nj == 0 {
                        0.0
                    } else {
                        c as f64 / nj as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok(TokunagaCounts { side, tau })
}
