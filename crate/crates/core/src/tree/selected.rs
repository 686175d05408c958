use super::{canonical_shape, restrict, CanonicalShape, NodeId, RootedTree};
use crate::error::{Error, Result};

/// A rooted binary tree with a designated leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedLeafTree {
    pub tree: RootedTree,
    pub leaf: NodeId,
}

impl SelectedLeafTree {
    pub fn new(tree: RootedTree, leaf: NodeId) -> Result<Self> {
        if leaf >= tree.len() || !tree.is_leaf(leaf) {
            return Err(Error::Domain(format!("vertex {leaf} is not a leaf")));
        }
        Ok(Self { tree, leaf })
    }

    /// Vertices from the selected leaf up to the root.
    pub fn ancestral_path(&self) -> Vec<NodeId> {
        let mut path = vec![self.leaf];
        let mut v = self.leaf;
        while let Some(p) = self.tree.parent(v) {
            path.push(p);
            v = p;
        }
        path
    }
}

/// Splits the tree into the subtrees hanging off the ancestral path of the
/// selected leaf.
///
/// Entry `i - 1` is the sibling subtree attached at the `i`-th path vertex
/// above the leaf. Indices past the returned length are empty.
pub fn forest_decomposition(t: &SelectedLeafTree) -> Result<Vec<RootedTree>> {
    if t.leaf >= t.tree.len() || !t.tree.is_leaf(t.leaf) {
        return Err(Error::Domain(format!("vertex {} is not a leaf", t.leaf)));
    }
    let path = t.ancestral_path();
    Ok(path
        .windows(2)
        .map(|w| {
            let (below, at) = (w[0], w[1]);
            let [a, b] = t.tree.children(at).expect("path vertex above a leaf is internal");
            t.tree.subtree(if a == below { b } else { a })
        })
        .collect())
}

fn restricted_shapes(forest: &[RootedTree], n: usize) -> Vec<CanonicalShape> {
    forest
        .iter()
        .take(n)
        .map(|tree| canonical_shape(&restrict(tree, n)))
        .collect()
}

/// Distance between two selected-leaf trees that compares their forests
/// near the selected leaf: `1 / (1 + sup{n : A_k|n = B_k|n for all k <= n})`.
///
/// Identical trees are at distance 0.
pub fn mu_distance(a: &SelectedLeafTree, b: &SelectedLeafTree) -> Result<f64> {
    let fa = forest_decomposition(a)?;
    let fb = forest_decomposition(b)?;
    let height = fa.iter().chain(fb.iter()).map(RootedTree::height).max().unwrap_or(0);
    // Beyond this depth every restriction is the whole tree and every
    // forest index is empty, so agreement there means agreement for all n.
    let saturation = fa.len().max(fb.len()).max(height + 1).max(1);
    for n in 1..=saturation {
        if restricted_shapes(&fa, n) != restricted_shapes(&fb, n) {
            return Ok(1.0 / n as f64);
        }
    }
    Ok(0.0)
}
