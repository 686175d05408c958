//! Finite rooted binary trees and their combinatorial analytics.
//!
//! A [`RootedTree`] is an indexed vertex store. Every internal vertex has
//! exactly two children, and vertices may carry a real time mark. Marks are
//! monotone along every root-ward path; coalescent trees have marks that grow
//! toward the root, level-set trees have marks that shrink toward it.

mod format;
mod horton;
mod selected;
mod shape;

pub use format::{parse_tree, serialize_tree};
pub use horton::{assign_horton_strahler, tokunaga_counts, HortonAnalysis, TokunagaCounts};
pub use selected::{forest_decomposition, mu_distance, SelectedLeafTree};
pub use shape::{canonical_shape, prune, restrict, CanonicalShape};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    pub mark: Option<f64>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Direction in which time marks move along root-ward paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkOrientation {
    /// Parent marks exceed child marks (coalescent time).
    IncreasingToRoot,
    /// Parent marks are below child marks (level-set thresholds).
    DecreasingToRoot,
}

/// A finite rooted binary tree with optional vertex time marks.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedTree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl RootedTree {
    /// The one-vertex tree.
    pub fn leaf(mark: Option<f64>) -> Self {
        Self {
            nodes: vec![Node {
                parent: None,
                children: None,
                mark,
            }],
            root: 0,
        }
    }

    /// Builds a tree from per-vertex child lists and validates it.
    ///
    /// Rejects vertices with a child count other than 0 or 2, vertices
    /// with several parents, forests with several roots, cycles and
    /// marks that are not monotone along root-ward paths.
    pub fn from_children(children: &[Vec<NodeId>], marks: Option<&[f64]>) -> Result<Self> {
        let n = children.len();
        if n == 0 {
            return Err(Error::StructuralInvalid("no vertices".into()));
        }
        if let Some(m) = marks {
            if m.len() != n {
                return Err(Error::StructuralInvalid(format!(
                    "{} marks for {} vertices",
                    m.len(),
                    n
                )));
            }
        }
        let mut nodes: Vec<Node> = (0..n)
            .map(|v| Node {
                parent: None,
                children: None,
                mark: marks.map(|m| m[v]),
            })
            .collect();
        for (v, ch) in children.iter().enumerate() {
            match ch.len() {
                0 => {}
                2 => {
                    for &c in ch {
                        if c >= n {
                            return Err(Error::StructuralInvalid(format!(
                                "vertex {v} references missing child {c}"
                            )));
                        }
                        if c == v {
                            return Err(Error::StructuralInvalid(format!("vertex {v} is its own child")));
                        }
                        if nodes[c].parent.is_some() {
                            return Err(Error::StructuralInvalid(format!(
                                "vertex {c} has more than one parent"
                            )));
                        }
                        nodes[c].parent = Some(v);
                    }
                    if ch[0] == ch[1] {
                        return Err(Error::StructuralInvalid(format!(
                            "vertex {v} lists the same child twice"
                        )));
                    }
                    nodes[v].children = Some([ch[0], ch[1]]);
                }
                k => {
                    return Err(Error::StructuralInvalid(format!(
                        "vertex {v} has {k} children, expected 0 or 2"
                    )))
                }
            }
        }
        let roots: Vec<NodeId> = (0..n).filter(|&v| nodes[v].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::StructuralInvalid(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let tree = Self {
            nodes,
            root: roots[0],
        };
        // With one parent per vertex and a single root, a cycle shows up as
        // vertices unreachable from the root.
        if tree.preorder().len() != n {
            return Err(Error::StructuralInvalid("cycle detected".into()));
        }
        tree.check_marks()?;
        Ok(tree)
    }

    pub(crate) fn from_nodes_unchecked(nodes: Vec<Node>, root: NodeId) -> Self {
        Self { nodes, root }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, id: NodeId) -> Option<[NodeId; 2]> {
        self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn mark(&self, id: NodeId) -> Option<f64> {
        self.nodes[id].mark
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].is_leaf()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    pub fn has_marks(&self) -> bool {
        self.nodes.iter().any(|n| n.mark.is_some())
    }

    /// Vertices in depth-first preorder, left child first.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            if let Some([a, b]) = self.nodes[v].children {
                stack.push(b);
                stack.push(a);
            }
        }
        out
    }

    /// Vertices ordered so that every child precedes its parent.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut order = self.preorder();
        order.reverse();
        order
    }

    /// Depth of every vertex, root at depth 0.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.nodes.len()];
        for v in self.preorder() {
            if let Some(p) = self.nodes[v].parent {
                depth[v] = depth[p] + 1;
            }
        }
        depth
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Orientation of the time marks, if at least one marked parent-child
    /// pair exists.
    pub fn orientation(&self) -> Option<MarkOrientation> {
        for (v, node) in self.nodes.iter().enumerate() {
            let Some(p) = node.parent else { continue };
            if let (Some(cm), Some(pm)) = (self.nodes[v].mark, self.nodes[p].mark) {
                return Some(if pm > cm {
                    MarkOrientation::IncreasingToRoot
                } else {
                    MarkOrientation::DecreasingToRoot
                });
            }
        }
        None
    }

    fn check_marks(&self) -> Result<()> {
        let Some(orientation) = self.orientation() else {
            return Ok(());
        };
        for (v, node) in self.nodes.iter().enumerate() {
            let Some(p) = node.parent else { continue };
            if let (Some(cm), Some(pm)) = (node.mark, self.nodes[p].mark) {
                let ok = match orientation {
                    MarkOrientation::IncreasingToRoot => pm > cm,
                    MarkOrientation::DecreasingToRoot => pm < cm,
                };
                if !ok {
                    return Err(Error::StructuralInvalid(format!(
                        "marks of vertex {v} ({cm}) and its parent {p} ({pm}) are not monotone"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Copy of the tree with all time marks dropped.
    pub fn without_marks(&self) -> Self {
        let mut t = self.clone();
        for n in &mut t.nodes {
            n.mark = None;
        }
        t
    }

    /// Copy of the tree with the children of every vertex in the given
    /// positions swapped.
    pub fn swap_children(&self, which: impl Fn(NodeId) -> bool) -> Self {
        let mut t = self.clone();
        for (v, n) in t.nodes.iter_mut().enumerate() {
            if let Some([a, b]) = n.children {
                if which(v) {
                    n.children = Some([b, a]);
                }
            }
        }
        t
    }

    /// Extracts the subtree rooted at `id` as a standalone tree.
    pub fn subtree(&self, id: NodeId) -> Self {
        let mut builder = TreeBuilder::new();
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            order.push(v);
            if let Some([a, b]) = self.nodes[v].children {
                stack.push(b);
                stack.push(a);
            }
        }
        for &v in order.iter().rev() {
            map[v] = match self.nodes[v].children {
                None => builder.add_leaf(self.nodes[v].mark),
                Some([a, b]) => builder.join(map[a], map[b], self.nodes[v].mark),
            };
        }
        builder.finish(map[id])
    }
}

/// Bottom-up tree construction. Children are always created before their
/// parent, so the result cannot contain cycles.
#[derive(Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(n),
        }
    }

    pub fn add_leaf(&mut self, mark: Option<f64>) -> NodeId {
        self.nodes.push(Node {
            parent: None,
            children: None,
            mark,
        });
        self.nodes.len() - 1
    }

    /// Creates a parent of `a` and `b`.
    ///
    /// Panics if either vertex already has a parent.
    pub fn join(&mut self, a: NodeId, b: NodeId, mark: Option<f64>) -> NodeId {
        let id = self.nodes.len();
        for c in [a, b] {
            assert!(self.nodes[c].parent.is_none(), "vertex {c} already has a parent");
            self.nodes[c].parent = Some(id);
        }
        self.nodes.push(Node {
            parent: None,
            children: Some([a, b]),
            mark,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Finishes the tree at `root`. Vertices not below `root` are dropped.
    pub fn finish(self, root: NodeId) -> RootedTree {
        let all_attached = self
            .nodes
            .iter()
            .enumerate()
            .all(|(v, n)| v == root || n.parent.is_some());
        if all_attached {
            return RootedTree {
                nodes: self.nodes,
                root,
            };
        }
        RootedTree {
            nodes: self.nodes,
            root,
        }
        .subtree(root)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn cherry() -> RootedTree {
        parse_tree("(L,L)").unwrap()
    }

    /// `(((a,b),c),d)` style comb with `n` leaves.
    pub fn comb(n: usize) -> RootedTree {
        let mut b = TreeBuilder::new();
        let mut acc = b.add_leaf(None);
        for _ in 1..n {
            let l = b.add_leaf(None);
            acc = b.join(acc, l, None);
        }
        b.finish(acc)
    }

    pub fn perfect(depth: u32) -> RootedTree {
        let mut b = TreeBuilder::new();
        let mut level: Vec<NodeId> = (0..1usize << depth).map(|_| b.add_leaf(None)).collect();
        while level.len() > 1 {
            level = level.chunks(2).map(|p| b.join(p[0], p[1], None)).collect();
        }
        b.finish(level[0])
    }
}
