use std::fmt;

use super::{NodeId, RootedTree, TreeBuilder};
use crate::error::{Error, Result};

/// Text key of a non-embedded, unlabeled binary tree shape.
///
/// A leaf encodes as `L`; an internal vertex as `(` + the two child codes
/// in byte order + `)`. Since `(` sorts before `L`, a subtree code always
/// precedes a bare leaf: the 3-leaf shape is `((LL)L)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct CanonicalShape(String);

impl CanonicalShape {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of leaves in the encoded shape.
    pub fn leaf_count(&self) -> usize {
        self.0.bytes().filter(|&b| b == b'L').count()
    }
}

impl fmt::Display for CanonicalShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for CanonicalShape {
    type Err = Error;

    /// Reads a shape code and re-canonicalises it, so any child order is
    /// accepted.
    fn from_str(s: &str) -> Result<Self> {
        fn node(b: &[u8], pos: &mut usize, out: &mut TreeBuilder) -> Result<NodeId> {
            match b.get(*pos) {
                Some(b'L') => {
                    *pos += 1;
                    Ok(out.add_leaf(None))
                }
                Some(b'(') => {
                    *pos += 1;
                    let l = node(b, pos, out)?;
                    let r = node(b, pos, out)?;
                    if b.get(*pos) != Some(&b')') {
                        return Err(Error::Parse { position: *pos, message: "expected ')'".into() });
                    }
                    *pos += 1;
                    Ok(out.join(l, r, None))
                }
                _ => Err(Error::Parse { position: *pos, message: "expected 'L' or '('".into() }),
            }
        }
        let b = s.trim().as_bytes();
        let mut pos = 0;
        let mut builder = TreeBuilder::new();
        let root = node(b, &mut pos, &mut builder)?;
        if pos != b.len() {
            return Err(Error::Parse { position: pos, message: "trailing input after shape".into() });
        }
        Ok(canonical_shape(&builder.finish(root)))
    }
}

impl From<CanonicalShape> for String {
    fn from(s: CanonicalShape) -> Self {
        s.0
    }
}

/// Encodes the combinatorial shape of `tree`, ignoring marks and child order.
pub fn canonical_shape(tree: &RootedTree) -> CanonicalShape {
    let mut codes: Vec<String> = vec![String::new(); tree.len()];
    for v in tree.postorder() {
        codes[v] = match tree.children(v) {
            None => "L".to_string(),
            Some([a, b]) => {
                let ca = std::mem::take(&mut codes[a]);
                let cb = std::mem::take(&mut codes[b]);
                let (lo, hi) = if ca <= cb {
                    (ca, cb)
                } else {
                    (cb, ca)
                };
                let mut s = String::with_capacity(lo.len() + hi.len() + 2);
                s.push('(');
                s.push_str(&lo);
                s.push_str(&hi);
                s.push(')');
                s
            }
        };
    }
    CanonicalShape(std::mem::take(&mut codes[tree.root()]))
}

/// Removes every leaf and collapses the vertices left with one child.
///
/// Returns `None` when the input is a single leaf. Surviving vertices keep
/// their marks.
pub fn prune(tree: &RootedTree) -> Option<RootedTree> {
    let mut builder = TreeBuilder::with_capacity(tree.internal_count());
    let mut image: Vec<Option<usize>> = vec![None; tree.len()];
    for v in tree.postorder() {
        image[v] = match tree.children(v) {
            None => None,
            Some([a, b]) => match (image[a], image[b]) {
                (None, None) => Some(builder.add_leaf(tree.mark(v))),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (Some(x), Some(y)) => Some(builder.join(x, y, tree.mark(v))),
            },
        };
    }
    image[tree.root()].map(|r| builder.finish(r))
}

/// Keeps the vertices at depth below `n` (root at depth 0).
///
/// Internal vertices at depth `n - 1` lose their children and so look like
/// leaves in the result; the restriction is meant for shape comparisons.
///
/// # Panics
/// If `n == 0`.
pub fn restrict(tree: &RootedTree, n: usize) -> RootedTree {
    assert!(n >= 1, "restriction depth must be positive");
    let depth = tree.depths();
    let kept: Vec<usize> = tree.preorder().into_iter().filter(|&v| depth[v] < n).collect();
    let mut builder = TreeBuilder::with_capacity(kept.len());
    let mut image = vec![usize::MAX; tree.len()];
    for &v in kept.iter().rev() {
        image[v] = match tree.children(v) {
            Some([a, b]) if depth[v] + 1 < n => builder.join(image[a], image[b], tree.mark(v)),
            _ => builder.add_leaf(tree.mark(v)),
        };
    }
    builder.finish(image[tree.root()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::*;
    use crate::tree::{parse_tree, serialize_tree};

    #[test]
    fn shape_codes_round_trip() {
        let c: CanonicalShape = "(L(LL))".parse().unwrap();
        assert_eq!(c.as_str(), "((LL)L)");
        for bad in ["", "(LL", "(L)", "LL", "(LL)x"] {
            assert!(bad.parse::<CanonicalShape>().is_err(), "{bad}");
        }
        let s = canonical_shape(&perfect(3));
        assert_eq!(s.as_str().parse::<CanonicalShape>().unwrap(), s);
    }

    fn shape(text: &str) -> String {
        canonical_shape(&parse_tree(text).unwrap()).to_string()
    }

    #[test]
    fn encodings() {
        assert_eq!(shape("L"), "L");
        assert_eq!(shape("(L,L)"), "(LL)");
        assert_eq!(shape("((L,L),L)"), "((LL)L)");
        assert_eq!(shape("(L,(L,L))"), "((LL)L)");
        assert_eq!(shape("((L,L),(L,L))"), "((LL)(LL))");
    }

    #[test]
    fn distinguishes_five_leaf_shapes() {
        let a = shape("((L,L),((L,L),L))");
        let b = shape("(((L,L),L),(L,L))");
        assert_eq!(a, b);
        let c = shape("((((L,L),L),L),L)");
        let d = shape("(((L,L),(L,L)),L)");
        let e = shape("(((L,L),L),(L,L))");
        assert_ne!(c, d);
        assert_ne!(d, e);
        assert_ne!(c, e);
    }

    #[test]
    fn prune_examples() {
        let single = prune(&cherry()).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(serialize_tree(&prune(&perfect(2)).unwrap()), "(L,L)");
        assert_eq!(prune(&comb(3)).unwrap().len(), 1);
        assert!(prune(&RootedTree::leaf(None)).is_none());
    }

    #[test]
    fn prune_keeps_marks() {
        let t = parse_tree("((L:0,L:0):1,(L:0,L:0):2):3").unwrap();
        assert_eq!(serialize_tree(&prune(&t).unwrap()), "(L:1,L:2):3");
    }

    #[test]
    fn restrict_examples() {
        let t = comb(4);
        assert_eq!(restrict(&t, 1).len(), 1);
        let r = restrict(&perfect(2), 2);
        assert_eq!(r.len(), 3);
        assert_eq!(serialize_tree(&r), "(L,L)");
        assert_eq!(serialize_tree(&restrict(&t, 50)), serialize_tree(&t));
    }
}
