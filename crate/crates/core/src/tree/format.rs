//! Plain-text tree format.
//!
//! ```text
//! tree := node
//! node := "L" [":" mark] | "(" node "," node ")" [":" mark]
//! ```
//!
//! Whitespace between tokens is ignored. Marks are decimal reals and are
//! written back with the shortest representation that round-trips.

use std::fmt::Write;

use super::{RootedTree, TreeBuilder};
use crate::error::{Error, Result};

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.err(format!("expected '{}', found '{}'", c as char, b as char))),
            None => Err(self.err(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn mark(&mut self) -> Result<Option<f64>> {
        if self.peek() != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && matches!(self.bytes[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E')
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        if text.is_empty() {
            return Err(self.err("expected a mark after ':'"));
        }
        text.parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Parse {
                position: start,
                message: format!("invalid mark '{text}'"),
            })
    }
}

/// Parses a tree from its text form.
pub fn parse_tree(text: &str) -> Result<RootedTree> {
    let mut cur = Cursor {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let mut builder = TreeBuilder::new();
    // Children collected so far for every open parenthesis.
    let mut open: Vec<Vec<usize>> = Vec::new();
    loop {
        let mut done = match cur.peek() {
            Some(b'(') => {
                cur.pos += 1;
                open.push(Vec::with_capacity(2));
                continue;
            }
            Some(b'L') => {
                cur.pos += 1;
                let mark = cur.mark()?;
                builder.add_leaf(mark)
            }
            Some(c) => return Err(cur.err(format!("expected 'L' or '(', found '{}'", c as char))),
            None => return Err(cur.err("unexpected end of input")),
        };
        loop {
            let Some(frame) = open.last_mut() else {
                if let Some(c) = cur.peek() {
                    return Err(cur.err(format!("trailing input starting with '{}'", c as char)));
                }
                let tree = builder.finish(done);
                tree.check_marks().map_err(|e| Error::Parse {
                    position: cur.pos,
                    message: e.to_string(),
                })?;
                return Ok(tree);
            };
            frame.push(done);
            if frame.len() == 1 {
                cur.expect(b',')?;
                break;
            }
            cur.expect(b')')?;
            let pair = open.pop().expect("frame exists");
            let mark = cur.mark()?;
            done = builder.join(pair[0], pair[1], mark);
        }
    }
}

/// Writes a tree in the text form accepted by [`parse_tree`].
pub fn serialize_tree(tree: &RootedTree) -> String {
    enum Step {
        Enter(usize),
        Comma,
        Close(usize),
    }
    let mut out = String::new();
    let mut stack = vec![Step::Enter(tree.root())];
    let write_mark = |out: &mut String, v: usize| {
        if let Some(m) = tree.mark(v) {
            write!(out, ":{m}").expect("write to string");
        }
    };
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(v) => match tree.children(v) {
                None => {
                    out.push('L');
                    write_mark(&mut out, v);
                }
                Some([a, b]) => {
                    out.push('(');
                    stack.push(Step::Close(v));
                    stack.push(Step::Enter(b));
                    stack.push(Step::Comma);
                    stack.push(Step::Enter(a));
                }
            },
            Step::Comma => out.push(','),
            Step::Close(v) => {
                out.push(')');
                write_mark(&mut out, v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::fixtures::comb;

    #[test]
    fn single_leaf_round_trip() {
        let t = parse_tree("L").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(serialize_tree(&t), "L");
    }

    #[test]
    fn comb_three() {
        let t = parse_tree("((L,L),L)").unwrap();
        assert_eq!(t, comb(3));
        assert_eq!(serialize_tree(&t), "((L,L),L)");
    }

    #[test]
    fn marked_comb() {
        let text = "((L:0,L:0):0.4,L:0):1.1";
        let t = parse_tree(text).unwrap();
        assert_eq!(t.mark(t.root()), Some(1.1));
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(serialize_tree(&t), text);
    }

    #[test]
    fn whitespace_is_ignored() {
        let t = parse_tree(" ( ( L , L ) :2 ,\n L ) ").unwrap();
        assert_eq!(serialize_tree(&t), "((L,L):2,L)");
    }

    #[test]
    fn errors_carry_positions() {
        for (text, pos) in [("(L,L", 4), ("(L;L)", 2), ("L)", 1), ("(L,L):x", 6), ("", 0)] {
            match parse_tree(text) {
                Err(Error::Parse { position, .. }) => assert_eq!(position, pos, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn non_monotone_marks_rejected() {
        assert!(parse_tree("(L:2,L:0):1").is_err());
    }

    #[test]
    fn deep_comb_does_not_recurse() {
        let t = comb(200_000);
        let text = serialize_tree(&t);
        let back = parse_tree(&text).unwrap();
        assert_eq!(back.leaf_count(), 200_000);
    }
}
