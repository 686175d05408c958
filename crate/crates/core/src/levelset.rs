//! Level-set trees of finite time series.
//!
//! A series `X_0..X_n` is read as the piecewise-linear path through its
//! points. Its level-set tree has a leaf for every local maximum and an
//! internal vertex for every internal local minimum; the lowest internal
//! minimum is the root and splits the path into the two subtrees. Marks are
//! the extremal values, so they decrease toward the root.

use std::fmt::Write;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::tree::{Node, RootedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub position: usize,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Local maxima and internal local minima, each in position order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extrema {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
}

fn check_finite(s: &[f64]) -> Result<()> {
    match s.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("series value at {i} is not finite"))),
        None => Ok(()),
    }
}

/// Strict local maxima (endpoints included) and strict internal minima.
pub fn local_extrema(s: &[f64]) -> Result<Extrema> {
    if s.is_empty() {
        return Err(Error::Domain("empty series".into()));
    }
    check_finite(s)?;
    if let Some(i) = s.windows(2).position(|w| w[0] == w[1]) {
        return Err(Error::DegenerateInput(format!(
            "flat segment between positions {i} and {}",
            i + 1
        )));
    }
    let n = s.len();
    let mut out = Extrema::default();
    for i in 0..n {
        let above_left = i == 0 || s[i] > s[i - 1];
        let above_right = i + 1 == n || s[i] > s[i + 1];
        let kind = if above_left && above_right {
            ExtremumKind::Max
        } else if i > 0 && i + 1 < n && !above_left && !above_right {
            ExtremumKind::Min
        } else {
            continue;
        };
        let e = Extremum {
            position: i,
            value: s[i],
            kind,
        };
        match kind {
            ExtremumKind::Max => out.maxima.push(e),
            ExtremumKind::Min => out.minima.push(e),
        }
    }
    Ok(out)
}

/// Builds the level-set tree of `s`.
///
/// Leaves are created for the maxima in position order (ids `0..=k`),
/// followed by the minima. Left subtrees lie earlier in time.
pub fn level_set_tree(s: &[f64]) -> Result<RootedTree> {
    let ex = local_extrema(s)?;
    let k = ex.minima.len();
    debug_assert_eq!(ex.maxima.len(), k + 1);
    let mut sorted: Vec<f64> = ex.minima.iter().map(|e| e.value).collect();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DegenerateInput(format!("tied internal minima at value {}", w[0])));
    }

    // Min-rooted Cartesian tree over the minima.
    let mut left: Vec<Option<usize>> = vec![None; k];
    let mut right: Vec<Option<usize>> = vec![None; k];
    let mut stack: Vec<usize> = Vec::with_capacity(k);
    for i in 0..k {
        let v = ex.minima[i].value;
        let mut last = None;
        while let Some(&top) = stack.last() {
            if ex.minima[top].value < v {
                break;
            }
            last = stack.pop();
        }
        left[i] = last;
        if let Some(&top) = stack.last() {
            right[top] = Some(i);
        }
        stack.push(i);
    }

    let mut nodes: Vec<Node> = ex
        .maxima
        .iter()
        .map(|m| Node {
            parent: None,
            children: None,
            mark: Some(m.value),
        })
        .chain(ex.minima.iter().map(|m| Node {
            parent: None,
            children: None,
            mark: Some(m.value),
        }))
        .collect();
    let min_id = |i: usize| k + 1 + i;
    for i in 0..k {
        let a = left[i].map_or(i, min_id);
        let b = right[i].map_or(i + 1, min_id);
        nodes[min_id(i)].children = Some([a, b]);
        nodes[a].parent = Some(min_id(i));
        nodes[b].parent = Some(min_id(i));
    }
    let root = stack.first().map_or(0, |&r| min_id(r));
    Ok(RootedTree::from_nodes_unchecked(nodes, root))
}

/// Extended white noise: `w` becomes the internal minima at the even
/// positions (1-based) and every odd position is raised one unit above its
/// clamped neighbours, so the result has `w.len() + 1` local maxima.
pub fn extend_white_noise(w: &[f64]) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::Domain("extended white noise needs at least one value".into()));
    }
    check_finite(w)?;
    let mut sorted = w.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(d) = sorted.windows(2).find(|d| d[0] == d[1]) {
        return Err(Error::DegenerateInput(format!("duplicate white-noise value {}", d[0])));
    }
    let m = w.len(); // N - 1
    let at = |k: usize| w[k - 1];
    let out = (1..=2 * m + 1)
        .map(|i| {
            if i % 2 == 0 {
                at(i / 2)
            } else {
                at(((i - 1) / 2).max(1)).max(at(((i + 1) / 2).min(m))) + 1.0
            }
        })
        .collect();
    Ok(out)
}

/// Marginal law of white-noise samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    Uniform01,
    Gaussian,
    Exponential,
}

impl std::str::FromStr for NoiseDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" | "uniform" => Ok(Self::Uniform01),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "exponential" => Ok(Self::Exponential),
            other => Err(Error::Domain(format!("unknown distribution '{other}'"))),
        }
    }
}

pub fn sample_white_noise(n: usize, distribution: NoiseDistribution, seed: u64) -> Vec<f64> {
    sample_white_noise_with(n, distribution, &mut seeded(seed))
}

pub fn sample_white_noise_with<R: Rng + ?Sized>(n: usize, distribution: NoiseDistribution, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| match distribution {
            NoiseDistribution::Uniform01 => rng.gen::<f64>(),
            NoiseDistribution::Gaussian => rng.sample(StandardNormal),
            NoiseDistribution::Exponential => rng.sample(Exp1),
        })
        .collect()
}

/// Level-set tree of extended white noise with `leaves` leaves.
pub fn white_noise_tree_with<R: Rng + ?Sized>(
    leaves: usize,
    distribution: NoiseDistribution,
    rng: &mut R,
) -> Result<RootedTree> {
    match leaves {
        0 => Err(Error::Domain("a tree needs at least one leaf".into())),
        1 => Ok(RootedTree::leaf(None)),
        _ => level_set_tree(&extend_white_noise(&sample_white_noise_with(leaves - 1, distribution, rng))?),
    }
}

fn interpolate(s: &[f64], t: f64) -> f64 {
    let i = (t.floor() as usize).min(s.len() - 1);
    if i + 1 >= s.len() {
        return s[i];
    }
    let f = t - i as f64;
    s[i] + f * (s[i + 1] - s[i])
}

/// `d_X(a, b) = X(a) + X(b) - 2 inf X` over the interval between `a` and `b`.
pub fn path_pseudo_metric_dx(s: &[f64], a: f64, b: f64) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::Domain("empty series".into()));
    }
    check_finite(s)?;
    let n = (s.len() - 1) as f64;
    for t in [a, b] {
        if !(0.0..=n).contains(&t) {
            return Err(Error::Domain(format!("point {t} outside [0, {n}]")));
        }
    }
    let (lo, hi) = (a.min(b), a.max(b));
    let (xa, xb) = (interpolate(s, a), interpolate(s, b));
    let first = lo.floor() as usize + 1;
    let last = hi.ceil() as usize;
    let inner = (first..last).map(|k| s[k]).fold(f64::INFINITY, f64::min);
    let inf = xa.min(xb).min(inner);
    Ok((xa - inf) + (xb - inf))
}

/// Reads a series written one value per line; blank lines are skipped.
pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let t = line.trim();
        if !t.is_empty() {
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                position: offset,
                message: format!("line {}: invalid value '{t}'", lineno + 1),
            })?;
            out.push(v);
        }
        offset += line.len();
    }
    Ok(out)
}

pub fn write_series(s: &[f64]) -> String {
    let mut out = String::with_capacity(s.len() * 20);
    for v in s {
        writeln!(out, "{v}").expect("write to string");
    }
    out
}

/// Extrema table as CSV, sorted by position.
pub fn extrema_csv(ex: &Extrema) -> String {
    let mut all: Vec<&Extremum> = ex.maxima.iter().chain(&ex.minima).collect();
    all.sort_by_key(|e| e.position);
    let mut out = String::from("position,value,kind\n");
    for e in all {
        let kind = match e.kind {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        };
        writeln!(out, "{},{},{kind}", e.position, e.value).expect("write to string");
    }
    out
}
