use std::fmt::{self, Write as _};
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context};
use horton::coalescent::Kernel;
use horton::levelset::{level_set_tree, parse_series, NoiseDistribution};
use horton::ode::{self, GeneralConfig, SolverConfig};
use horton::stats::{self, Generator, ShapeHistogram};
use horton::tree::{assign_horton_strahler, canonical_shape, parse_tree, tokunaga_counts, CanonicalShape};
use serde::Serialize;

use crate::output::{resolve_seed, Report};
use crate::{AnalyzeTree, CompareShapes, Global, HSolverArgs, HydroCheck, KernelName, SimulateOutput, Simulate};
use crate::{SolveGeneral, SolveHorton, SolveTokunaga};

/// A computation finished but missed a requested tolerance. The output is
/// still written.
#[derive(Debug)]
pub struct OutOfTolerance(pub String);

impl fmt::Display for OutOfTolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for OutOfTolerance {}

fn h_config(max_order: usize, s: &HSolverArgs) -> SolverConfig {
    SolverConfig {
        max_order,
        eps: s.eps,
        tol: s.tol,
        grid_intervals: s.grid,
        ..SolverConfig::default()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn solve_horton(g: &Global, a: &SolveHorton) -> anyhow::Result<()> {
    let sol = ode::solve_h_system(&h_config(a.orders, &a.solver))?;
    let summary = ode::summarize(&sol)?;
    let report = Report { command: "solve-horton", seed: None, flags: a };
    report.emit(g, &summary, || {
        let mut s = String::new();
        if let Some(r) = &summary.r {
            writeln!(s, "# R_root: {}\n# R_ratio: {}", r.r_root, r.r_ratio).unwrap();
        }
        s.push_str("k,N_k,n_k,gamma_k,tail_k\n");
        for k in 0..summary.ratios.len() {
            writeln!(
                s,
                "{},{},{},{},{}",
                k + 1,
                summary.ratios[k],
                opt(summary.horton_ratio_quotients.get(k).copied()),
                opt(summary.gamma.gamma.get(k).copied()),
                summary.tail[k]
            )
            .unwrap();
        }
        s
    })
}

#[derive(Serialize)]
struct TokunagaResult {
    /// `t[a - 1][b - 1]`, zero where `a >= b`.
    t: Vec<Vec<f64>>,
}

pub fn solve_tokunaga(g: &Global, a: &SolveTokunaga) -> anyhow::Result<()> {
    if a.max_order < 2 {
        return Err(horton::Error::Domain(format!("max order {} < 2", a.max_order)).into());
    }
    let sol = ode::solve_h_system(&h_config(a.max_order + 1, &a.solver))?;
    let t = ode::tokunaga_matrix(&sol, a.max_order)?;
    let report = Report { command: "solve-tokunaga", seed: None, flags: a };
    report.emit(g, &TokunagaResult { t: t.clone() }, || {
        let mut s = String::from("a,b,T_ab\n");
        for b in 2..=a.max_order {
            for i in 1..b {
                writeln!(s, "{i},{b},{}", t[i - 1][b - 1]).unwrap();
            }
        }
        s
    })
}

#[derive(Serialize)]
struct TreeList {
    trees: Vec<String>,
}

pub fn simulate(g: &Global, a: &Simulate) -> anyhow::Result<()> {
    let seed = resolve_seed(a.seed);
    let report = Report { command: "simulate", seed: Some(seed), flags: a };
    let output = match a.output {
        SimulateOutput::Auto if a.n <= stats::MAX_HISTOGRAM_LEAVES => SimulateOutput::Shapes,
        SimulateOutput::Auto => SimulateOutput::BranchStats,
        o => o,
    };
    match output {
        SimulateOutput::Shapes => {
            let h = stats::shape_distribution(a.model, a.n, a.reps, seed)?;
            report.emit(g, &h, || h.to_csv())
        }
        SimulateOutput::BranchStats => {
            let b = stats::branch_statistics(a.model, a.n, a.reps, seed)?;
            report.emit(g, &b, || b.to_csv())
        }
        SimulateOutput::Trees => {
            let trees = horton::par::map_replicates(a.reps, |r| {
                a.model.replicate(a.n, seed, r).map(|t| horton::tree::serialize_tree(&t.without_marks()))
            })
            .into_iter()
            .collect::<horton::Result<Vec<_>>>()?;
            report.emit(g, &TreeList { trees: trees.clone() }, || {
                let mut s = String::from("rep,tree\n");
                for (i, t) in trees.iter().enumerate() {
                    writeln!(s, "{i},\"{t}\"").unwrap();
                }
                s
            })
        }
        SimulateOutput::Auto => unreachable!(),
    }
}

/// Reads a `shape,count` CSV (with optional `#` lines) or a JSON report
/// written by `simulate --output shapes`.
fn read_histogram(path: &Path) -> anyhow::Result<ShapeHistogram> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pairs: Vec<(CanonicalShape, u64)> = Vec::new();
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let counts = v
            .pointer("/result/counts")
            .and_then(|c| c.as_object())
            .with_context(|| format!("{}: no result.counts object", path.display()))?;
        for (shape, c) in counts {
            let c = c.as_u64().with_context(|| format!("{}: count for {shape} is not an integer", path.display()))?;
            pairs.push((shape.parse()?, c));
        }
    } else {
        let mut header = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                if line != "shape,count" {
                    bail!("{}:{}: expected header 'shape,count'", path.display(), i + 1);
                }
                header = true;
                continue;
            }
            let (shape, c) = line
                .split_once(',')
                .with_context(|| format!("{}:{}: expected 'shape,count'", path.display(), i + 1))?;
            let c: u64 = c
                .trim()
                .parse()
                .with_context(|| format!("{}:{}: bad count", path.display(), i + 1))?;
            pairs.push((shape.parse()?, c));
        }
    }
    let n = pairs.first().map(|(s, _)| s.leaf_count()).unwrap_or(0);
    if let Some((s, _)) = pairs.iter().find(|(s, _)| s.leaf_count() != n) {
        return Err(horton::Error::Consistency(format!("{}: shape {s} does not have {n} leaves", path.display())).into());
    }
    Ok(ShapeHistogram::from_shapes(
        n,
        pairs.into_iter().flat_map(|(s, c)| std::iter::repeat(s).take(c as usize)),
    ))
}

#[derive(Serialize)]
struct Comparison {
    a: String,
    b: String,
    #[serde(flatten)]
    report: stats::EquivalenceReport,
}

#[derive(Serialize)]
struct Comparisons {
    n: usize,
    sources: Vec<String>,
    comparisons: Vec<Comparison>,
}

pub fn compare_shapes(g: &Global, a: &CompareShapes) -> anyhow::Result<()> {
    let mut sources: Vec<(String, ShapeHistogram)> = Vec::new();
    for p in &a.hists {
        sources.push((p.display().to_string(), read_histogram(p)?));
    }
    let models: Vec<Generator> = if a.models.is_empty() && a.hists.len() < 2 {
        vec![Generator::Kingman, Generator::WhiteNoise(NoiseDistribution::Uniform01)]
    } else {
        a.models.clone()
    };
    let seed = if models.is_empty() { None } else { Some(resolve_seed(a.seed)) };
    if let Some(seed) = seed {
        let n = match (a.n, sources.first()) {
            (Some(n), _) => n,
            (None, Some((_, h))) => h.n,
            (None, None) => bail!(horton::Error::Domain("--n is required when sampling models".into())),
        };
        for (i, m) in models.iter().enumerate() {
            let h = stats::shape_distribution(*m, n, a.reps, seed.wrapping_add(i as u64))?;
            sources.push((m.to_string(), h));
        }
    }
    if sources.len() < 2 {
        bail!(horton::Error::Domain("need at least two histograms or models".into()));
    }
    let mut comparisons = Vec::new();
    for i in 0..sources.len() {
        for j in i + 1..sources.len() {
            comparisons.push(Comparison {
                a: sources[i].0.clone(),
                b: sources[j].0.clone(),
                report: stats::equivalence_test(&sources[i].1, &sources[j].1)?,
            });
        }
    }
    let result = Comparisons {
        n: sources[0].1.n,
        sources: sources.iter().map(|s| s.0.clone()).collect(),
        comparisons,
    };
    let report = Report { command: "compare-shapes", seed, flags: a };
    report.emit(g, &result, || {
        let mut s = String::from("a,b,statistic,dof,p_value,tv_distance,cells\n");
        for c in &result.comparisons {
            let r = &c.report;
            writeln!(s, "{},{},{},{},{},{},{}", c.a, c.b, r.statistic, r.dof, r.p_value, r.tv_distance, r.cells).unwrap();
        }
        s
    })
}

#[derive(Serialize)]
struct HydroResult {
    rows: Vec<stats::HydroReport>,
    /// Whether the mean total-count distance strictly decreases along `n_list`.
    total_l2_decreasing: bool,
}

/// Horizon of the g-system behind `hydro-check`.
const HYDRO_T_MAX: f64 = 1e3;

pub fn hydro_check(g: &Global, a: &HydroCheck) -> anyhow::Result<()> {
    let seed = resolve_seed(a.seed);
    let ode = ode::solve_g_system(a.orders + 1, HYDRO_T_MAX.max(a.horizon), 1e-10, 2000)?;
    let rows = a
        .n_list
        .iter()
        .map(|&n| stats::hydrodynamic_check(n, a.reps, seed, &ode, a.horizon, a.orders))
        .collect::<horton::Result<Vec<_>>>()?;
    let result = HydroResult {
        total_l2_decreasing: rows.windows(2).all(|w| w[1].total_l2_mean < w[0].total_l2_mean),
        rows,
    };
    let report = Report { command: "hydro-check", seed: Some(seed), flags: a };
    report.emit(g, &result, || {
        let mut s = format!("# tail_closed_form: {}\nn,reps,total_l2_mean,total_l2_sd,eta_at_horizon_mean", 2.0 / (a.horizon + 2.0));
        for j in 1..=a.orders {
            write!(s, ",order{j}_l2_mean").unwrap();
        }
        s.push('\n');
        for r in &result.rows {
            write!(s, "{},{},{},{},{}", r.n, r.reps, r.total_l2_mean, r.total_l2_sd, r.eta_at_horizon_mean).unwrap();
            for v in &r.order_l2_mean {
                write!(s, ",{v}").unwrap();
            }
            s.push('\n');
        }
        s
    })
}

#[derive(Serialize)]
struct SideBranch {
    i: u32,
    j: u32,
    count: u64,
    tau: f64,
}

#[derive(Serialize)]
struct TreeAnalysis {
    leaves: u64,
    omega: u32,
    /// `N_k`, `k = 1..omega`.
    branch_counts: Vec<u64>,
    /// `N_ij` and `tau_ij` for every `i < j` with `N_ij > 0`.
    side_branches: Vec<SideBranch>,
    shape: String,
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading standard input")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

pub fn analyze_tree(g: &Global, a: &AnalyzeTree) -> anyhow::Result<()> {
    let tree = match (&a.input, &a.series) {
        (Some(p), _) => parse_tree(read_input(p)?.trim())?,
        (None, Some(p)) => level_set_tree(&parse_series(&read_input(p)?)?)?,
        (None, None) => unreachable!("clap requires one input"),
    };
    let h = assign_horton_strahler(&tree)?;
    let tc = tokunaga_counts(&tree, &h)?;
    let mut side = Vec::new();
    for j in 2..=h.omega {
        for i in 1..j {
            let c = tc.n_ij(i, j);
            if c > 0 {
                side.push(SideBranch { i, j, count: c, tau: tc.tau_ij(i, j) });
            }
        }
    }
    let result = TreeAnalysis {
        leaves: h.leaf_count(),
        omega: h.omega,
        branch_counts: h.branch_counts.clone(),
        side_branches: side,
        shape: canonical_shape(&tree).to_string(),
    };
    let report = Report { command: "analyze-tree", seed: None, flags: a };
    report.emit(g, &result, || {
        let mut s = format!("# leaves: {}\n# omega: {}\n# shape: {}\nquantity,i,j,value\n", result.leaves, result.omega, result.shape);
        for (k, n) in result.branch_counts.iter().enumerate() {
            writeln!(s, "N,{},,{n}", k + 1).unwrap();
        }
        for b in &result.side_branches {
            writeln!(s, "N_ij,{},{},{}\ntau,{},{},{}", b.i, b.j, b.count, b.i, b.j, b.tau).unwrap();
        }
        s
    })
}

fn read_kernel_table(path: &Path) -> anyhow::Result<Kernel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| horton::Error::Parse { position: i + 1, message: format!("{}: {e}", path.display()) })?;
        rows.push(row);
    }
    Ok(Kernel::tabulated(rows)?)
}

#[derive(Serialize)]
struct GeneralResult {
    kernel: String,
    max_order: usize,
    max_mass: usize,
    /// `N_j` at `t_max`.
    horton: Vec<f64>,
    t: Vec<f64>,
    /// `eta[s][j - 1] = sum_k eta_{j,k}(t_s)`.
    eta: Vec<Vec<f64>>,
    lost_mass: Vec<f64>,
    lost_clusters: Vec<f64>,
    warnings: Vec<String>,
}

pub fn solve_general(g: &Global, a: &SolveGeneral) -> anyhow::Result<()> {
    let kernel = match (&a.kernel, &a.kernel_table) {
        (_, Some(p)) => read_kernel_table(p)?,
        (Some(KernelName::Constant), None) => Kernel::Constant,
        (Some(KernelName::Additive), None) => Kernel::Additive,
        (Some(KernelName::Multiplicative), None) => Kernel::Multiplicative,
        (None, None) => unreachable!("clap requires a kernel"),
    };
    let mut cfg = GeneralConfig::new(kernel, a.max_order, a.max_mass, a.t_max);
    cfg.output_intervals = a.intervals;
    cfg.tol = a.tol;
    cfg.lost_mass_warning = a.max_lost_mass;
    let sol = ode::solve_general_smoluchowski_horton(&cfg)?;
    let result = GeneralResult {
        kernel: sol.kernel.clone(),
        max_order: sol.max_order,
        max_mass: sol.max_mass,
        horton: sol.horton.clone(),
        t: sol.states.iter().map(|s| s.t).collect(),
        eta: sol.states.iter().map(|s| s.order_totals()).collect(),
        lost_mass: sol.states.iter().map(|s| s.lost_mass).collect(),
        lost_clusters: sol.states.iter().map(|s| s.lost_clusters).collect(),
        warnings: sol.warnings.clone(),
    };
    let report = Report { command: "solve-general", seed: None, flags: a };
    report.emit(g, &result, || {
        let mut s = String::from("# N_j:");
        for v in &result.horton {
            write!(s, " {v}").unwrap();
        }
        s.push_str("\nt");
        for j in 1..=result.max_order {
            write!(s, ",eta_{j}").unwrap();
        }
        s.push_str(",lost_mass,lost_clusters\n");
        for i in 0..result.t.len() {
            write!(s, "{}", result.t[i]).unwrap();
            for v in &result.eta[i] {
                write!(s, ",{v}").unwrap();
            }
            writeln!(s, ",{},{}", result.lost_mass[i], result.lost_clusters[i]).unwrap();
        }
        s
    })?;
    if !sol.warnings.is_empty() {
        return Err(OutOfTolerance(sol.warnings.join("; ")).into());
    }
    Ok(())
}
