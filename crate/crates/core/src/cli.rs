//! Command-line entry point.
//!
//! Every subcommand writes its artifacts into `--out` (created if needed).
//! Exit codes: 0 success, 1 a verification or comparison failed, 2 usage
//! or input error.  Replica `r` of a run with master seed `s` draws from the
//! streams `(s, r, purpose)` of [`crate::rng::stream`], and results are
//! aggregated in replica order, so outputs do not depend on `--threads`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::coded_metric::{lifo_coded_space, pinched_matrix, tree_distance};
use crate::continuum::{choose_truncation, limit_masses, simulate_limit_y, DEFAULT_DT_FRACTION, TRUNCATION_TARGET};
use crate::direct_graph::{all_pairs_hops, connected_components, sample_direct, EdgeFn, OrderBy, UNREACHABLE};
use crate::excursions::{excursion_masses, excursions_of_path, mass_balance, MassBalance, DEFAULT_TOP_K};
use crate::io::{self, IoError};
use crate::lifo_coder::{assemble_graph, sample_pinches, simulate_lifo};
use crate::markov_coder::gw_forest_stats;
use crate::markov_coder::{color_blue_red, simulate_markov, verify_embedding, IdentityReport, StopRule};
use crate::rng::{stream, Purpose};
use crate::scaling::{aldous_limic_params, check_regime, psi_report};
use crate::stat_harness::edge_marginal_compare;
use crate::weights::{gen_er_triple, gen_powerlaw_triple, LimitParams, ScalingTriple, WeightSeq};

#[derive(Debug, Parser)]
#[command(name = "wmgraph", version, about = "Queue encodings and diagnostics for multiplicative random graphs")]
pub struct Cli {
    /// Worker threads (default: all cores).  Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one graph and export its trace, pinches, edges and components.
    Simulate(SimulateArgs),
    /// Check pathwise identities or mass conservation over many replicas.
    Verify(VerifyArgs),
    /// Regime diagnostics for a family of scaling triples.
    Scaling(ScalingArgs),
    /// Tree and pinched distance matrices of a LIFO-coded graph.
    Metric(MetricArgs),
    /// Simulate the limit load process and its excursion masses.
    Continuum(ContinuumArgs),
    /// Compare directly sampled graphs with LIFO-assembled ones.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Lifo,
    Markov,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Er,
    Powerlaw,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "lifo")]
    pub mode: Mode,
    /// Weights as a JSON array (or `{"schema": 1, "weights": [...]}`).
    #[arg(long)]
    pub weights: PathBuf,
    /// Edge law of the direct sampler.
    #[arg(long, value_enum, default_value = "exp")]
    pub edge_law: EdgeFn,
    /// Horizon of the Markov queue.
    #[arg(long, default_value_t = 100.0)]
    pub horizon: f64,
    /// Stop the Markov queue after this many empty-queue epochs (within the horizon).
    #[arg(long)]
    pub empty_epochs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub topk: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check the blue/red embedding identities of the Markov queue.
    #[arg(long)]
    pub identities: bool,
    /// Check that LIFO excursion masses and component masses equal the weights.
    #[arg(long)]
    pub masses: bool,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub replicas: u64,
    /// Empty-queue epochs per Markov replica.
    #[arg(long, default_value_t = 5)]
    pub empty_epochs: usize,
    /// Time cap of each Markov replica.
    #[arg(long, default_value_t = 1e4)]
    pub horizon: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Comma-separated sizes n.
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    pub sizes: Vec<u64>,
    /// Erdős–Rényi vertex weight x (edge probability 1 − e^{−x/n}).
    #[arg(long, default_value_t = 1.0)]
    pub er_weight: f64,
    #[arg(long, default_value_t = 2.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Comma-separated y values for the height integrals.
    #[arg(long, value_delimiter = ',', default_value = "1,10")]
    pub y_grid: Vec<f64>,
    /// Limit parameters (JSON); defaults to those attached to the family.
    #[arg(long)]
    pub limit: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long)]
    pub weights: PathBuf,
    /// Shortcut length of the pinches.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ContinuumArgs {
    /// Limit parameters as JSON `{"alpha", "beta", "kappa", "c": [...]}`.
    #[arg(long)]
    pub limit: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Grid step (default 1e-4 × horizon).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub topk: usize,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value_t = 20000)]
    pub replicas: u64,
    /// Edge law of the direct sampler (the LIFO construction always has law exp).
    #[arg(long, value_enum, default_value = "exp")]
    pub edge_law: EdgeFn,
    /// Test the equality in law of the two constructions: both use edge law
    /// exp.  This is the default; the flag pins it against `--edge-law`.
    #[arg(long, alias = "theorem21", conflicts_with = "edge_law")]
    pub exp_law: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Error kinds mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Run(String),
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli.command)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => run(&cli.command),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn run(cmd: &Command) -> Result<bool, CliError> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Scaling(a) => scaling(a),
        Command::Metric(a) => metric(a),
        Command::Continuum(a) => continuum(a),
        Command::Compare(a) => compare(a),
    }
}

fn out_dir(p: &Path) -> Result<&Path, CliError> {
    std::fs::create_dir_all(p).map_err(|source| IoError::File { path: p.display().to_string(), source })?;
    Ok(p)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    mode: &'a str,
    seed: u64,
    weights: &'a [f64],
    sigma1: f64,
    vertices: usize,
    edges: usize,
    masses: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pinches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    self_loops: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duplicates: Option<usize>,
}

fn simulate(a: &SimulateArgs) -> Result<bool, CliError> {
    let w = io::read_weights(&a.weights)?;
    let dir = out_dir(&a.common.out)?;
    let seed = a.common.seed;
    match a.mode {
        Mode::Lifo => {
            let trace = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
            let pinches = sample_pinches(&trace, &mut stream(seed, 0, Purpose::Pinches));
            let g = assemble_graph(&trace, &pinches).map_err(run_err)?;
            let comps = connected_components(&g, OrderBy::Mass);
            let mut masses = excursion_masses(&trace.path);
            masses.truncate(a.topk);
            io::write_trace_csv(&dir.join("trace.csv"), &trace.events)?;
            io::write_pinches_csv(&dir.join("pinches.csv"), &pinches)?;
            io::write_edges_csv(&dir.join("edges.csv"), &g)?;
            io::write_components_csv(&dir.join("components.csv"), &comps)?;
            io::write_masses_csv(&dir.join("masses.csv"), &masses)?;
            let summary = SimulateSummary {
                mode: "lifo",
                seed,
                weights: w.as_slice(),
                sigma1: w.sigma1(),
                vertices: g.vertex_count(),
                edges: g.edges.len(),
                masses,
                pinches: Some(pinches.len()),
                self_loops: Some(g.self_loops),
                duplicates: Some(g.duplicates),
            };
            io::write_json(&dir.join("summary.json"), &summary)?;
        }
        Mode::Direct => {
            let g = sample_direct(&w, a.edge_law, &mut stream(seed, 0, Purpose::EdgeCoins));
            let comps = connected_components(&g, OrderBy::Mass);
            let masses: Vec<f64> = comps.iter().take(a.topk).map(|c| c.mass).collect();
            io::write_edges_csv(&dir.join("edges.csv"), &g)?;
            io::write_components_csv(&dir.join("components.csv"), &comps)?;
            io::write_masses_csv(&dir.join("masses.csv"), &masses)?;
            let summary = SimulateSummary {
                mode: "direct",
                seed,
                weights: w.as_slice(),
                sigma1: w.sigma1(),
                vertices: g.vertex_count(),
                edges: g.edges.len(),
                masses,
                pinches: None,
                self_loops: None,
                duplicates: None,
            };
            io::write_json(&dir.join("summary.json"), &summary)?;
        }
        Mode::Markov => {
            let rule = match a.empty_epochs {
                Some(count) => StopRule::EmptyEpochs { count, horizon: a.horizon },
                None => StopRule::Horizon(a.horizon),
            };
            let trace = simulate_markov(&w, rule, &mut stream(seed, 0, Purpose::Arrivals)).map_err(run_err)?;
            let col = color_blue_red(&trace).map_err(run_err)?;
            let report = verify_embedding(&trace, &col);
            io::write_trace_csv(&dir.join("trace.csv"), &trace.events)?;
            io::write_json(&dir.join("forest.json"), &gw_forest_stats(&trace))?;
            io::write_json(&dir.join("identities.json"), &report)?;
            return Ok(report.passed());
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    replicas: u64,
    weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identities: Option<IdentitySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    masses: Option<MassSummary>,
    pass: bool,
}

#[derive(Serialize)]
struct IdentitySummary {
    /// Worst case over replicas, per identity.
    worst: std::collections::BTreeMap<String, crate::markov_coder::IdentityCheck>,
    failed_replicas: Vec<u64>,
    replicas: Vec<IdentityReport>,
}

#[derive(Serialize)]
struct MassSummary {
    /// Replicas where the excursions lose or double-count mass, or a
    /// component mass differs from its excursion mass.
    failed_replicas: Vec<u64>,
    /// Largest `|Σ ζ_k − σ_1|` of the rounded masses, in ulps of `σ_1`.
    max_rounded_gap_ulps: f64,
}

/// Identity reports of `replicas` Markov runs with `EmptyEpochs{count, horizon}`.
pub fn identity_replicas(
    w: &WeightSeq,
    seed: u64,
    replicas: u64,
    count: usize,
    horizon: f64,
) -> Result<Vec<IdentityReport>, CliError> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rule = StopRule::EmptyEpochs { count, horizon };
            let trace = simulate_markov(w, rule, &mut stream(seed, r, Purpose::Arrivals)).map_err(run_err)?;
            let col = color_blue_red(&trace).map_err(run_err)?;
            Ok(verify_embedding(&trace, &col))
        })
        .collect()
}

/// Mass conservation in one LIFO replica.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassCheck {
    /// The excursions partition the clients and their masses add up to `σ_1`.
    pub balance: MassBalance,
    /// Component masses coincide bitwise, as a multiset, with the excursion masses.
    pub components_match: bool,
}

impl MassCheck {
    pub fn holds(&self) -> bool {
        self.balance.holds() && self.components_match
    }
}

/// Mass-conservation check of one LIFO replica: the busy periods carry all
/// of `σ_1` (see [`mass_balance`]) and each graph component weighs exactly
/// as much as its excursion.
pub fn mass_conservation(w: &WeightSeq, seed: u64, r: u64) -> Result<MassCheck, CliError> {
    let trace = simulate_lifo(w, &mut stream(seed, r, Purpose::Arrivals));
    let pinches = sample_pinches(&trace, &mut stream(seed, r, Purpose::Pinches));
    let g = assemble_graph(&trace, &pinches).map_err(run_err)?;
    let dec = excursions_of_path(&trace.path);
    let comps = connected_components(&g, OrderBy::Mass);
    let mut comp_masses: Vec<f64> = comps.iter().map(|c| c.mass).collect();
    comp_masses.sort_by(|a, b| b.total_cmp(a));
    Ok(MassCheck { balance: mass_balance(&trace.path, &dec, w.sigma1()), components_match: comp_masses == dec.masses() })
}

fn verify(a: &VerifyArgs) -> Result<bool, CliError> {
    if !a.identities && !a.masses {
        return Err(CliError::Usage("verify needs --identities and/or --masses".into()));
    }
    let w = io::read_weights(&a.weights)?;
    let dir = out_dir(&a.common.out)?;
    let seed = a.common.seed;
    let identities = if a.identities {
        let reports = identity_replicas(&w, seed, a.replicas, a.empty_epochs, a.horizon)?;
        let mut worst = std::collections::BTreeMap::new();
        for rep in &reports {
            for (name, c) in &rep.checks {
                let e = worst.entry(name.clone()).or_insert(*c);
                e.pass &= c.pass;
                e.max_abs_err = e.max_abs_err.max(c.max_abs_err);
                e.n_points = e.n_points.max(c.n_points);
            }
        }
        let failed_replicas = (0..a.replicas).filter(|&r| !reports[r as usize].passed()).collect();
        Some(IdentitySummary { worst, failed_replicas, replicas: reports })
    } else {
        None
    };
    let masses = if a.masses {
        let results: Vec<MassCheck> =
            (0..a.replicas).into_par_iter().map(|r| mass_conservation(&w, seed, r)).collect::<Result<_, _>>()?;
        Some(MassSummary {
            failed_replicas: (0..a.replicas).filter(|&r| !results[r as usize].holds()).collect(),
            max_rounded_gap_ulps: results.iter().map(|x| x.balance.rounded_gap_ulps).fold(0.0, f64::max),
        })
    } else {
        None
    };
    let pass = identities.as_ref().is_none_or(|s| s.failed_replicas.is_empty())
        && masses.as_ref().is_none_or(|s| s.failed_replicas.is_empty());
    let report = VerifyReport { seed, replicas: a.replicas, weights: w.as_slice().to_vec(), identities, masses, pass };
    io::write_json(&dir.join("verify.json"), &report)?;
    println!("verify: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn scaling(a: &ScalingArgs) -> Result<bool, CliError> {
    let dir = out_dir(&a.out)?;
    let family: Vec<ScalingTriple> = a
        .sizes
        .iter()
        .map(|&n| match a.family {
            Family::Er => gen_er_triple(n, -(-a.er_weight / n as f64).exp_m1()),
            Family::Powerlaw => gen_powerlaw_triple(n, a.rho, a.q, a.kappa, a.alpha),
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let limit: LimitParams = match &a.limit {
        Some(p) => io::read_limit(p)?,
        None => family
            .last()
            .and_then(|t| t.limit.clone())
            .ok_or_else(|| CliError::Usage("no limit parameters: pass --limit".into()))?,
    };
    let report = check_regime(&family, &limit, &a.y_grid).map_err(run_err)?;
    io::write_regime_csv(&dir.join("regime.csv"), &report)?;
    io::write_json(&dir.join("regime.json"), &report)?;
    if let Ok(psi) = psi_report(&limit) {
        io::write_json(&dir.join("psi.json"), &psi)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct MetricSummary {
    seed: u64,
    eps: f64,
    clients: usize,
    pinches: usize,
    /// Same-component pairs whose pinched distance differs from the graph hop distance.
    hop_mismatches: usize,
}

fn metric(a: &MetricArgs) -> Result<bool, CliError> {
    let w = io::read_weights(&a.weights)?;
    let dir = out_dir(&a.common.out)?;
    let seed = a.common.seed;
    let trace = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
    let pinches = sample_pinches(&trace, &mut stream(seed, 0, Purpose::Pinches));
    let g = assemble_graph(&trace, &pinches).map_err(run_err)?;
    let space = lifo_coded_space(&trace, &pinches, a.eps).map_err(run_err)?;
    let tree: Vec<Vec<f64>> =
        space.samples.iter().map(|&s| space.samples.iter().map(|&t| tree_distance(&space.h, s, t)).collect()).collect();
    let pinched = pinched_matrix(&space);
    let hops = all_pairs_hops(&g);
    let hop_mismatches = (0..hops.len())
        .flat_map(|i| (0..hops.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| hops[i][j] != UNREACHABLE && pinched[i][j] != hops[i][j] as f64)
        .count();
    io::write_matrix_csv(&dir.join("tree_distances.csv"), &space.samples, &tree)?;
    io::write_matrix_csv(&dir.join("pinched_distances.csv"), &space.samples, &pinched)?;
    io::write_pinches_csv(&dir.join("pinches.csv"), &pinches)?;
    io::write_edges_csv(&dir.join("edges.csv"), &g)?;
    let summary = MetricSummary { seed, eps: a.eps, clients: trace.client_count(), pinches: pinches.len(), hop_mismatches };
    io::write_json(&dir.join("metric.json"), &summary)?;
    // With unit shortcuts the pinched space must be the graph itself.
    Ok(a.eps != 1.0 || hop_mismatches == 0)
}

#[derive(Serialize)]
struct ContinuumSummary {
    seed: u64,
    params: LimitParams,
    aldous_limic: (f64, f64, Vec<f64>),
    horizon: f64,
    dt: f64,
    truncation: usize,
    truncation_bound: f64,
    /// Top masses of each replica.
    masses: Vec<Vec<f64>>,
}

fn continuum(a: &ContinuumArgs) -> Result<bool, CliError> {
    let p = io::read_limit(&a.limit)?;
    let dir = out_dir(&a.common.out)?;
    let seed = a.common.seed;
    let dt = a.dt.unwrap_or(DEFAULT_DT_FRACTION * a.horizon);
    let truncation = choose_truncation(&p, a.horizon, TRUNCATION_TARGET);
    let paths: Vec<_> = (0..a.replicas.max(1))
        .into_par_iter()
        .map(|r| simulate_limit_y(&p, dt, a.horizon, truncation, &mut stream(seed, r, Purpose::Continuum)))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let masses: Vec<Vec<f64>> = paths.iter().map(|g| limit_masses(g, a.topk)).collect();
    io::write_grid_csv(&dir.join("grid.csv"), &paths[0])?;
    io::write_masses_csv(&dir.join("masses.csv"), &masses[0])?;
    let summary = ContinuumSummary {
        seed,
        aldous_limic: aldous_limic_params(&p),
        params: p,
        horizon: a.horizon,
        dt,
        truncation,
        truncation_bound: paths[0].truncation_bound,
        masses,
    };
    io::write_json(&dir.join("continuum.json"), &summary)?;
    Ok(true)
}

fn compare(a: &CompareArgs) -> Result<bool, CliError> {
    let w = io::read_weights(&a.weights)?;
    let dir = out_dir(&a.common.out)?;
    let law = if a.exp_law { EdgeFn::Exp } else { a.edge_law };
    let report = edge_marginal_compare(&w, law, a.replicas, a.common.seed).map_err(run_err)?;
    io::write_json(&dir.join("compare.json"), &report)?;
    let text = report.summary();
    std::fs::write(dir.join("compare.txt"), &text)
        .map_err(|source| IoError::File { path: dir.join("compare.txt").display().to_string(), source })?;
    print!("{text}");
    Ok(report.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<String> {
        std::iter::once("wmgraph").chain(v.iter().copied()).map(String::from).collect()
    }

    #[test]
    fn compare_accepts_the_law_flag_alias() {
        let parse = |v: &[&str]| Cli::try_parse_from(args(v));
        let cli = parse(&["compare", "--theorem21", "--weights", "w.json", "--replicas", "10"]).unwrap();
        assert!(matches!(cli.command, Command::Compare(CompareArgs { exp_law: true, .. })));
        assert!(parse(&["compare", "--exp-law", "--weights", "w.json"]).is_ok());
        assert!(parse(&["compare", "--exp-law", "--edge-law", "cap", "--weights", "w.json"]).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(dispatch(args(&["frobnicate"])), 2);
        assert_eq!(dispatch(args(&["simulate", "--bogus"])), 2);
        assert_eq!(dispatch(args(&[])), 2);
    }

    #[test]
    fn missing_input_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let missing = dir.path().join("none.json");
        let code = dispatch(args(&[
            "simulate",
            "--weights",
            missing.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 2);
    }

    #[test]
    fn verify_requires_a_check() {
        let dir = tempfile::tempdir().unwrap();
        let w = dir.path().join("w.json");
        std::fs::write(&w, "[1.0]").unwrap();
        assert_eq!(dispatch(args(&["verify", "--weights", w.to_str().unwrap()])), 2);
    }
}
