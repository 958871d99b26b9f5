//! Statistics for certifying equalities in law: Pearson chi-square tests
//! with cell merging, the two-sample Kolmogorov–Smirnov test, binomial
//! bands, and the comparison of directly sampled graphs with graphs
//! assembled from the LIFO queue.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::direct_graph::{sample_direct, AssembledGraph, EdgeFn};
use crate::lifo_coder::{assemble_graph, sample_pinches, simulate_lifo, LifoError};
use crate::rng::{stream, Purpose};
use crate::weights::WeightSeq;

/// Minimum expected count per retained chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Family-wise significance level used by the acceptance checks.
pub const FAMILY_ALPHA: f64 = 1e-3;

/// Width of the binomial bands, in standard deviations.
pub const BAND_SIGMAS: f64 = 4.0;

/// Largest vertex count for which the full-graph distribution is compared.
pub const FULL_GRAPH_MAX_VERTICES: usize = 5;

/// Largest vertex count accepted by [`graph_code`].
pub const GRAPH_CODE_MAX_VERTICES: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    #[error("counts and probabilities have different lengths ({0} vs {1})")]
    Length(usize, usize),
    #[error("probabilities must be nonnegative and sum to 1 (sum {0})")]
    BadProbs(f64),
    #[error("fewer than two cells remain after merging")]
    Degenerate,
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Lifo(#[from] LifoError),
}

/// Result of a Pearson chi-square test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    /// Number of cells after merging.
    pub cells: usize,
}

impl ChiSquare {
    fn from_statistic(statistic: f64, cells: usize) -> Self {
        let dof = cells - 1;
        let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(statistic);
        Self { statistic, p_value, dof, cells }
    }
}

/// Groups consecutive cells left to right until each group's `weight`
/// reaches `min`; a short remainder joins the last complete group.
/// Returns the group boundaries as index ranges.
fn merge_groups(weight: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let (mut start, mut acc) = (0, 0.0);
    for (k, &x) in weight.iter().enumerate() {
        acc += x;
        if acc >= min {
            groups.push(start..k + 1);
            start = k + 1;
            acc = 0.0;
        }
    }
    if start < weight.len() {
        match groups.last_mut() {
            Some(last) => last.end = weight.len(),
            None => groups.push(start..weight.len()),
        }
    }
    groups
}

/// Pearson goodness-of-fit test of `counts` against `probs`, after merging
/// cells left to right until every expected count is at least 5.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquare, StatError> {
    if counts.len() != probs.len() {
        return Err(StatError::Length(counts.len(), probs.len()));
    }
    let total_p: f64 = probs.iter().sum();
    if probs.iter().any(|&p| !(p >= 0.0)) || (total_p - 1.0).abs() > 1e-9 {
        return Err(StatError::BadProbs(total_p));
    }
    let n: u64 = counts.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|&p| p * n as f64).collect();
    let groups = merge_groups(&expected, MIN_EXPECTED);
    if groups.len() < 2 {
        return Err(StatError::Degenerate);
    }
    let statistic = groups
        .iter()
        .map(|g| {
            let o: u64 = counts[g.clone()].iter().sum();
            let e: f64 = expected[g.clone()].iter().sum();
            (o as f64 - e).powi(2) / e
        })
        .sum();
    Ok(ChiSquare::from_statistic(statistic, groups.len()))
}

/// Chi-square test that two histograms on the same cells come from one
/// distribution (2×k homogeneity table).  Cells are merged left to right
/// until both expected counts of every group are at least 5.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare, StatError> {
    if a.len() != b.len() {
        return Err(StatError::Length(a.len(), b.len()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(StatError::EmptySample);
    }
    let n = na + nb;
    // Smaller row's expected count decides whether a group is large enough.
    let share = na.min(nb) / n;
    let pooled: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| (x + y) as f64 * share).collect();
    let groups = merge_groups(&pooled, MIN_EXPECTED);
    if groups.len() < 2 {
        return Err(StatError::Degenerate);
    }
    let statistic = groups
        .iter()
        .map(|g| {
            let oa = a[g.clone()].iter().sum::<u64>() as f64;
            let ob = b[g.clone()].iter().sum::<u64>() as f64;
            let col = oa + ob;
            let (ea, eb) = (na * col / n, nb * col / n);
            (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb
        })
        .sum();
    Ok(ChiSquare::from_statistic(statistic, groups.len()))
}

/// Result of a two-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Kolmogorov distribution tail `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2 j² λ²}`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test: `D = sup |F_a − F_b|` with the asymptotic p-value
/// `Q((√m + 0.12 + 0.11/√m) D)`, `m = n_a n_b/(n_a + n_b)` (Stephens' correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsTest, StatError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let m = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_tail((m + 0.12 + 0.11 / m) * d);
    Ok(KsTest { statistic: d, p_value, n_a: a.len(), n_b: b.len() })
}

/// Per-test level for a family of `tests` tests at family-wise level `alpha`.
pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}

/// Standardised deviation of `successes / trials` from `p`.
pub fn binomial_z(successes: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let sd = (p * (1.0 - p) / n).sqrt();
    let diff = successes as f64 / n - p;
    if sd == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY.copysign(diff) }
    } else {
        diff / sd
    }
}

/// Distribution of the number of successes among independent Bernoulli(`p_i`) trials.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &x) in pmf.iter().enumerate() {
            next[k] += x * (1.0 - p);
            next[k + 1] += x * p;
        }
        pmf = next;
    }
    pmf
}

/// Index of the pair `u < v` (1-based vertices) in the lexicographic list of pairs.
fn pair_index(n: usize, u: usize, v: usize) -> usize {
    (u - 1) * (2 * n - u) / 2 + (v - u - 1)
}

/// Bit code of a graph on at most 12 vertices (bit `pair_index(u, v)` per edge).
pub fn graph_code(g: &AssembledGraph) -> u128 {
    let n = g.vertex_count();
    assert!(n <= GRAPH_CODE_MAX_VERTICES, "graph code limited to {GRAPH_CODE_MAX_VERTICES} vertices");
    g.edges.iter().fold(0u128, |acc, &(u, v)| acc | (1u128 << pair_index(n, u, v)))
}

/// One vertex pair's edge frequencies in the two constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMarginal {
    pub u: usize,
    pub v: usize,
    /// `h(w_u w_v / σ_1)`.
    pub p_theory: f64,
    pub freq_direct: f64,
    pub freq_lifo: f64,
    pub z_direct: f64,
    pub z_lifo: f64,
    /// `(freq_direct − freq_lifo) / √(2p(1−p)/R)`.
    pub z_diff: f64,
    /// All three deviations within the band.
    pub pass: bool,
}

/// Edge-count histograms of the two constructions and their tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCountComparison {
    pub direct: Vec<u64>,
    pub lifo: Vec<u64>,
    /// Exact distribution of the edge count under independent edges.
    pub theory: Vec<f64>,
    pub two_sample: Option<ChiSquare>,
    pub gof_direct: Option<ChiSquare>,
    pub gof_lifo: Option<ChiSquare>,
}

/// Report of [`edge_marginal_compare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub weights: Vec<f64>,
    pub edge_fn: EdgeFn,
    pub replicas: u64,
    pub seed: u64,
    pub band_sigmas: f64,
    pub family_alpha: f64,
    /// Per-test level of the chi-square family (Bonferroni).
    pub test_alpha: f64,
    pub marginals: Vec<EdgeMarginal>,
    pub edge_count: EdgeCountComparison,
    /// Two-sample test over all graphs, when there are at most five vertices.
    pub full_graph: Option<ChiSquare>,
    /// Number of distinct graphs observed (full-graph comparison only).
    pub distinct_graphs: usize,
    pub lifo_self_loops: u64,
    pub lifo_duplicates: u64,
    pub marginals_pass: bool,
    pub chi_square_pass: bool,
    pub pass: bool,
}

impl CompareReport {
    /// Fixed-width human summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "weights {:?}  edge law {:?}  replicas {}  seed {}\n{:>4} {:>4} {:>10} {:>10} {:>10} {:>8} {:>8} {:>8}  ok\n",
            self.weights, self.edge_fn, self.replicas, self.seed, "u", "v", "p", "direct", "lifo", "z_dir", "z_lifo", "z_diff"
        );
        for m in &self.marginals {
            s += &format!(
                "{:>4} {:>4} {:>10.6} {:>10.6} {:>10.6} {:>8.3} {:>8.3} {:>8.3}  {}\n",
                m.u,
                m.v,
                m.p_theory,
                m.freq_direct,
                m.freq_lifo,
                m.z_direct,
                m.z_lifo,
                m.z_diff,
                if m.pass { "yes" } else { "NO" }
            );
        }
        let fmt = |name: &str, c: &Option<ChiSquare>| match c {
            Some(c) => format!("{name:<22} stat {:>10.4}  dof {:>4}  p {:.4e}\n", c.statistic, c.dof, c.p_value),
            None => format!("{name:<22} (not applicable)\n"),
        };
        s += &fmt("edge count two-sample", &self.edge_count.two_sample);
        s += &fmt("edge count vs theory D", &self.edge_count.gof_direct);
        s += &fmt("edge count vs theory L", &self.edge_count.gof_lifo);
        s += &fmt("full graph two-sample", &self.full_graph);
        s += &format!(
            "per-test level {:.2e}; marginals {}; chi-square {}; overall {}\n",
            self.test_alpha,
            verdict(self.marginals_pass),
            verdict(self.chi_square_pass),
            verdict(self.pass)
        );
        s
    }
}

fn verdict(b: bool) -> &'static str {
    if b { "PASS" } else { "FAIL" }
}

/// LIFO-assembled graph of replica `r`.
pub fn lifo_graph(w: &WeightSeq, seed: u64, r: u64) -> Result<AssembledGraph, LifoError> {
    let trace = simulate_lifo(w, &mut stream(seed, r, Purpose::Arrivals));
    let pinches = sample_pinches(&trace, &mut stream(seed, r, Purpose::Pinches));
    assemble_graph(&trace, &pinches)
}

/// Directly sampled graph of replica `r`.
pub fn direct_graph(w: &WeightSeq, edge_fn: EdgeFn, seed: u64, r: u64) -> AssembledGraph {
    sample_direct(w, edge_fn, &mut stream(seed, r, Purpose::EdgeCoins))
}

/// Per-replica summary kept for aggregation.
struct Sample {
    edges: Vec<(usize, usize)>,
    code: Option<u128>,
    self_loops: usize,
    duplicates: usize,
}

impl Sample {
    fn of(g: &AssembledGraph, full: bool) -> Self {
        Self {
            code: full.then(|| graph_code(g)),
            edges: g.edges.clone(),
            self_loops: g.self_loops,
            duplicates: g.duplicates,
        }
    }
}

/// Runs `replicas` direct samples (edge law `edge_fn`) and `replicas`
/// LIFO-assembled samples, and compares (a) every edge frequency with the
/// band `h(w_u w_v/σ_1) ± 4σ` and with each other, (b) the edge-count
/// histograms with each other and with the exact law, and (c) for at most
/// five vertices, the full graph distributions with each other.  The
/// chi-square tests form one family at level [`FAMILY_ALPHA`].
pub fn edge_marginal_compare(w: &WeightSeq, edge_fn: EdgeFn, replicas: u64, seed: u64) -> Result<CompareReport, StatError> {
    if replicas == 0 {
        return Err(StatError::EmptySample);
    }
    let n = w.j_max();
    let full = n <= FULL_GRAPH_MAX_VERTICES;
    let direct: Vec<Sample> =
        (0..replicas).into_par_iter().map(|r| Sample::of(&direct_graph(w, edge_fn, seed, r), full)).collect();
    let lifo: Vec<Sample> = (0..replicas)
        .into_par_iter()
        .map(|r| lifo_graph(w, seed, r).map(|g| Sample::of(&g, full)))
        .collect::<Result<_, _>>()?;

    let pairs = n * (n - 1) / 2;
    let count_edges = |samples: &[Sample]| {
        let mut per_pair = vec![0u64; pairs];
        let mut hist = vec![0u64; pairs + 1];
        for s in samples {
            for &(u, v) in &s.edges {
                per_pair[pair_index(n, u, v)] += 1;
            }
            hist[s.edges.len()] += 1;
        }
        (per_pair, hist)
    };
    let (pair_d, hist_d) = count_edges(&direct);
    let (pair_l, hist_l) = count_edges(&lifo);

    let ws = w.as_slice();
    let sigma1 = w.sigma1();
    let mut marginals = Vec::with_capacity(pairs);
    let mut probs = Vec::with_capacity(pairs);
    for u in 1..n {
        for v in u + 1..=n {
            let p = edge_fn.prob(ws[u - 1] * ws[v - 1] / sigma1);
            probs.push(p);
            let k = pair_index(n, u, v);
            let z_direct = binomial_z(pair_d[k], replicas, p);
            let z_lifo = binomial_z(pair_l[k], replicas, p);
            let sd_diff = (2.0 * p * (1.0 - p) / replicas as f64).sqrt();
            let diff = (pair_d[k] as f64 - pair_l[k] as f64) / replicas as f64;
            let z_diff = if sd_diff == 0.0 {
                if diff == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                diff / sd_diff
            };
            let pass = [z_direct, z_lifo, z_diff].iter().all(|z| z.abs() <= BAND_SIGMAS);
            marginals.push(EdgeMarginal {
                u,
                v,
                p_theory: p,
                freq_direct: pair_d[k] as f64 / replicas as f64,
                freq_lifo: pair_l[k] as f64 / replicas as f64,
                z_direct,
                z_lifo,
                z_diff,
                pass,
            });
        }
    }

    let theory = poisson_binomial_pmf(&probs);
    // Degenerate tables (e.g. a single vertex) carry no information and are skipped.
    let two_sample = chi_square_two_sample(&hist_d, &hist_l).ok();
    let gof_direct = chi_square_gof(&hist_d, &theory).ok();
    let gof_lifo = chi_square_gof(&hist_l, &theory).ok();

    let (full_graph, distinct_graphs) = if full {
        let mut codes: Vec<u128> = direct.iter().chain(&lifo).filter_map(|s| s.code).collect();
        codes.sort_unstable();
        codes.dedup();
        let mut a = vec![0u64; codes.len()];
        let mut b = vec![0u64; codes.len()];
        for (samples, out) in [(&direct, &mut a), (&lifo, &mut b)] {
            for s in samples.iter() {
                let c = s.code.expect("coded");
                out[codes.binary_search(&c).expect("observed code")] += 1;
            }
        }
        (chi_square_two_sample(&a, &b).ok(), codes.len())
    } else {
        (None, 0)
    };

    let tests = [&two_sample, &gof_direct, &gof_lifo, &full_graph];
    let test_alpha = bonferroni(FAMILY_ALPHA, tests.iter().filter(|t| t.is_some()).count());
    let chi_square_pass = tests.iter().all(|t| t.as_ref().is_none_or(|c| c.p_value >= test_alpha));
    let marginals_pass = marginals.iter().all(|m| m.pass);
    Ok(CompareReport {
        weights: ws.to_vec(),
        edge_fn,
        replicas,
        seed,
        band_sigmas: BAND_SIGMAS,
        family_alpha: FAMILY_ALPHA,
        test_alpha,
        marginals,
        edge_count: EdgeCountComparison { direct: hist_d, lifo: hist_l, theory, two_sample, gof_direct, gof_lifo },
        full_graph,
        distinct_graphs,
        lifo_self_loops: lifo.iter().map(|s| s.self_loops as u64).sum(),
        lifo_duplicates: lifo.iter().map(|s| s.duplicates as u64).sum(),
        marginals_pass,
        chi_square_pass,
        pass: marginals_pass && chi_square_pass,
    })
}
