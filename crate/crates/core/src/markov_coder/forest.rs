//! The Galton–Watson forest explored by the Markov queue: offspring law,
//! generation-wise simulation, and the Lukasiewicz / height / contour codings.

use rand::Rng;
use rand_distr::{Distribution, Exp1, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::MarkovTrace;
use crate::weights::WeightSeq;

/// `μ_w(k) = Σ_j w_j^{k+1} e^{−w_j} / (σ_1 k!)`: a client's type is drawn
/// from `ν_w` and its children form a Poisson(`w_J`) count.
pub fn mu_w_pmf(w: &WeightSeq, k: u64) -> f64 {
    let lf = ln_factorial(k);
    let s: f64 = w.as_slice().iter().map(|&x| ((k + 1) as f64 * x.ln() - x - lf).exp()).sum();
    s / w.sigma1()
}

/// Offspring sampler following the tree construction: a vertex gets a type
/// `J ~ ν_w` and as many children as a unit-rate Poisson set has points in
/// `[0, w_J]` (generated from exponential spacings).
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    weights: Vec<f64>,
    types: WeightedIndex<f64>,
}

impl OffspringLaw {
    pub fn new(w: &WeightSeq) -> Self {
        Self { weights: w.as_slice().to_vec(), types: WeightedIndex::new(w.as_slice()).expect("positive weights") }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let horizon = self.weights[self.types.sample(rng)];
        let mut t: f64 = Exp1.sample(rng);
        let mut k = 0;
        while t <= horizon {
            k += 1;
            let gap: f64 = Exp1.sample(rng);
            t += gap;
        }
        k
    }
}

/// Offspring counts of the first `vertices` vertices of a GW(`μ_w`) forest
/// explored generation by generation (breadth first).  Every explored vertex
/// reports its full offspring count, so the sample is unbiased even when the
/// forest is supercritical.
pub fn gw_offspring_sample<R: Rng + ?Sized>(w: &WeightSeq, vertices: usize, rng: &mut R) -> Vec<u64> {
    let law = OffspringLaw::new(w);
    let mut out = Vec::with_capacity(vertices);
    // Number of vertices waiting in the current generation queue; a new tree
    // is started whenever the queue is empty.
    let mut pending: u64 = 0;
    while out.len() < vertices {
        if pending == 0 {
            pending = 1;
        }
        let k = law.sample(rng);
        out.push(k);
        pending = pending - 1 + k;
    }
    out
}

/// Galton–Watson chain `Z_0, …, Z_generations` with offspring law `μ_w`.
pub fn gw_generations<R: Rng + ?Sized>(w: &WeightSeq, z0: u64, generations: usize, rng: &mut R) -> Vec<u64> {
    let law = OffspringLaw::new(w);
    let mut z = Vec::with_capacity(generations + 1);
    z.push(z0);
    for _ in 0..generations {
        let last = *z.last().expect("nonempty");
        z.push((0..last).map(|_| law.sample(rng)).sum());
    }
    z
}

/// Contour of the explored forest, built from the parent links: the depth
/// after each unit step of the walk that visits clients in arrival order
/// (the lexicographic order of the forest) and returns to the server after
/// each client that has departed.
pub fn forest_contour(trace: &MarkovTrace) -> Vec<u32> {
    contour_walk(trace).into_iter().map(|(_, d)| d).collect()
}

/// The contour walk as a sequence of `(vertex, depth)`; vertex 0 is the server.
fn contour_walk(trace: &MarkovTrace) -> Vec<(usize, u32)> {
    let mut walk = vec![(0usize, 0u32)];
    let mut path: Vec<usize> = Vec::new(); // current vertex's ancestry, server excluded
    for k in 1..=trace.client_count() {
        let p = trace.parent[k - 1];
        while path.last().is_some_and(|&top| top != p) {
            path.pop();
            walk.push((path.last().copied().unwrap_or(0), path.len() as u32));
        }
        path.push(k);
        walk.push((k, path.len() as u32));
    }
    while let Some(&top) = path.last() {
        if trace.departure[top - 1].is_none() {
            break;
        }
        path.pop();
        walk.push((path.last().copied().unwrap_or(0), path.len() as u32));
    }
    walk
}

/// Codings of the explored forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwForestStats {
    /// Clients whose offspring count is final (they departed), as a prefix
    /// of the arrival order.
    pub complete_prefix: usize,
    /// Lukasiewicz path `V_0 = 0, V_{l+1} = V_l + k_{l+1} − 1` over the prefix.
    pub lukasiewicz: Vec<i64>,
    /// `Hght_l = |u_{l+1}| − 1` from depths, `l < complete_prefix`.
    pub height: Vec<u32>,
    /// Heights recomputed from `V` alone.
    pub height_from_lukasiewicz: Vec<u32>,
    /// Contour depths along the walk.
    pub contour: Vec<u32>,
    /// Number of walk positions at each vertex (index 0 is the server).
    pub contour_visits: Vec<u32>,
    /// Degree in the explored forest (index 0 is the server).
    pub degree: Vec<u32>,
    /// `hist[k]` = complete-prefix clients with `k` children.
    pub offspring_histogram: Vec<u64>,
    /// Sizes of the trees completed during the run.
    pub tree_sizes: Vec<usize>,
}

/// Heights from a Lukasiewicz path: `Hght_l = #{m < l : V_m = min_{m≤j≤l} V_j}`.
pub fn height_from_lukasiewicz(v: &[i64]) -> Vec<u32> {
    let mut stack: Vec<i64> = Vec::new();
    let mut out = Vec::with_capacity(v.len());
    for &x in v {
        while stack.last().is_some_and(|&top| top > x) {
            stack.pop();
        }
        out.push(stack.len() as u32);
        stack.push(x);
    }
    out
}

/// Computes the forest codings of a Markov trace.
pub fn gw_forest_stats(trace: &MarkovTrace) -> GwForestStats {
    let n = trace.client_count();
    let complete_prefix = trace.departure.iter().position(Option::is_none).unwrap_or(n);
    let mut lukasiewicz = vec![0i64];
    for k in 0..complete_prefix {
        lukasiewicz.push(lukasiewicz[k] + i64::from(trace.children[k]) - 1);
    }
    let height: Vec<u32> = (0..complete_prefix).map(|l| trace.depth[l] - 1).collect();
    let mut height_from_v = height_from_lukasiewicz(&lukasiewicz);
    height_from_v.truncate(complete_prefix);
    let walk = contour_walk(trace);
    let mut contour_visits = vec![0u32; n + 1];
    for &(v, _) in &walk {
        contour_visits[v] += 1;
    }
    let mut degree = vec![0u32; n + 1];
    for k in 1..=n {
        degree[k] += 1;
        degree[trace.parent[k - 1]] += 1;
    }
    let mut offspring_histogram = Vec::new();
    for &c in &trace.children[..complete_prefix] {
        let c = c as usize;
        if offspring_histogram.len() <= c {
            offspring_histogram.resize(c + 1, 0);
        }
        offspring_histogram[c] += 1;
    }
    let mut tree_sizes = Vec::new();
    for k in 0..n {
        if trace.parent[k] == 0 && trace.departure[k].is_some() {
            let end = (k + 1..n).find(|&j| trace.parent[j] == 0).unwrap_or(n);
            tree_sizes.push(end - k);
        }
    }
    GwForestStats {
        complete_prefix,
        lukasiewicz,
        height,
        height_from_lukasiewicz: height_from_v,
        contour: walk.into_iter().map(|(_, d)| d).collect(),
        contour_visits,
        degree,
        offspring_histogram,
        tree_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{simulate_markov_with_arrivals, StopRule};
    use super::*;
    use crate::rng::{stream, Purpose};

    fn w(v: &[f64]) -> WeightSeq {
        WeightSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn offspring_pmf_examples() {
        let one = w(&[1.0]);
        assert!((mu_w_pmf(&one, 0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((mu_w_pmf(&one, 3) - (-1.0f64).exp() / 6.0).abs() < 1e-15);
        let ws = w(&[2.0, 1.0, 1.0]);
        let total: f64 = (0..60).map(|k| mu_w_pmf(&ws, k)).sum();
        let mean: f64 = (0..60).map(|k| k as f64 * mu_w_pmf(&ws, k)).sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!((mean - 1.5).abs() < 1e-13);
    }

    #[test]
    fn lukasiewicz_examples() {
        // Single root, no children.
        assert_eq!(height_from_lukasiewicz(&[0, -1]), vec![0, 0]);
        // Root with two leaf children: V = (0, 1, 0, −1), Hght = (0, 1, 1).
        assert_eq!(&height_from_lukasiewicz(&[0, 1, 0, -1])[..3], &[0, 1, 1]);
    }

    #[test]
    fn forest_of_forced_trace() {
        // Client 1 with two children (2, 3) that arrive during its service.
        let ws = w(&[2.0, 0.5]);
        let arr = [(0.1, 1), (0.3, 2), (1.5, 2)];
        let tr = simulate_markov_with_arrivals(&ws, &arr, StopRule::Horizon(10.0)).unwrap();
        assert_eq!(tr.parent, vec![0, 1, 1]);
        let st = gw_forest_stats(&tr);
        assert_eq!(st.complete_prefix, 3);
        assert_eq!(st.lukasiewicz, vec![0, 1, 0, -1]);
        assert_eq!(st.height, vec![0, 1, 1]);
        assert_eq!(st.height_from_lukasiewicz, st.height);
        assert_eq!(st.contour, vec![0, 1, 2, 1, 2, 1, 0]);
        assert_eq!(st.contour_visits, vec![2, 3, 1, 1]);
        assert_eq!(st.degree, vec![1, 3, 1, 1]);
        assert_eq!(st.offspring_histogram, vec![2, 0, 1]);
        assert_eq!(st.tree_sizes, vec![3]);
    }

    #[test]
    fn path_tree_contour_has_four_steps() {
        let ws = w(&[2.0, 0.5]);
        let tr = simulate_markov_with_arrivals(&ws, &[(0.1, 1), (0.3, 2)], StopRule::Horizon(10.0)).unwrap();
        assert_eq!(forest_contour(&tr), vec![0, 1, 2, 1, 0]);
    }

    #[test]
    fn generation_chain_and_sampler() {
        let ws = w(&[1.0]);
        let mut rng = stream(1, 0, Purpose::Offspring);
        let z = gw_generations(&ws, 0, 5, &mut rng);
        assert_eq!(z, vec![0; 6]);
        let sample = gw_offspring_sample(&ws, 20000, &mut rng);
        let mean = sample.iter().sum::<u64>() as f64 / 20000.0;
        assert!((mean - 1.0).abs() < 4.0 * (1.0f64 / 20000.0).sqrt());
    }
}
