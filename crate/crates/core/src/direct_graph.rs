//! Direct sampling of w-multiplicative graphs by independent edge coins,
//! connected components with canonical ordering, and BFS distances.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::ExactSum;
use crate::weights::WeightSeq;

/// Above this many vertices the sampler stops enumerating all pairs.
pub const ENUMERATION_LIMIT: usize = 3000;

/// Edge probability as a function of `x = w_i w_j / σ_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFn {
    /// `1 − e^{−x}`
    Exp,
    /// `min(1, x)`
    Cap,
    /// `x / (1 + x)`
    Ratio,
}

impl EdgeFn {
    pub fn prob(self, x: f64) -> f64 {
        match self {
            EdgeFn::Exp => -(-x).exp_m1(),
            EdgeFn::Cap => x.min(1.0),
            EdgeFn::Ratio => x / (1.0 + x),
        }
    }
}

/// Which construction produced a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Direct,
    Lifo,
}

/// A simple graph on vertices `1..=j_max` carrying the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledGraph {
    pub weights: WeightSeq,
    /// Sorted unordered pairs `(u, v)` with `u < v`.
    pub edges: Vec<(usize, usize)>,
    /// Exploration rank of each vertex (index `j − 1`); smaller explored first.
    pub rank: Vec<usize>,
    pub provenance: Provenance,
    /// Pinch edges that were self-loops (always 0 for direct samples).
    pub self_loops: usize,
    /// Pinch edges already present when added (always 0 for direct samples).
    pub duplicates: usize,
}

impl AssembledGraph {
    /// Builds a graph from an edge list, collapsing duplicates.
    ///
    /// # Panics
    /// On self-loops or vertices outside `1..=j_max`, or if `rank` has the wrong length.
    pub fn from_edges(
        weights: WeightSeq,
        edges: impl IntoIterator<Item = (usize, usize)>,
        rank: Vec<usize>,
        provenance: Provenance,
    ) -> Self {
        let n = weights.j_max();
        assert_eq!(rank.len(), n, "one exploration rank per vertex");
        let set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .map(|(u, v)| {
                assert!(u != v, "self-loop {u}");
                assert!((1..=n).contains(&u) && (1..=n).contains(&v), "vertex out of range");
                (u.min(v), u.max(v))
            })
            .collect();
        Self { weights, edges: set.into_iter().collect(), rank, provenance, self_loops: 0, duplicates: 0 }
    }

    pub fn vertex_count(&self) -> usize {
        self.weights.j_max()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    /// Adjacency lists indexed by vertex id (index 0 unused).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count() + 1];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }
}

/// Samples a graph with independent edges of probability `h(w_i w_j/σ_1)`.
///
/// Up to [`ENUMERATION_LIMIT`] vertices every pair gets its own coin.  Above,
/// for each `i` the candidates `j > i` are scanned with geometric skips at the
/// current bound `p̄ = h(w_i w_{j}/σ_1)` (nonincreasing in `j` because weights
/// are sorted); a candidate `j` is then accepted with probability
/// `h(w_i w_j/σ_1)/p̄`, after which `p̄` is lowered to that value.  Each pair
/// ends up present with exactly its target probability.
pub fn sample_direct<R: Rng + ?Sized>(w: &WeightSeq, edge_fn: EdgeFn, rng: &mut R) -> AssembledGraph {
    let n = w.j_max();
    let s1 = w.sigma1();
    let ws = w.as_slice();
    let mut edges = Vec::new();
    let p_of = |i: usize, j: usize| edge_fn.prob(ws[i] * ws[j] / s1);
    if n <= ENUMERATION_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p_of(i, j) {
                    edges.push((i + 1, j + 1));
                }
            }
        }
    } else {
        for i in 0..n {
            let mut j = i + 1;
            if j >= n {
                break;
            }
            let mut bound = p_of(i, j);
            while j < n && bound > 0.0 {
                if bound < 1.0 {
                    // Number of failures before the next success of a Bernoulli(bound) sequence.
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let skip = (u.ln() / (-bound).ln_1p()).floor();
                    if skip >= (n - j) as f64 {
                        break;
                    }
                    j += skip as usize;
                }
                let p = p_of(i, j);
                if rng.random::<f64>() * bound < p {
                    edges.push((i + 1, j + 1));
                }
                bound = p;
                j += 1;
            }
        }
    }
    AssembledGraph::from_edges(w.clone(), edges, (0..n).collect(), Provenance::Direct)
}

/// Sort key for components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OrderBy {
    Mass,
    Count,
}

/// One connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentView {
    /// Member vertices, in exploration order.
    pub vertices: Vec<usize>,
    /// First-explored member.
    pub root: usize,
    /// Sum of member weights.
    pub mass: f64,
    pub count: usize,
    /// Edges among members, as positions into `vertices`.
    pub local_edges: Vec<(usize, usize)>,
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Connected components sorted nonincreasingly by `order_by`; ties go to the
/// component whose root was explored first.
pub fn connected_components(g: &AssembledGraph, order_by: OrderBy) -> Vec<ComponentView> {
    let n = g.vertex_count();
    let mut dsu = DisjointSets::new(n);
    for &(u, v) in &g.edges {
        dsu.union(u - 1, v - 1);
    }
    let mut by_rank: Vec<usize> = (1..=n).collect();
    by_rank.sort_by_key(|&v| g.rank[v - 1]);
    let mut slot = vec![usize::MAX; n];
    let mut comps: Vec<ComponentView> = Vec::new();
    let mut position = vec![0usize; n + 1];
    for v in by_rank {
        let r = dsu.find(v - 1);
        if slot[r] == usize::MAX {
            slot[r] = comps.len();
            comps.push(ComponentView { vertices: Vec::new(), root: v, mass: 0.0, count: 0, local_edges: Vec::new() });
        }
        let c = &mut comps[slot[r]];
        position[v] = c.vertices.len();
        c.vertices.push(v);
    }
    for &(u, v) in &g.edges {
        let c = &mut comps[slot[dsu.find(u - 1)]];
        c.local_edges.push((position[u], position[v]));
    }
    for c in &mut comps {
        let mut acc = ExactSum::new();
        for &v in &c.vertices {
            acc.add(g.weights.weight(v));
        }
        c.mass = acc.value();
        c.count = c.vertices.len();
    }
    // `comps` is already in root-exploration order, so a stable sort keeps the tie rule.
    match order_by {
        OrderBy::Mass => comps.sort_by(|a, b| b.mass.total_cmp(&a.mass)),
        OrderBy::Count => comps.sort_by_key(|c| std::cmp::Reverse(c.count)),
    }
    comps
}

/// Marker for unreachable pairs in a distance matrix.
pub const UNREACHABLE: u32 = u32::MAX;

/// All-pairs hop distances within a component (rows/columns follow
/// `c.vertices`), by one BFS per source.
pub fn graph_distances(c: &ComponentView) -> Vec<Vec<u32>> {
    let m = c.vertices.len();
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in &c.local_edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..m).map(|s| bfs(&adj, s)).collect()
}

/// All-pairs hop distances of the whole graph, indexed by vertex id − 1.
pub fn all_pairs_hops(g: &AssembledGraph) -> Vec<Vec<u32>> {
    let adj = g.adjacency();
    (1..=g.vertex_count()).map(|s| bfs(&adj, s)[1..].to_vec()).collect()
}

/// Single-source BFS distances over adjacency lists.
pub fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if dist[y] == UNREACHABLE {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ws(v: &[f64]) -> WeightSeq {
        WeightSeq::new(v.to_vec()).unwrap()
    }

    fn graph(w: &[f64], edges: &[(usize, usize)]) -> AssembledGraph {
        let w = ws(w);
        let n = w.j_max();
        AssembledGraph::from_edges(w, edges.iter().copied(), (0..n).collect(), Provenance::Direct)
    }

    #[test]
    fn edge_function_examples() {
        let w = ws(&[2.0, 1.0, 1.0]);
        let x = w.weight(1) * w.weight(2) / w.sigma1();
        assert!((EdgeFn::Exp.prob(x) - 0.393_469_340_287_366_6).abs() < 1e-15);
        assert_eq!(EdgeFn::Cap.prob(1.0 * 1.0 / 2.0), 0.5);
        assert_eq!(EdgeFn::Cap.prob(3.0), 1.0);
        assert_eq!(EdgeFn::Ratio.prob(1.0), 0.5);
        assert!(EdgeFn::Exp.prob(1e-300) > 0.0 && EdgeFn::Exp.prob(0.0) == 0.0);
    }

    #[test]
    fn component_examples() {
        let g = graph(&[3.0, 2.0, 1.0], &[]);
        let comps = connected_components(&g, OrderBy::Mass);
        let roots: Vec<usize> = comps.iter().map(|c| c.root).collect();
        assert_eq!(roots, vec![1, 2, 3]);
        let g = graph(&[3.0, 2.0, 1.0], &[(1, 2), (2, 3), (1, 3)]);
        let comps = connected_components(&g, OrderBy::Mass);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].mass, 6.0);
        // Two components with two vertices each: {1,4} and {2,3}.
        let g = graph(&[1.0, 1.0, 1.0, 1.0], &[(2, 3), (1, 4)]);
        let comps = connected_components(&g, OrderBy::Count);
        assert_eq!(comps[0].vertices, vec![1, 4]);
        assert_eq!(comps[1].vertices, vec![2, 3]);
    }

    #[test]
    fn tie_break_follows_exploration_rank() {
        let w = ws(&[1.0, 1.0, 1.0, 1.0]);
        // Vertex 3 is explored first.
        let g = AssembledGraph::from_edges(w, [(2, 3), (1, 4)], vec![1, 2, 0, 3], Provenance::Lifo);
        let comps = connected_components(&g, OrderBy::Mass);
        assert_eq!(comps[0].root, 3);
        assert_eq!(comps[0].vertices, vec![3, 2]);
    }

    #[test]
    fn distance_examples() {
        let path = graph(&[1.0; 3], &[(1, 2), (2, 3)]);
        let c = &connected_components(&path, OrderBy::Count)[0];
        assert_eq!(graph_distances(c)[0][2], 2);
        let tri = graph(&[1.0; 3], &[(1, 2), (2, 3), (1, 3)]);
        let d = graph_distances(&connected_components(&tri, OrderBy::Count)[0]);
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x, u32::from(i != j));
            }
        }
        let cycle = graph(&[1.0; 5], &[(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)]);
        let d = graph_distances(&connected_components(&cycle, OrderBy::Count)[0]);
        assert_eq!(d[0][2], 2);
        assert_eq!(d[0][3], 2);
    }

    #[test]
    fn single_vertex_and_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_direct(&ws(&[1.0]), EdgeFn::Exp, &mut rng);
        assert!(g.edges.is_empty());
        let g = graph(&[1.0, 1.0], &[(1, 2), (2, 1)]);
        assert_eq!(g.edges, vec![(1, 2)]);
    }
}
