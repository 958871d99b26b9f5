//! Metric spaces coded by excursion functions.
//!
//! A coding function `h ≥ 0` on `[0, ζ)` defines the tree pseudometric
//! `d_h(s,t) = h(s) + h(t) − 2 min_{[s∧t, s∨t]} h`.  Pinches `(s_i, t_i)`
//! add shortcuts of length `ε ∧ d_h(s_i, t_i)`; the pinched distance is
//! the shortest path mixing tree segments and shortcuts.  This module also
//! evaluates the Gromov–Hausdorff–Prokhorov upper bound
//! `6(p+1)(‖h−h'‖_∞ + ω_δ(h)) + 3p(ε∨ε') + |ζ_h − ζ_h'|`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifo_coder::{IntStepPath, LifoTrace, PinchSetup};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("coding path needs increasing breakpoints starting at 0 and finite values")]
    BadPath,
    #[error("pinch counts differ: {0} vs {1}")]
    PinchCountMismatch(usize, usize),
    #[error("pinch {index} moves by {shift}, more than delta = {delta}")]
    DeltaViolated { index: usize, shift: f64, delta: f64 },
    #[error("negative parameter: {0}")]
    Negative(&'static str),
    #[error("time {0} lies outside the coding interval")]
    OutOfRange(f64),
}

/// Coding function on `[0, ζ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CodingPath {
    /// Right-continuous step function: `values[i]` on `[times[i], times[i+1])`,
    /// the last one up to `end = ζ`.
    Step { times: Vec<f64>, values: Vec<f64>, end: f64 },
    /// Piecewise linear interpolation of `values[k]` at `k·dt`; `ζ = (n−1)·dt`.
    Grid { dt: f64, values: Vec<f64> },
}

impl CodingPath {
    pub fn step(times: Vec<f64>, values: Vec<f64>, end: f64) -> Result<Self, MetricError> {
        let ok = !times.is_empty()
            && times.len() == values.len()
            && times[0] == 0.0
            && times.windows(2).all(|w| w[1] > w[0])
            && end >= *times.last().expect("nonempty")
            && values.iter().all(|v| v.is_finite());
        if ok { Ok(CodingPath::Step { times, values, end }) } else { Err(MetricError::BadPath) }
    }

    pub fn grid(dt: f64, values: Vec<f64>) -> Result<Self, MetricError> {
        if dt > 0.0 && dt.is_finite() && !values.is_empty() && values.iter().all(|v| v.is_finite()) {
            Ok(CodingPath::Grid { dt, values })
        } else {
            Err(MetricError::BadPath)
        }
    }

    /// Restriction of an integer step path to `[left, right)`, shifted to start at 0.
    pub fn from_int_step(h: &IntStepPath, left: f64, right: f64) -> Result<Self, MetricError> {
        let mut times = vec![0.0];
        let mut values = vec![h.value_at(left) as f64];
        for (&t, &v) in h.times.iter().zip(&h.values) {
            if t > left && t < right {
                times.push(t - left);
                values.push(v as f64);
            }
        }
        Self::step(times, values, right - left)
    }

    /// `ζ_h`.
    pub fn length(&self) -> f64 {
        match self {
            CodingPath::Step { end, .. } => *end,
            CodingPath::Grid { dt, values } => (values.len() - 1) as f64 * dt,
        }
    }

    /// Breakpoints of the representation.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CodingPath::Step { times, .. } => times.clone(),
            CodingPath::Grid { dt, values } => (0..values.len()).map(|k| k as f64 * dt).collect(),
        }
    }

    /// `h(t)`; zero outside `[0, ζ)` for step paths and outside `[0, ζ]` for grids.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            CodingPath::Step { times, values, end } => {
                if t < 0.0 || t >= *end {
                    return 0.0;
                }
                values[times.partition_point(|&s| s <= t) - 1]
            }
            CodingPath::Grid { dt, values } => {
                let x = t / dt;
                if x < 0.0 || x > (values.len() - 1) as f64 {
                    return 0.0;
                }
                let k = (x.floor() as usize).min(values.len() - 1);
                if k + 1 == values.len() {
                    return values[k];
                }
                let f = x - k as f64;
                values[k] + f * (values[k + 1] - values[k])
            }
        }
    }

    /// Left limit `h(t−)` (equals `h(t)` for grids).
    pub fn left_value(&self, t: f64) -> f64 {
        match self {
            CodingPath::Step { times, values, end } => {
                if t <= 0.0 || t > *end {
                    return 0.0;
                }
                values[times.partition_point(|&s| s < t) - 1]
            }
            CodingPath::Grid { .. } => self.value(t),
        }
    }

    /// `min_{[s, t]} h` for `0 ≤ s ≤ t` inside the domain.
    pub fn min_on(&self, s: f64, t: f64) -> f64 {
        let (s, t) = (s.min(t), s.max(t));
        match self {
            CodingPath::Step { times, values, .. } => {
                let lo = times.partition_point(|&x| x <= s) - 1;
                let hi = times.partition_point(|&x| x <= t);
                values[lo..hi].iter().copied().fold(f64::INFINITY, f64::min)
            }
            CodingPath::Grid { dt, values } => {
                let first = (s / dt).floor() as usize + 1;
                let last = ((t / dt).ceil() as usize).min(values.len());
                let inner = values.get(first..last.max(first)).unwrap_or(&[]);
                inner.iter().copied().fold(self.value(s).min(self.value(t)), f64::min)
            }
        }
    }
}

/// `d_h(s, t) = h(s) + h(t) − 2 min_{[s∧t, s∨t]} h`.
pub fn tree_distance(h: &CodingPath, s: f64, t: f64) -> f64 {
    h.value(s) + h.value(t) - 2.0 * h.min_on(s, t)
}

/// A coding path with pinches, shortcut length and sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodedSpace {
    pub h: CodingPath,
    /// Pairs `(s_i, t_i)` with `s_i ≤ t_i`.
    pub pinches: Vec<(f64, f64)>,
    pub eps: f64,
    /// Sample times.
    pub samples: Vec<f64>,
    /// Mass carried by each sample (optional, for export).
    pub sample_weights: Vec<f64>,
}

impl CodedSpace {
    pub fn new(h: CodingPath, pinches: Vec<(f64, f64)>, eps: f64, samples: Vec<f64>) -> Result<Self, MetricError> {
        if eps < 0.0 {
            return Err(MetricError::Negative("eps"));
        }
        let zeta = h.length();
        for &t in pinches.iter().flat_map(|(s, t)| [s, t]).chain(&samples) {
            if !(0.0..=zeta).contains(&t) {
                return Err(MetricError::OutOfRange(t));
            }
        }
        let n = samples.len();
        Ok(Self { h, pinches, eps, samples, sample_weights: vec![1.0; n] })
    }
}

/// The coded space of a LIFO trace: `h` is the height path on
/// `[0, last departure)`, samples are the clients' arrival times (label
/// order, so sample `j − 1` is client `j`) weighted by their total service
/// time, and the pinches are the resolved surplus pairs `(s_p, t_p)`.
pub fn lifo_coded_space(trace: &LifoTrace, pinches: &PinchSetup, eps: f64) -> Result<CodedSpace, MetricError> {
    let end = trace.departure.iter().copied().fold(0.0, f64::max);
    let h = CodingPath::from_int_step(&trace.height, 0.0, end)?;
    let pairs = pinches.pinches.iter().map(|p| (p.s.min(p.t), p.s.max(p.t))).collect();
    let mut space = CodedSpace::new(h, pairs, eps, trace.arrival.clone())?;
    space.sample_weights = trace.service.iter().map(|iv| iv.iter().map(|(a, b)| b - a).sum()).collect();
    Ok(space)
}

/// Pinched distances between the sample points: all-pairs shortest paths
/// on the complete graph over samples and pinch endpoints, with tree
/// distances on every pair and shortcut edges `ε ∧ d_h(s_i, t_i)`.
pub fn pinched_matrix(space: &CodedSpace) -> Vec<Vec<f64>> {
    let m = space.samples.len();
    let points: Vec<f64> = space.samples.iter().copied().chain(space.pinches.iter().flat_map(|&(s, t)| [s, t])).collect();
    let n = points.len();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = tree_distance(&space.h, points[i], points[j]);
            w[i][j] = d;
            w[j][i] = d;
        }
    }
    for (i, &(s, t)) in space.pinches.iter().enumerate() {
        let (a, b) = (m + 2 * i, m + 2 * i + 1);
        let d = space.eps.min(tree_distance(&space.h, s, t));
        if d < w[a][b] {
            w[a][b] = d;
            w[b][a] = d;
        }
    }
    (0..m).map(|src| dense_dijkstra(&w, src)[..m].to_vec()).collect()
}

/// Single-source shortest paths on a dense nonnegative weight matrix.
fn dense_dijkstra(w: &[Vec<f64>], src: usize) -> Vec<f64> {
    let n = w.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            break;
        };
        done[u] = true;
        for v in 0..n {
            let alt = dist[u] + w[u][v];
            if !done[v] && alt < dist[v] {
                dist[v] = alt;
            }
        }
    }
    dist
}

/// `sup_t |h(t) − h'(t)|`, both extended by 0 outside their domains,
/// evaluated at every breakpoint of either path (values and left limits).
pub fn sup_distance(h: &CodingPath, g: &CodingPath) -> f64 {
    let mut pts = h.breakpoints();
    pts.extend(g.breakpoints());
    pts.push(h.length());
    pts.push(g.length());
    pts.iter()
        .map(|&t| (h.value(t) - g.value(t)).abs().max((h.left_value(t) - g.left_value(t)).abs()))
        .fold(0.0, f64::max)
}

/// Modulus of continuity `ω_δ(h) = sup{|h(s) − h(t)| : |s − t| ≤ δ}`.
///
/// Step paths: pieces `i < j` can be `δ`-close iff the gap between them,
/// `b_j − b_{i+1}`, is strictly below `δ` (the end of piece `i` is not
/// attained); the supremum is taken over such pairs.  Grids: over grid
/// points at most `⌊δ/dt⌋` apart.
pub fn modulus(h: &CodingPath, delta: f64) -> f64 {
    match h {
        CodingPath::Step { times, values, end } => {
            let n = values.len();
            let piece_end = |i: usize| if i + 1 < n { times[i + 1] } else { *end };
            sliding_oscillation(values, |i, j| times[j] - piece_end(i) < delta || i == j)
        }
        CodingPath::Grid { dt, values } => {
            let span = (delta / dt + 1e-9).floor() as usize;
            sliding_oscillation(values, |i, j| j - i <= span)
        }
    }
}

/// `max |v_i − v_j|` over pairs `i ≤ j` with `close(i, j)`, where closeness
/// is monotone (if `(i, j)` is close so is `(i+1, j)`).
fn sliding_oscillation(v: &[f64], close: impl Fn(usize, usize) -> bool) -> f64 {
    use std::collections::VecDeque;
    let (mut maxq, mut minq): (VecDeque<usize>, VecDeque<usize>) = (VecDeque::new(), VecDeque::new());
    let mut lo = 0;
    let mut best = 0.0f64;
    for j in 0..v.len() {
        while v[j] >= maxq.back().map_or(f64::NEG_INFINITY, |&i| v[i]) && !maxq.is_empty() {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while v[j] <= minq.back().map_or(f64::INFINITY, |&i| v[i]) && !minq.is_empty() {
            minq.pop_back();
        }
        minq.push_back(j);
        while !close(lo, j) {
            lo += 1;
        }
        while maxq.front().is_some_and(|&i| i < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < lo) {
            minq.pop_front();
        }
        best = best.max(v[maxq[0]] - v[minq[0]]);
    }
    best
}

/// Terms of the GHP upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhpBound {
    pub value: f64,
    pub sup_norm: f64,
    pub modulus: f64,
    pub pinch_count: usize,
    pub length_gap: f64,
}

/// `6(p+1)(‖h−h'‖_∞ + ω_δ(h)) + 3p(ε∨ε') + |ζ_h − ζ_h'|` for pinch lists of
/// equal length `p` whose endpoints differ by at most `δ`.
pub fn ghp_upper_bound(
    h: &CodingPath,
    g: &CodingPath,
    pinches: &[(f64, f64)],
    pinches2: &[(f64, f64)],
    eps: f64,
    eps2: f64,
    delta: f64,
) -> Result<GhpBound, MetricError> {
    if pinches.len() != pinches2.len() {
        return Err(MetricError::PinchCountMismatch(pinches.len(), pinches2.len()));
    }
    for (name, x) in [("eps", eps), ("eps'", eps2), ("delta", delta)] {
        if x < 0.0 {
            return Err(MetricError::Negative(name));
        }
    }
    for (index, (a, b)) in pinches.iter().zip(pinches2).enumerate() {
        let shift = (a.0 - b.0).abs().max((a.1 - b.1).abs());
        if shift > delta {
            return Err(MetricError::DeltaViolated { index, shift, delta });
        }
    }
    let p = pinches.len();
    let sup_norm = sup_distance(h, g);
    let modulus = modulus(h, delta);
    let length_gap = (h.length() - g.length()).abs();
    let value = 6.0 * (p as f64 + 1.0) * (sup_norm + modulus) + 3.0 * p as f64 * eps.max(eps2) + length_gap;
    Ok(GhpBound { value, sup_norm, modulus, pinch_count: p, length_gap })
}
