//! The Markovian LIFO queue with i.i.d. types and its blue/red decomposition.
//!
//! Clients arrive at unit rate; each carries a type `J` drawn from
//! `ν_w = Σ_j (w_j/σ_1) δ_j` and asks for `w_J` units of service.  The load
//! `X_t = −t + Σ_k w_{J_k} 1{τ_k ≤ t}` and the stack depth `H` code a
//! Galton–Watson forest with offspring law `μ_w`.
//!
//! Colouring: a client whose type already appeared among earlier *blue*
//! clients is red; otherwise it inherits the colour of the client in service
//! (the idle server counts as blue).  Serving only the blue clients, with
//! the clock `Λ^b = ∫ 1_Blue`, recovers the queue without repetition:
//! `Y = X ∘ θ^b` and `𝓗 = H ∘ θ^b`, where `θ^b` is the right inverse of
//! `Λ^b`.  [`verify_embedding`] checks these identities pathwise.

mod forest;

pub use forest::*;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Exp1, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifo_coder::{height_of_path, CadlagStepPath, EventKind, IntStepPath, LifoError, TraceEvent};
use crate::weights::WeightSeq;

/// Absolute tolerance of the pathwise identity checks.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    #[error("type {0} is outside 1..=j_max")]
    BadType(usize),
    #[error("arrival times must be finite, nonnegative and strictly increasing")]
    BadArrivals,
    #[error("invalid stopping rule: {0}")]
    BadStopRule(String),
    #[error(transparent)]
    Path(#[from] LifoError),
}

/// When a Markov-queue run ends.  Every rule carries a hard time cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Run on `[0, T]`.
    Horizon(f64),
    /// Stop when the queue has emptied `count` times, or at `horizon`.
    EmptyEpochs { count: usize, horizon: f64 },
    /// Stop at the first moment after `time` when the queue is empty, or at `horizon`.
    EmptyAfter { time: f64, horizon: f64 },
}

impl StopRule {
    pub fn horizon(&self) -> f64 {
        match *self {
            StopRule::Horizon(t) => t,
            StopRule::EmptyEpochs { horizon, .. } | StopRule::EmptyAfter { horizon, .. } => horizon,
        }
    }

    fn validate(&self) -> Result<(), MarkovError> {
        let h = self.horizon();
        if !(h.is_finite() && h > 0.0) {
            return Err(MarkovError::BadStopRule(format!("horizon {h} must be finite and positive")));
        }
        match *self {
            StopRule::EmptyEpochs { count: 0, .. } => Err(MarkovError::BadStopRule("count must be positive".into())),
            StopRule::EmptyAfter { time, .. } if !(time >= 0.0 && time <= h) => {
                Err(MarkovError::BadStopRule(format!("time {time} must lie in [0, horizon]")))
            }
            _ => Ok(()),
        }
    }
}

/// Record of a Markov-queue run.  Client ids are 1-based in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovTrace {
    pub weights: WeightSeq,
    pub rule: StopRule,
    /// `τ_k`.
    pub arrival: Vec<f64>,
    /// `J_k ∈ 1..=j_max`.
    pub types: Vec<usize>,
    /// End of the run.
    pub end: f64,
    /// Load path `X` on `[0, end]`.
    pub x: CadlagStepPath,
    /// Parent in the forest; 0 is the server.
    pub parent: Vec<usize>,
    /// Depth (children of the server have depth 1).
    pub depth: Vec<u32>,
    /// Number of children that arrived during the run.
    pub children: Vec<u32>,
    /// Departure time, if it happened by `end`.
    pub departure: Vec<Option<f64>>,
    /// Stack depth `H`.
    pub height: IntStepPath,
    pub events: Vec<TraceEvent>,
    /// Number of times the queue emptied during the run.
    pub empty_epochs: usize,
}

impl MarkovTrace {
    pub fn client_count(&self) -> usize {
        self.arrival.len()
    }

    /// `N(t)`, the number of arrivals in `[0, t]`.
    pub fn arrivals_up_to(&self, t: f64) -> usize {
        self.arrival.partition_point(|&s| s <= t)
    }

    /// Running infimum `I_t`.
    pub fn running_inf(&self, t: f64) -> f64 {
        self.x.running_inf(t)
    }
}

/// Runs the queue with unit-rate Poisson arrivals and types drawn from `ν_w`.
pub fn simulate_markov<R: Rng + ?Sized>(w: &WeightSeq, rule: StopRule, rng: &mut R) -> Result<MarkovTrace, MarkovError> {
    let types = WeightedIndex::new(w.as_slice()).expect("positive weights");
    let mut t = 0.0;
    let arrivals = std::iter::from_fn(move || {
        let gap: f64 = Exp1.sample(rng);
        t += gap;
        Some((t, types.sample(rng) + 1))
    });
    replay(w, arrivals, rule)
}

/// Runs the queue on prescribed arrivals `(τ_k, J_k)`.
pub fn simulate_markov_with_arrivals(
    w: &WeightSeq,
    arrivals: &[(f64, usize)],
    rule: StopRule,
) -> Result<MarkovTrace, MarkovError> {
    if let Some(&(_, j)) = arrivals.iter().find(|(_, j)| !(1..=w.j_max()).contains(j)) {
        return Err(MarkovError::BadType(j));
    }
    if arrivals.iter().any(|(t, _)| !(t.is_finite() && *t >= 0.0)) || arrivals.windows(2).any(|p| p[1].0 <= p[0].0) {
        return Err(MarkovError::BadArrivals);
    }
    replay(w, arrivals.iter().copied(), rule)
}

struct Replay<'a> {
    w: &'a WeightSeq,
    arrival: Vec<f64>,
    types: Vec<usize>,
    parent: Vec<usize>,
    depth: Vec<u32>,
    children: Vec<u32>,
    departure: Vec<Option<f64>>,
    height: IntStepPath,
    events: Vec<TraceEvent>,
    stack: Vec<(usize, f64)>,
    empty_epochs: usize,
}

impl Replay<'_> {
    /// Processes departures up to `limit`; returns the time the run stops
    /// if the stopping rule fires on the way.
    fn depart_until(&mut self, limit: f64, rule: StopRule) -> Option<f64> {
        while let Some(&(k, owed)) = self.stack.last() {
            let d = self.arrival[k - 1] + owed;
            if d > limit {
                return None;
            }
            self.stack.pop();
            self.departure[k - 1] = Some(d);
            let h = self.stack.len() as i64;
            self.height.push(d, h);
            self.events.push(TraceEvent { time: d, kind: EventKind::Departure, client: k, load: 0.0, height: h });
            if let Some(top) = self.stack.last_mut() {
                top.1 += owed;
            } else {
                self.empty_epochs += 1;
                match rule {
                    StopRule::EmptyEpochs { count, .. } if self.empty_epochs >= count => return Some(d),
                    StopRule::EmptyAfter { time, .. } if d >= time => return Some(d),
                    _ => {}
                }
            }
        }
        None
    }

    fn arrive(&mut self, t: f64, j: usize) {
        let k = self.arrival.len() + 1;
        let (p, dep) = match self.stack.last() {
            Some(&(p, _)) => (p, self.depth[p - 1] + 1),
            None => (0, 1),
        };
        if p > 0 {
            self.children[p - 1] += 1;
        }
        self.arrival.push(t);
        self.types.push(j);
        self.parent.push(p);
        self.depth.push(dep);
        self.children.push(0);
        self.departure.push(None);
        self.stack.push((k, self.w.weight(j)));
        let h = self.stack.len() as i64;
        self.height.push(t, h);
        self.events.push(TraceEvent { time: t, kind: EventKind::Arrival, client: k, load: 0.0, height: h });
    }
}

fn replay(w: &WeightSeq, mut arrivals: impl Iterator<Item = (f64, usize)>, rule: StopRule) -> Result<MarkovTrace, MarkovError> {
    rule.validate()?;
    let cap = rule.horizon();
    let mut st = Replay {
        w,
        arrival: Vec::new(),
        types: Vec::new(),
        parent: Vec::new(),
        depth: Vec::new(),
        children: Vec::new(),
        departure: Vec::new(),
        height: IntStepPath::constant(0),
        events: Vec::new(),
        stack: Vec::new(),
        empty_epochs: 0,
    };
    let end = loop {
        let next = arrivals.next().filter(|&(t, _)| t <= cap);
        let limit = next.map_or(cap, |(t, _)| t);
        if let Some(stop) = st.depart_until(limit, rule) {
            break stop;
        }
        let Some((t, j)) = next else {
            break cap;
        };
        if let StopRule::EmptyAfter { time, .. } = rule {
            if st.stack.is_empty() && t > time {
                break time;
            }
        }
        st.arrive(t, j);
    };
    let sizes = st.types.iter().map(|&j| w.weight(j)).collect();
    let x = CadlagStepPath::new(st.arrival.clone(), sizes, end)?;
    for ev in &mut st.events {
        ev.load = x.value(ev.time);
    }
    Ok(MarkovTrace {
        weights: w.clone(),
        rule,
        arrival: st.arrival,
        types: st.types,
        end,
        x,
        parent: st.parent,
        depth: st.depth,
        children: st.children,
        departure: st.departure,
        height: st.height,
        events: st.events,
        empty_epochs: st.empty_epochs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colour {
    Blue,
    Red,
}

/// A maximal stretch of red service: a red root and its subtree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedInterval {
    pub start: f64,
    /// Departure of the red root, or the end of the run if it had not left.
    pub end: f64,
    pub complete: bool,
    /// `Λ^b(start)`: blue time at which the stretch is inserted.
    pub blue_time: f64,
    /// Red time elapsed before the stretch.
    pub red_before: f64,
    pub root: usize,
}

/// Blue/red decomposition of a Markov trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Colouring {
    pub colour: Vec<Colour>,
    /// Red clients whose parent is blue (or the server).
    pub red_root: Vec<bool>,
    pub red_intervals: Vec<RedInterval>,
    /// Blue-clock arrival time `E_j` of the blue client of each type, if any.
    pub blue_arrival: Vec<Option<f64>>,
    /// `X^b`: blue clients and red roots, in blue time.
    pub x_blue: CadlagStepPath,
    /// `X^r`: red clients other than roots, in red time.
    pub x_red: CadlagStepPath,
    /// `Y`: the queue without repetition, in blue time.
    pub y: CadlagStepPath,
    /// `𝓗 = height_of_path(Y)`.
    pub script_h: IntStepPath,
    /// `Λ^b(end)`.
    pub blue_end: f64,
    /// `Λ^r(end)`.
    pub red_end: f64,
}

impl Colouring {
    /// Last red stretch starting at or before `t`.
    fn stretch_before(&self, t: f64) -> Option<RedInterval> {
        let i = self.red_intervals.partition_point(|r| r.start <= t);
        i.checked_sub(1).map(|i| self.red_intervals[i])
    }

    /// `Λ^b_t = ∫_0^t 1_Blue`.  Anchored at the last stretch so that the
    /// end of a stretch maps exactly to its insertion time.
    pub fn lambda_blue(&self, t: f64) -> f64 {
        match self.stretch_before(t) {
            None => t,
            Some(r) if t < r.end => r.blue_time,
            Some(r) => r.blue_time + (t - r.end),
        }
    }

    /// `Λ^r_t = t − Λ^b_t`, the red time spent in `[0, t]`.
    pub fn lambda_red(&self, t: f64) -> f64 {
        match self.stretch_before(t) {
            None => 0.0,
            Some(r) => r.red_before + (t.min(r.end) - r.start),
        }
    }

    /// `θ^b_b = inf{s : Λ^b_s > b}`; `None` past the run or when an
    /// unfinished red stretch is inserted at or before `b`.
    pub fn theta_blue(&self, b: f64) -> Option<f64> {
        if b > self.blue_end {
            return None;
        }
        let i = self.red_intervals.partition_point(|r| r.blue_time <= b);
        match i.checked_sub(1).map(|i| self.red_intervals[i]) {
            None => Some(b),
            Some(r) if !r.complete => None,
            Some(r) => Some(r.end + (b - r.blue_time)),
        }
    }

    /// `A_b = X^b_b − Y_b`.
    pub fn repeat_load(&self, b: f64) -> f64 {
        self.x_blue.value(b) - self.y.value(b)
    }

    pub fn blue_count(&self) -> usize {
        self.colour.iter().filter(|&&c| c == Colour::Blue).count()
    }

    /// Blue time at which the realized red process can no longer absorb the
    /// repeated load: the first `b` with `A_b > −inf X^r` (over the realized
    /// red time).  `None` if it never happens during the run.
    pub fn explosion_surrogate(&self) -> Option<f64> {
        let red_inf = -self.x_red.running_inf(self.red_end);
        self.x_blue
            .times()
            .iter()
            .copied()
            .find(|&b| self.repeat_load(b) > red_inf + IDENTITY_TOL)
    }

    /// `γ^r_x = inf{t : X^r_t < −x}`, searched on the realized red path with
    /// tolerance [`IDENTITY_TOL`]; `None` if not reached during the run.
    pub fn red_passage(&self, x: f64) -> Option<f64> {
        let p = &self.x_red;
        let level = -x;
        let (mut t0, mut v0) = (0.0, 0.0);
        let check = |t1: f64, t0: f64, v0: f64| -> Option<f64> {
            // On [t0, t1) the path decreases from v0 with slope −1.
            (v0 - (t1 - t0) <= level + IDENTITY_TOL).then(|| t0 + (v0 - level).max(0.0))
        };
        for (&t, &s) in p.times().iter().zip(p.sizes()) {
            if let Some(hit) = check(t, t0, v0) {
                return Some(hit);
            }
            v0 = v0 - (t - t0) + s;
            t0 = t;
        }
        check(self.red_end, t0, v0).filter(|&hit| hit <= self.red_end + IDENTITY_TOL)
    }

    /// `H ∘ θ^b` as a step path in blue time: the stack depth after every
    /// blue arrival and departure, placed at `Λ^b` of the event.
    pub fn height_through_theta(&self, trace: &MarkovTrace) -> IntStepPath {
        let mut out = IntStepPath::constant(0);
        for ev in &trace.events {
            if self.colour[ev.client - 1] == Colour::Blue {
                out.push(self.lambda_blue(ev.time), ev.height);
            }
        }
        out
    }
}

/// Colours the clients and builds the blue/red processes.
pub fn color_blue_red(trace: &MarkovTrace) -> Result<Colouring, MarkovError> {
    let n = trace.client_count();
    let mut colour = Vec::with_capacity(n);
    let mut red_root = Vec::with_capacity(n);
    let mut seen_blue = HashSet::new();
    for k in 0..n {
        let p = trace.parent[k];
        let parent_colour = if p == 0 { Colour::Blue } else { colour[p - 1] };
        let c = if seen_blue.contains(&trace.types[k]) { Colour::Red } else { parent_colour };
        if c == Colour::Blue {
            seen_blue.insert(trace.types[k]);
        }
        colour.push(c);
        red_root.push(c == Colour::Red && parent_colour == Colour::Blue);
    }
    let mut red_intervals: Vec<RedInterval> = Vec::new();
    let mut red_before = 0.0;
    for k in (0..n).filter(|&k| red_root[k]) {
        let start = trace.arrival[k];
        let (end, complete) = match trace.departure[k] {
            Some(d) => (d, true),
            None => (trace.end, false),
        };
        let blue_time = match red_intervals.last() {
            None => start,
            Some(prev) => prev.blue_time + (start - prev.end),
        };
        red_intervals.push(RedInterval { start, end, complete, blue_time, red_before, root: k + 1 });
        red_before += end - start;
    }
    let mut col = Colouring {
        colour,
        red_root,
        red_intervals,
        blue_arrival: vec![None; trace.weights.j_max()],
        x_blue: CadlagStepPath::new(vec![], vec![], 0.0)?,
        x_red: CadlagStepPath::new(vec![], vec![], 0.0)?,
        y: CadlagStepPath::new(vec![], vec![], 0.0)?,
        script_h: IntStepPath::constant(0),
        blue_end: 0.0,
        red_end: 0.0,
    };
    col.blue_end = col.lambda_blue(trace.end);
    col.red_end = col.lambda_red(trace.end);
    let (mut xb_t, mut xb_s, mut xr_t, mut xr_s, mut y_t, mut y_s) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    for k in 0..n {
        let (t, size) = (trace.arrival[k], trace.weights.weight(trace.types[k]));
        if col.colour[k] == Colour::Blue {
            let b = col.lambda_blue(t);
            col.blue_arrival[trace.types[k] - 1] = Some(b);
            xb_t.push(b);
            xb_s.push(size);
            y_t.push(b);
            y_s.push(size);
        } else if col.red_root[k] {
            xb_t.push(col.lambda_blue(t));
            xb_s.push(size);
        } else {
            xr_t.push(col.lambda_red(t));
            xr_s.push(size);
        }
    }
    col.x_blue = CadlagStepPath::new(xb_t, xb_s, col.blue_end)?;
    col.x_red = CadlagStepPath::new(xr_t, xr_s, col.red_end)?;
    col.y = CadlagStepPath::new(y_t, y_s, col.blue_end)?;
    col.script_h = height_of_path(&col.y);
    Ok(col)
}

/// Outcome of one identity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub pass: bool,
    pub max_abs_err: f64,
    pub n_points: usize,
}

impl IdentityCheck {
    fn from_errors(errs: impl IntoIterator<Item = f64>) -> Self {
        let (mut max, mut n, mut finite) = (0.0f64, 0, true);
        for e in errs {
            finite &= e.is_finite();
            max = max.max(e);
            n += 1;
        }
        let max = if finite { max } else { f64::INFINITY };
        Self { pass: max <= IDENTITY_TOL, max_abs_err: max, n_points: n }
    }

    fn failed(n_points: usize) -> Self {
        Self { pass: false, max_abs_err: f64::INFINITY, n_points }
    }
}

/// Results of [`verify_embedding`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub checks: BTreeMap<String, IdentityCheck>,
    /// Blue time past which the comparison stops (see
    /// [`Colouring::explosion_surrogate`]); `None` if the run never explodes.
    pub explosion_surrogate: Option<f64>,
    pub blue_clients: usize,
    pub red_clients: usize,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }
}

/// Names of the checks, in report order.
pub const IDENTITY_NAMES: [&str; 9] = [
    "y_equals_x_of_theta",
    "height_equals_h_of_theta",
    "x_equals_blue_plus_red",
    "contour_count",
    "blue_types_distinct",
    "contour_matches_height",
    "theta_from_red_passage",
    "lambda_inverts_theta",
    "repeat_load_formula",
];

/// Checks, at event breakpoints (both sides are piecewise linear with slope
/// −1 or piecewise constant between them):
/// - `Y_b = X(θ^b_b)`;
/// - `𝓗_b = H(θ^b_b)` (breakpoint sequences agree);
/// - `X_t = X^b(Λ^b_t) + X^r(Λ^r_t)`;
/// - `M_t = 2 N_t − H_t`, with `M` counting the jumps of `H`;
/// - blue types are pairwise distinct;
/// - the forest contour satisfies `C_{M_t} = H_t`;
/// - `θ^b_b = b + γ^r(A_b)`;
/// - `Λ^b(θ^b_b) = b`;
/// - `A_b = Σ_j w_j (N_j(b) − 1)_+`.
///
/// Blue-time comparisons stop at the explosion surrogate.
pub fn verify_embedding(trace: &MarkovTrace, col: &Colouring) -> IdentityReport {
    let surrogate = col.explosion_surrogate();
    let b_limit = surrogate.map_or(col.blue_end, |s| s.min(col.blue_end));
    let in_blue_range = |b: f64| b <= b_limit + IDENTITY_TOL && surrogate.is_none_or(|s| b < s);
    let in_red = |t: f64| col.red_intervals.iter().any(|r| r.start <= t && t < r.end);
    let mut checks = BTreeMap::new();

    // Event times of X, plus 0 and the end of the run.
    let mut times: Vec<f64> = std::iter::once(0.0).chain(trace.events.iter().map(|e| e.time)).collect();
    times.push(trace.end);

    // Y = X ∘ θ^b, at blue event times of X and at breakpoints of Y.
    let mut errs = Vec::new();
    for &t in times.iter().filter(|&&t| !in_red(t)) {
        let b = col.lambda_blue(t);
        if in_blue_range(b) {
            errs.push((trace.x.value(t) - col.y.value(b)).abs());
        }
    }
    // θ^b(b) is computed through Λ^b anchors and may land a few ulps away
    // from the X jump it corresponds to; times within IDENTITY_TOL of a
    // jump are identified with it.
    let x_times = trace.x.times();
    let snap = |s: f64| {
        let i = x_times.partition_point(|&u| u < s);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter_map(|j| x_times.get(j).copied())
            .find(|&u| (u - s).abs() <= IDENTITY_TOL)
            .unwrap_or(s)
    };
    for &b in col.y.times().iter().filter(|&&b| in_blue_range(b)) {
        match col.theta_blue(b) {
            Some(s) => errs.push((trace.x.value(snap(s)) - col.y.value(b)).abs()),
            None => errs.push(f64::INFINITY),
        }
    }
    checks.insert(IDENTITY_NAMES[0].to_string(), IdentityCheck::from_errors(errs));

    // 𝓗 = H ∘ θ^b.
    let lhs = &col.script_h;
    let rhs = col.height_through_theta(trace);
    let cut = |p: &IntStepPath| -> Vec<(f64, i64)> {
        p.times.iter().copied().zip(p.values.iter().copied()).filter(|&(b, _)| in_blue_range(b)).collect()
    };
    let (l, r) = (cut(lhs), cut(&rhs));
    let check = if l.len() == r.len() && l.iter().zip(&r).all(|(a, b)| a.1 == b.1) {
        IdentityCheck::from_errors(l.iter().zip(&r).map(|(a, b)| (a.0 - b.0).abs()))
    } else {
        IdentityCheck::failed(l.len().max(r.len()))
    };
    checks.insert(IDENTITY_NAMES[1].to_string(), check);

    // X = X^b ∘ Λ^b + X^r ∘ Λ^r.
    let errs = times.iter().map(|&t| {
        let rebuilt = col.x_blue.value(col.lambda_blue(t)) + col.x_red.value(col.lambda_red(t));
        (trace.x.value(t) - rebuilt).abs()
    });
    checks.insert(IDENTITY_NAMES[2].to_string(), IdentityCheck::from_errors(errs.collect::<Vec<_>>()));

    // M = 2N − H.
    let h = &trace.height;
    let jumps_up_to = |t: f64| h.times.partition_point(|&s| s <= t).saturating_sub(1) as i64;
    let counter_errs: Vec<f64> = times
        .iter()
        .map(|&t| {
            let m = jumps_up_to(t);
            let rhs = 2 * trace.arrivals_up_to(t) as i64 - h.value_at(t);
            if m == rhs { 0.0 } else { f64::INFINITY }
        })
        .collect();
    checks.insert(IDENTITY_NAMES[3].to_string(), IdentityCheck::from_errors(counter_errs));

    // Blue types distinct.
    let mut seen = HashSet::new();
    let blue: Vec<usize> = (0..trace.client_count()).filter(|&k| col.colour[k] == Colour::Blue).collect();
    let distinct = blue.iter().all(|&k| seen.insert(trace.types[k]));
    checks.insert(
        IDENTITY_NAMES[4].to_string(),
        IdentityCheck { pass: distinct, max_abs_err: if distinct { 0.0 } else { f64::INFINITY }, n_points: blue.len() },
    );

    // Contour of the forest read at the jump counter.
    let contour = forest_contour(trace);
    let contour_errs: Vec<f64> = times
        .iter()
        .map(|&t| match contour.get(jumps_up_to(t) as usize) {
            Some(&c) if i64::from(c) == h.value_at(t) => 0.0,
            _ => f64::INFINITY,
        })
        .collect();
    checks.insert(IDENTITY_NAMES[5].to_string(), IdentityCheck::from_errors(contour_errs));

    // θ^b via the red first-passage process, and Λ^b ∘ θ^b = id.
    let mut blue_points: Vec<f64> = std::iter::once(0.0)
        .chain(col.x_blue.times().iter().copied())
        .chain(col.y.times().iter().copied())
        .chain(col.red_intervals.iter().map(|r| r.blue_time))
        .filter(|&b| in_blue_range(b))
        .collect();
    blue_points.sort_by(f64::total_cmp);
    let mut theta_errs = Vec::new();
    let mut inverse_errs = Vec::new();
    for &b in &blue_points {
        let theta = col.theta_blue(b);
        let via_red = col.red_passage(col.repeat_load(b)).map(|g| b + g);
        theta_errs.push(match (theta, via_red) {
            (Some(a), Some(c)) => (a - c).abs(),
            _ => f64::INFINITY,
        });
        inverse_errs.push(theta.map_or(f64::INFINITY, |s| (col.lambda_blue(s) - b).abs()));
    }
    checks.insert(IDENTITY_NAMES[6].to_string(), IdentityCheck::from_errors(theta_errs));
    checks.insert(IDENTITY_NAMES[7].to_string(), IdentityCheck::from_errors(inverse_errs));

    // A_b = Σ_j w_j (N_j(b) − 1)_+, counting blue clients and red roots.
    let mut arrivals_by_type: Vec<Vec<f64>> = vec![Vec::new(); trace.weights.j_max()];
    for k in (0..trace.client_count()).filter(|&k| col.colour[k] == Colour::Blue || col.red_root[k]) {
        arrivals_by_type[trace.types[k] - 1].push(col.lambda_blue(trace.arrival[k]));
    }
    let a_errs: Vec<f64> = blue_points
        .iter()
        .map(|&b| {
            let formula: f64 = arrivals_by_type
                .iter()
                .enumerate()
                .map(|(j, ts)| {
                    let count = ts.partition_point(|&s| s <= b);
                    trace.weights.weight(j + 1) * count.saturating_sub(1) as f64
                })
                .sum();
            (col.repeat_load(b) - formula).abs()
        })
        .collect();
    checks.insert(IDENTITY_NAMES[8].to_string(), IdentityCheck::from_errors(a_errs));

    IdentityReport {
        checks,
        explosion_surrogate: surrogate,
        blue_clients: blue.len(),
        red_clients: trace.client_count() - blue.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn w(v: &[f64]) -> WeightSeq {
        WeightSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_client() {
        let tr = simulate_markov_with_arrivals(&w(&[1.0, 0.5]), &[(0.3, 1)], StopRule::Horizon(5.0)).unwrap();
        assert_eq!(tr.height.times, vec![0.0, 0.3, 1.3]);
        assert_eq!(tr.height.values, vec![0, 1, 0]);
        assert_eq!(tr.empty_epochs, 1);
    }

    #[test]
    fn nested_pair_mirrors_lifo_example() {
        let tr = simulate_markov_with_arrivals(&w(&[1.0, 0.5]), &[(0.2, 1), (0.4, 2)], StopRule::Horizon(5.0)).unwrap();
        assert_eq!(tr.height.values, vec![0, 1, 2, 1, 0]);
        assert!((tr.height.times[3] - 0.9).abs() < 1e-12 && (tr.height.times[4] - 1.7).abs() < 1e-12);
        assert_eq!(tr.parent, vec![0, 1]);
    }

    #[test]
    fn no_arrivals() {
        let tr = simulate_markov_with_arrivals(&w(&[1.0]), &[], StopRule::Horizon(2.0)).unwrap();
        assert_eq!(tr.height, IntStepPath::constant(0));
        assert_eq!(tr.x.value(1.5), -1.5);
        assert_eq!(tr.end, 2.0);
    }

    #[test]
    fn stop_rules() {
        let ws = w(&[1.0, 1.0]);
        let arr = [(0.5, 1), (2.0, 2), (4.0, 1), (6.0, 2)];
        let tr = simulate_markov_with_arrivals(&ws, &arr, StopRule::EmptyEpochs { count: 2, horizon: 100.0 }).unwrap();
        assert_eq!((tr.client_count(), tr.end), (2, 3.0));
        let tr = simulate_markov_with_arrivals(&ws, &arr, StopRule::EmptyAfter { time: 3.5, horizon: 100.0 }).unwrap();
        assert_eq!((tr.client_count(), tr.end), (2, 3.5));
        let tr = simulate_markov_with_arrivals(&ws, &arr, StopRule::EmptyAfter { time: 4.5, horizon: 100.0 }).unwrap();
        assert_eq!((tr.client_count(), tr.end), (3, 5.0));
        let tr = simulate_markov_with_arrivals(&ws, &arr, StopRule::Horizon(4.2)).unwrap();
        assert_eq!((tr.client_count(), tr.end), (3, 4.2));
        assert_eq!(tr.departure[2], None);
        assert!(simulate_markov_with_arrivals(&ws, &arr, StopRule::EmptyEpochs { count: 0, horizon: 1.0 }).is_err());
        assert!(simulate_markov_with_arrivals(&ws, &[(0.1, 3)], StopRule::Horizon(1.0)).is_err());
    }

    #[test]
    fn distinct_types_are_all_blue() {
        let ws = w(&[1.0, 0.5, 0.25]);
        let tr = simulate_markov_with_arrivals(&ws, &[(0.2, 1), (0.4, 2), (3.0, 3)], StopRule::Horizon(10.0)).unwrap();
        let col = color_blue_red(&tr).unwrap();
        assert!(col.colour.iter().all(|&c| c == Colour::Blue));
        assert_eq!(col.lambda_red(10.0), 0.0);
        assert_eq!(col.y, CadlagStepPath::new(tr.arrival.clone(), vec![1.0, 0.5, 0.25], 10.0).unwrap());
        assert_eq!(col.script_h.values, tr.height.values);
        assert!(col.script_h.times.iter().zip(&tr.height.times).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(col.repeat_load(5.0), 0.0);
        let rep = verify_embedding(&tr, &col);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.checks.values().all(|c| c.max_abs_err < 1e-12));
    }

    #[test]
    fn repeated_type_is_red_with_its_subtree() {
        // Client 1 (type 1) is blue; client 2 repeats type 1 while 1 is served
        // → red root; client 3 (type 2, new) arrives while 2 is served → red.
        let ws = w(&[1.0, 0.5]);
        let arr = [(0.2, 1), (0.4, 1), (0.6, 2)];
        let tr = simulate_markov_with_arrivals(&ws, &arr, StopRule::Horizon(10.0)).unwrap();
        let col = color_blue_red(&tr).unwrap();
        assert_eq!(col.colour, vec![Colour::Blue, Colour::Red, Colour::Red]);
        assert_eq!(col.red_root, vec![false, true, false]);
        // Red stretch: [0.4, 0.4 + 1 + 0.5) = [0.4, 1.9).
        let r = col.red_intervals[0];
        assert!((r.start - 0.4).abs() < 1e-15 && (r.end - 1.9).abs() < 1e-12 && r.complete);
        assert!(col.lambda_red(1.0) > 0.0);
        assert!((col.lambda_blue(1.9) - 0.4).abs() < 1e-12);
        assert_eq!(col.theta_blue(0.3), Some(0.3));
        assert!((col.theta_blue(0.4).unwrap() - 1.9).abs() < 1e-12);
        assert!((col.repeat_load(0.4) - 1.0).abs() < 1e-12);
        let rep = verify_embedding(&tr, &col);
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.explosion_surrogate, None);
        assert_eq!((rep.blue_clients, rep.red_clients), (1, 2));
    }

    #[test]
    fn unfinished_red_stretch_sets_surrogate() {
        let ws = w(&[1.0, 0.5]);
        let tr = simulate_markov_with_arrivals(&ws, &[(0.2, 1), (0.4, 1)], StopRule::Horizon(1.0)).unwrap();
        let col = color_blue_red(&tr).unwrap();
        assert!(!col.red_intervals[0].complete);
        assert_eq!(col.theta_blue(0.5), None);
        let rep = verify_embedding(&tr, &col);
        assert!((rep.explosion_surrogate.unwrap() - 0.4).abs() < 1e-12);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn contour_counter_at_start() {
        let tr = simulate_markov_with_arrivals(&w(&[1.0]), &[(0.5, 1)], StopRule::Horizon(3.0)).unwrap();
        assert_eq!((tr.height.value_at(0.0), tr.arrivals_up_to(0.0)), (0, 0));
        let rep = verify_embedding(&tr, &color_blue_red(&tr).unwrap());
        assert!(rep.checks["contour_count"].pass);
    }

    #[test]
    fn random_runs_satisfy_identities() {
        for (i, v) in [vec![2.0, 1.0, 1.0, 1.0], vec![0.5, 0.4, 0.3], vec![1.0, 1.0]].iter().enumerate() {
            let ws = w(v);
            for r in 0..20 {
                let mut rng = stream(11 + i as u64, r, Purpose::Arrivals);
                let tr = simulate_markov(&ws, StopRule::EmptyEpochs { count: 5, horizon: 200.0 }, &mut rng).unwrap();
                let col = color_blue_red(&tr).unwrap();
                assert!(col.blue_count() <= ws.j_max());
                let rep = verify_embedding(&tr, &col);
                assert!(rep.passed(), "weights {v:?} replica {r}: {rep:?}");
            }
        }
    }
}
