//! The LIFO queue without repetition.
//!
//! Client `j` arrives at an exponential time `E_j` of mean `σ_1/w_j` and asks
//! for `w_j` units of service; the server always serves the most recent
//! arrival.  The load `Y_t = −t + Σ_j w_j 1{E_j ≤ t}`, its running infimum
//! `J`, and the stack depth `𝓗` code the exploration tree (client `j` is a
//! child of the client in service when it arrives, or of the root 0 when the
//! server is idle).  Surplus edges come from a Poisson cloud under the
//! reflected load `Y − J`; together with the tree they form a graph with the
//! law of the w-multiplicative random graph.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use thiserror::Error;

use crate::direct_graph::{AssembledGraph, Provenance};
use crate::numeric::ExactSum;
use crate::weights::WeightSeq;

#[derive(Debug, Error, PartialEq)]
pub enum LifoError {
    #[error("expected {expected} arrival times, got {got}")]
    ArrivalCount { expected: usize, got: usize },
    #[error("arrival time {0} is not a finite nonnegative number")]
    BadArrival(f64),
    #[error("two clients arrive at the same time {0}")]
    SimultaneousArrivals(f64),
    #[error("jump times must be strictly increasing and sizes positive")]
    BadPath,
    #[error("pinch time {0} lies outside every busy period")]
    OutsideBusyPeriod(f64),
    #[error("pinch level {y} is not inside (0, {load}) at time {t}")]
    BadLevel { t: f64, y: f64, load: f64 },
    #[error("pinch endpoints {u} and {v} do not belong to the trace's busy period")]
    Mismatch { u: usize, v: usize },
}

/// Path with drift −1 and positive jumps at strictly increasing times:
/// `Y_t = −t + Σ_{t_i ≤ t} x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagStepPath {
    times: Vec<f64>,
    sizes: Vec<f64>,
    /// `prefix[i] = x_0 + … + x_{i−1}`.
    prefix: Vec<f64>,
    /// Running minimum of pre-jump levels (and 0): `inf_{[0, t_i)} Y`.
    prefix_inf: Vec<f64>,
    horizon: f64,
}

impl CadlagStepPath {
    /// Validates strictly increasing nonnegative times and positive sizes.
    pub fn new(times: Vec<f64>, sizes: Vec<f64>, horizon: f64) -> Result<Self, LifoError> {
        if times.len() != sizes.len()
            || times.windows(2).any(|w| w[1] <= w[0])
            || times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || sizes.iter().any(|x| !(x.is_finite() && *x > 0.0))
        {
            return Err(LifoError::BadPath);
        }
        let mut prefix = Vec::with_capacity(times.len() + 1);
        let mut prefix_inf = Vec::with_capacity(times.len() + 1);
        let mut acc = ExactSum::new();
        let mut inf = 0.0f64;
        prefix.push(0.0);
        prefix_inf.push(0.0);
        for (i, (&t, &x)) in times.iter().zip(&sizes).enumerate() {
            inf = inf.min(-t + prefix[i]);
            acc.add(x);
            prefix.push(acc.value());
            prefix_inf.push(inf);
        }
        Ok(Self { times, sizes, prefix, prefix_inf, horizon })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of jumps at times `≤ t`.
    pub fn jumps_up_to(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    /// Right-continuous value `Y_t`.
    pub fn value(&self, t: f64) -> f64 {
        -t + self.prefix[self.jumps_up_to(t)]
    }

    /// Left limit `Y_{t−}`.
    pub fn left_value(&self, t: f64) -> f64 {
        -t + self.prefix[self.times.partition_point(|&s| s < t)]
    }

    /// Level just before jump `i`.
    pub fn pre_jump_level(&self, i: usize) -> f64 {
        -self.times[i] + self.prefix[i]
    }

    /// Running infimum `J_t = inf_{[0,t]} Y`.
    pub fn running_inf(&self, t: f64) -> f64 {
        let k = self.jumps_up_to(t);
        self.prefix_inf[k].min(self.value(t))
    }
}

/// Integer-valued right-continuous step path starting at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct IntStepPath {
    /// Breakpoints; `times[0] == 0`.
    pub times: Vec<f64>,
    /// `values[i]` holds on `[times[i], times[i+1])`; the last value holds afterwards.
    pub values: Vec<i64>,
}

impl IntStepPath {
    /// The path identically equal to `v0`.
    pub fn constant(v0: i64) -> Self {
        Self { times: vec![0.0], values: vec![v0] }
    }

    /// Appends a breakpoint; a breakpoint at the current last time overwrites
    /// its value, and a breakpoint not changing the value is skipped.
    pub fn push(&mut self, t: f64, v: i64) {
        let last = self.times.len() - 1;
        if t <= self.times[last] {
            self.values[last] = v;
            if last > 0 && self.values[last - 1] == v {
                self.times.pop();
                self.values.pop();
            }
        } else if self.values[last] != v {
            self.times.push(t);
            self.values.push(v);
        }
    }

    pub fn value_at(&self, t: f64) -> i64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.values[i.saturating_sub(1)]
    }

    /// Minimum over the closed interval `[s, t]`.
    pub fn min_on(&self, s: f64, t: f64) -> i64 {
        let (s, t) = (s.min(t), s.max(t));
        let lo = self.times.partition_point(|&x| x <= s).saturating_sub(1);
        let hi = self.times.partition_point(|&x| x <= t).max(1);
        self.values[lo..hi].iter().copied().min().expect("nonempty range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Departure,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Departure => "departure",
        }
    }
}

/// One queue event with the load and stack depth right after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: EventKind,
    pub client: usize,
    pub load: f64,
    pub height: i64,
}

/// A maximal busy period of the server (an excursion of `Y − J`).
#[derive(Debug, Clone, PartialEq)]
pub struct BusyPeriod {
    pub start: f64,
    pub end: f64,
    /// Total service requested, `Σ` of member weights; equals `end − start`.
    pub mass: f64,
    /// First client of the period.
    pub root: usize,
    /// Members in arrival order.
    pub clients: Vec<usize>,
}

/// Complete record of a LIFO-queue run.  Client ids are 1-based and follow
/// the weight order; all per-client vectors are indexed by `id − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LifoTrace {
    pub weights: WeightSeq,
    pub arrival: Vec<f64>,
    /// Client ids sorted by arrival time.
    pub order: Vec<usize>,
    /// Arrival rank of each client (exploration order).
    pub rank: Vec<usize>,
    /// Load path `Y`.
    pub path: CadlagStepPath,
    /// Parent in the exploration tree; 0 is the root.
    pub parent: Vec<usize>,
    /// Depth in the exploration tree (children of the root have depth 1).
    pub depth: Vec<u32>,
    /// `Y_{E_j−}`, the load just before the arrival.
    pub pre_level: Vec<f64>,
    pub departure: Vec<f64>,
    /// Service intervals `[a, b)` of each client.
    pub service: Vec<Vec<(f64, f64)>>,
    /// Stack depth `𝓗`.
    pub height: IntStepPath,
    pub events: Vec<TraceEvent>,
    pub busy_periods: Vec<BusyPeriod>,
    /// All service intervals `(a, b, client)` sorted by start.
    served: Vec<(f64, f64, usize)>,
    /// Busy period index of each client.
    period_of: Vec<usize>,
}

/// Draws `E_j` with mean `σ_1/w_j` and runs the queue.
pub fn simulate_lifo<R: Rng + ?Sized>(w: &WeightSeq, rng: &mut R) -> LifoTrace {
    let s1 = w.sigma1();
    let arrivals = w
        .as_slice()
        .iter()
        .map(|&x| Exp::new(x / s1).expect("positive rate").sample(rng))
        .collect();
    simulate_lifo_with_arrivals(w, arrivals).expect("continuous arrival times are distinct")
}

/// Runs the LIFO queue with prescribed arrival times (one per client).
pub fn simulate_lifo_with_arrivals(w: &WeightSeq, arrival: Vec<f64>) -> Result<LifoTrace, LifoError> {
    let n = w.j_max();
    if arrival.len() != n {
        return Err(LifoError::ArrivalCount { expected: n, got: arrival.len() });
    }
    if let Some(&bad) = arrival.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(LifoError::BadArrival(bad));
    }
    let mut order: Vec<usize> = (1..=n).collect();
    order.sort_by(|&a, &b| arrival[a - 1].total_cmp(&arrival[b - 1]).then(a.cmp(&b)));
    if let Some(p) = order.windows(2).find(|p| arrival[p[0] - 1] == arrival[p[1] - 1]) {
        return Err(LifoError::SimultaneousArrivals(arrival[p[0] - 1]));
    }
    let mut rank = vec![0; n];
    for (r, &j) in order.iter().enumerate() {
        rank[j - 1] = r;
    }
    let path = CadlagStepPath::new(
        order.iter().map(|&j| arrival[j - 1]).collect(),
        order.iter().map(|&j| w.weight(j)).collect(),
        f64::INFINITY,
    )?;

    let mut parent = vec![0usize; n];
    let mut depth = vec![0u32; n];
    let mut pre_level = vec![0.0; n];
    let mut departure = vec![f64::NAN; n];
    let mut service: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut height = IntStepPath::constant(0);
    let mut events = Vec::with_capacity(2 * n);
    let mut busy_periods: Vec<BusyPeriod> = Vec::new();
    let mut period_of = vec![0usize; n];
    // Stack of (client, service owed by the client and its completed subtrees).
    let mut stack: Vec<(usize, f64)> = Vec::new();
    let mut served_since = 0.0;
    let mut members: Vec<usize> = Vec::new();

    let depart_until = |limit: f64,
                            stack: &mut Vec<(usize, f64)>,
                            served_since: &mut f64,
                            members: &mut Vec<usize>,
                            departure: &mut Vec<f64>,
                            service: &mut Vec<Vec<(f64, f64)>>,
                            height: &mut IntStepPath,
                            events: &mut Vec<TraceEvent>,
                            busy_periods: &mut Vec<BusyPeriod>| {
        while let Some(&(k, owed)) = stack.last() {
            // A client leaves when the load returns to its pre-arrival level,
            // i.e. after its own work and that of all its descendants.
            let d = arrival[k - 1] + owed;
            if d > limit {
                break;
            }
            stack.pop();
            departure[k - 1] = d;
            service[k - 1].push((*served_since, d));
            *served_since = d;
            height.push(d, stack.len() as i64);
            events.push(TraceEvent { time: d, kind: EventKind::Departure, client: k, load: 0.0, height: stack.len() as i64 });
            if let Some(top) = stack.last_mut() {
                top.1 += owed;
            } else {
                let clients = std::mem::take(members);
                let mut mass = ExactSum::new();
                for &c in &clients {
                    mass.add(w.weight(c));
                }
                busy_periods.push(BusyPeriod { start: arrival[k - 1], end: d, mass: mass.value(), root: k, clients });
            }
        }
    };

    for &j in &order {
        let e = arrival[j - 1];
        depart_until(
            e,
            &mut stack,
            &mut served_since,
            &mut members,
            &mut departure,
            &mut service,
            &mut height,
            &mut events,
            &mut busy_periods,
        );
        if let Some(&(k, _)) = stack.last() {
            service[k - 1].push((served_since, e));
            parent[j - 1] = k;
            depth[j - 1] = depth[k - 1] + 1;
        } else {
            parent[j - 1] = 0;
            depth[j - 1] = 1;
        }
        period_of[j - 1] = busy_periods.len();
        members.push(j);
        pre_level[j - 1] = path.left_value(e);
        stack.push((j, w.weight(j)));
        served_since = e;
        height.push(e, stack.len() as i64);
        events.push(TraceEvent { time: e, kind: EventKind::Arrival, client: j, load: 0.0, height: stack.len() as i64 });
    }
    depart_until(
        f64::INFINITY,
        &mut stack,
        &mut served_since,
        &mut members,
        &mut departure,
        &mut service,
        &mut height,
        &mut events,
        &mut busy_periods,
    );
    for ev in &mut events {
        ev.load = path.value(ev.time);
    }
    let mut served: Vec<(f64, f64, usize)> = service
        .iter()
        .enumerate()
        .flat_map(|(i, iv)| iv.iter().filter(|(a, b)| b > a).map(move |&(a, b)| (a, b, i + 1)))
        .collect();
    served.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(LifoTrace {
        weights: w.clone(),
        arrival,
        order,
        rank,
        path,
        parent,
        depth,
        pre_level,
        departure,
        service,
        height,
        events,
        busy_periods,
        served,
        period_of,
    })
}

impl LifoTrace {
    pub fn client_count(&self) -> usize {
        self.weights.j_max()
    }

    /// Client in service at time `t`, if any.
    pub fn served_at(&self, t: f64) -> Option<usize> {
        let i = self.served.partition_point(|x| x.0 <= t);
        let &(a, b, c) = self.served.get(i.checked_sub(1)?)?;
        (a <= t && t < b).then_some(c)
    }

    /// Index of the busy period containing `t`, if any.
    pub fn busy_period_at(&self, t: f64) -> Option<usize> {
        let i = self.busy_periods.partition_point(|p| p.start <= t).checked_sub(1)?;
        (t < self.busy_periods[i].end).then_some(i)
    }

    /// Busy period index of client `j`.
    pub fn period_of(&self, j: usize) -> usize {
        self.period_of[j - 1]
    }

    /// Reflected load `Y_t − J_t`.
    pub fn reflected(&self, t: f64) -> f64 {
        self.path.value(t) - self.path.running_inf(t)
    }
}

/// Height functional `𝓗_t = #{s ≤ t : inf_{[s,t]} Y > Y_{s−}}` of a path
/// with drift −1, computed from jump levels alone: each jump records its
/// pre-jump level, and a record is discarded when the path returns to it.
pub fn height_of_path(y: &CadlagStepPath) -> IntStepPath {
    let mut out = IntStepPath::constant(0);
    let mut levels: Vec<f64> = Vec::new();
    let (mut t_prev, mut v_prev) = (0.0f64, 0.0f64);
    let pop_until = |limit: f64, levels: &mut Vec<f64>, t_prev: &mut f64, v_prev: &mut f64, out: &mut IntStepPath| {
        while let Some(&level) = levels.last() {
            let hit = *t_prev + (*v_prev - level);
            if hit > limit {
                break;
            }
            levels.pop();
            *t_prev = hit;
            *v_prev = level;
            out.push(hit, levels.len() as i64);
        }
    };
    for (&t, &x) in y.times().iter().zip(y.sizes()) {
        pop_until(t, &mut levels, &mut t_prev, &mut v_prev, &mut out);
        let before = v_prev - (t - t_prev);
        levels.push(before);
        out.push(t, levels.len() as i64);
        t_prev = t;
        v_prev = before + x;
    }
    pop_until(f64::INFINITY, &mut levels, &mut t_prev, &mut v_prev, &mut out);
    out
}

/// A surplus edge: the point `(t, y)` under the reflected load and the
/// resolved time `s = inf{s ≤ t : inf_{[s,t]} (Y − J) > y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pinch {
    pub t: f64,
    pub y: f64,
    pub s: f64,
    /// Client in service at `s` (an ancestor of, or equal to, `v`).
    pub u: usize,
    /// Client in service at `t`.
    pub v: usize,
    pub self_loop: bool,
    /// `y` fell exactly on the boundary between two stacked clients' load
    /// bands; it was assigned to the deeper one.
    pub boundary_tie: bool,
}

impl Pinch {
    pub fn flag(&self) -> &'static str {
        match (self.self_loop, self.boundary_tie) {
            (false, false) => "ok",
            (true, false) => "self_loop",
            (false, true) => "boundary",
            (true, true) => "self_loop+boundary",
        }
    }
}

/// Surplus points of a trace, sorted by `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PinchSetup {
    pub pinches: Vec<Pinch>,
}

impl PinchSetup {
    /// Resolves prescribed points `(t, y)` against a trace.
    pub fn from_points(trace: &LifoTrace, points: &[(f64, f64)]) -> Result<Self, LifoError> {
        let mut pinches = points.iter().map(|&(t, y)| resolve_pinch(trace, t, y)).collect::<Result<Vec<_>, _>>()?;
        pinches.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(Self { pinches })
    }

    pub fn len(&self) -> usize {
        self.pinches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pinches.is_empty()
    }
}

/// Resolves one point `(t, y)` with `0 < y < (Y − J)(t)`.
///
/// The clients stacked at `t` split the reflected load into bands: a client
/// `k` owns `[Y_{E_k−} − J, Y_{E_{k'}−} − J)` where `k'` is its stacked
/// child (the top client's band ends at the current load).  The band
/// containing `y` identifies `u = k` and `s = E_k`.
pub fn resolve_pinch(trace: &LifoTrace, t: f64, y: f64) -> Result<Pinch, LifoError> {
    let period = trace.busy_period_at(t).ok_or(LifoError::OutsideBusyPeriod(t))?;
    let root = trace.busy_periods[period].root;
    let floor = trace.pre_level[root - 1];
    let load = trace.path.value(t) - floor;
    if !(y > 0.0 && y < load) {
        return Err(LifoError::BadLevel { t, y, load });
    }
    let v = trace.served_at(t).ok_or(LifoError::OutsideBusyPeriod(t))?;
    let mut k = v;
    while trace.pre_level[k - 1] - floor > y {
        k = trace.parent[k - 1];
    }
    let boundary_tie = k != root && trace.pre_level[k - 1] - floor == y;
    Ok(Pinch { t, y, s: trace.arrival[k - 1], u: k, v, self_loop: k == v, boundary_tie })
}

/// Samples the Poisson cloud of intensity `σ_1^{-1} 1{0 < y < Y_t − J_t} dt dy`
/// and resolves every point.
pub fn sample_pinches<R: Rng + ?Sized>(trace: &LifoTrace, rng: &mut R) -> PinchSetup {
    // Between consecutive arrivals of a busy period, Y − J decreases linearly
    // from its post-jump value h: each segment is a trapezoid.
    let mut segments: Vec<(f64, f64, f64)> = Vec::new(); // (start, length, h)
    let mut cumulative: Vec<f64> = Vec::new();
    let mut total = ExactSum::new();
    for period in &trace.busy_periods {
        let floor = trace.pre_level[period.root - 1];
        for (i, &c) in period.clients.iter().enumerate() {
            let a = trace.arrival[c - 1];
            let b = period.clients.get(i + 1).map_or(period.end, |&d| trace.arrival[d - 1]);
            let h = trace.path.value(a) - floor;
            let len = b - a;
            total.add(len * (h - 0.5 * len));
            segments.push((a, len, h));
            cumulative.push(total.value());
        }
    }
    let area = total.value();
    let mean = area / trace.weights.sigma1();
    let count = if mean > 0.0 { Poisson::new(mean).expect("finite mean").sample(rng) as usize } else { 0 };
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random::<f64>() * area;
        let idx = cumulative.partition_point(|&c| c <= target).min(segments.len() - 1);
        let (a, len, h) = segments[idx];
        loop {
            let dt = rng.random::<f64>() * len;
            let y = rng.random::<f64>() * h;
            if y > 0.0 && y < h - dt {
                points.push((a + dt, y));
                break;
            }
        }
    }
    PinchSetup::from_points(trace, &points).expect("sampled points lie under the reflected load")
}

/// Tree edges without the root, united with the non-loop pinch edges.
pub fn assemble_graph(trace: &LifoTrace, pinches: &PinchSetup) -> Result<AssembledGraph, LifoError> {
    let n = trace.client_count();
    let mut edges: std::collections::BTreeSet<(usize, usize)> = (1..=n)
        .filter(|&j| trace.parent[j - 1] != 0)
        .map(|j| {
            let p = trace.parent[j - 1];
            (p.min(j), p.max(j))
        })
        .collect();
    let (mut self_loops, mut duplicates) = (0, 0);
    for p in &pinches.pinches {
        let valid = |c: usize| (1..=n).contains(&c);
        if !valid(p.u) || !valid(p.v) || trace.period_of(p.u) != trace.period_of(p.v) {
            return Err(LifoError::Mismatch { u: p.u, v: p.v });
        }
        if p.u == p.v {
            self_loops += 1;
        } else if !edges.insert((p.u.min(p.v), p.u.max(p.v))) {
            duplicates += 1;
        }
    }
    let mut g = AssembledGraph::from_edges(trace.weights.clone(), edges, trace.rank.clone(), Provenance::Lifo);
    g.self_loops = self_loops;
    g.duplicates = duplicates;
    Ok(g)
}
