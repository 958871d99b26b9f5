//! Excursion intervals of coding paths, their canonical ordering (longest
//! first, ties by left endpoint), and relocation of surplus pinches into
//! per-excursion coordinates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifo_coder::{CadlagStepPath, IntStepPath, PinchSetup};
use crate::numeric::ExactSum;

/// Positivity threshold for grid paths: a grid value counts as above its
/// reference only if it exceeds it by more than this.
pub const TOL_EXC: f64 = 1e-12;

/// Default number of masses exported.
pub const DEFAULT_TOP_K: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum ExcursionError {
    #[error("pinch at time {0} lies outside every excursion interval")]
    PinchOutside(f64),
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
}

/// One excursion interval `[left, right)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub left: f64,
    pub right: f64,
    pub length: f64,
    /// False when the excursion was still running at the end of the path.
    pub complete: bool,
}

/// Excursions sorted by nonincreasing length, ties broken by left endpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExcursionDecomposition {
    pub intervals: Vec<Excursion>,
    /// Adjacent pairs (in sorted order) whose lengths differ by at most
    /// `10 · TOL_EXC`: potential ordering ambiguities on grid paths.
    pub near_ties: usize,
}

impl ExcursionDecomposition {
    fn sorted(mut intervals: Vec<Excursion>) -> Self {
        intervals.sort_by(|a, b| b.length.total_cmp(&a.length).then(a.left.total_cmp(&b.left)));
        let near_ties = intervals.windows(2).filter(|p| p[0].length - p[1].length <= 10.0 * TOL_EXC).count();
        Self { intervals, near_ties }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lengths in canonical (nonincreasing) order.
    pub fn masses(&self) -> Vec<f64> {
        self.intervals.iter().map(|e| e.length).collect()
    }

    /// Index (in canonical order) of the excursion containing `t`.
    pub fn containing(&self, t: f64) -> Option<usize> {
        self.intervals.iter().position(|e| e.left <= t && t < e.right)
    }

    /// Total length.
    pub fn total(&self) -> f64 {
        let mut s = ExactSum::new();
        for e in &self.intervals {
            s.add(e.length);
        }
        s.value()
    }
}

/// Maximal intervals where an integer step path is positive.  A path still
/// positive at its last breakpoint yields an open excursion (`right = ∞`).
pub fn excursions_above_zero(h: &IntStepPath) -> ExcursionDecomposition {
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    for (&t, &v) in h.times.iter().zip(&h.values) {
        match (open, v > 0) {
            (None, true) => open = Some(t),
            (Some(l), false) => {
                out.push(Excursion { left: l, right: t, length: t - l, complete: true });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(l) = open {
        out.push(Excursion { left: l, right: f64::INFINITY, length: f64::INFINITY, complete: false });
    }
    ExcursionDecomposition::sorted(out)
}

/// Excursions of a spectrally positive step path (drift −1) above its
/// running infimum.  Lengths are the correctly rounded sums of the jumps of
/// each excursion, which is what the path needs to return to its starting level.
pub fn excursions_of_path(y: &CadlagStepPath) -> ExcursionDecomposition {
    let mut out = Vec::new();
    let mut current: Option<(f64, ExactSum)> = None;
    for (&t, &x) in y.times().iter().zip(y.sizes()) {
        if let Some((start, mass)) = &mut current {
            if t < *start + mass.value() {
                mass.add(x);
                continue;
            }
            let m = mass.value();
            out.push(Excursion { left: *start, right: *start + m, length: m, complete: true });
        }
        let mut mass = ExactSum::new();
        mass.add(x);
        current = Some((t, mass));
    }
    if let Some((start, mass)) = current {
        let m = mass.value();
        out.push(Excursion { left: start, right: start + m, length: m, complete: true });
    }
    ExcursionDecomposition::sorted(out)
}

/// Bookkeeping check that the excursions of a step path carry all of its mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBalance {
    /// Every jump lies in exactly one complete excursion `[left, right)`.
    pub jumps_partitioned: bool,
    /// Each excursion length equals the correctly rounded sum of its jumps, bitwise.
    pub lengths_exact: bool,
    /// The correctly rounded sum of all jumps, grouped by excursion, equals
    /// the reference total bitwise.
    pub total_exact: bool,
    /// `|Σ lengths − total|` in units in the last place of `total`; the
    /// per-excursion roundings allow at most `(K + 1)/2` for `K` excursions.
    pub rounded_gap_ulps: f64,
    pub within_rounding: bool,
}

impl MassBalance {
    pub fn holds(&self) -> bool {
        self.jumps_partitioned && self.lengths_exact && self.total_exact && self.within_rounding
    }
}

/// Checks that `dec` (the excursions of `y`) partitions the jumps of `y` and
/// that their masses add up to `total`.
///
/// Masses are doubles, so "`Σ lengths = total`" is checked in the form that
/// is exact in floating point: each jump is assigned to exactly one
/// excursion, each length is the correctly rounded sum of its own jumps, and
/// the correctly rounded sum over the excursions' jump sets is bitwise
/// `total`.  The sum of the already rounded lengths can still differ from
/// `total` by the accumulated per-excursion rounding, which is reported and
/// bounded separately.
pub fn mass_balance(y: &CadlagStepPath, dec: &ExcursionDecomposition, total: f64) -> MassBalance {
    let mut order: Vec<usize> = (0..dec.len()).collect();
    order.sort_by(|&a, &b| dec.intervals[a].left.total_cmp(&dec.intervals[b].left));
    let mut sums = vec![ExactSum::new(); dec.len()];
    let mut all = ExactSum::new();
    // Complete, pairwise disjoint intervals, so each time has at most one home.
    let mut partitioned = dec.intervals.iter().all(|e| e.complete)
        && order.windows(2).all(|p| dec.intervals[p[0]].right <= dec.intervals[p[1]].left);
    for (&t, &x) in y.times().iter().zip(y.sizes()) {
        // The last interval starting at or before t is the only candidate.
        let k = order.partition_point(|&i| dec.intervals[i].left <= t);
        match k.checked_sub(1).map(|k| order[k]) {
            Some(i) if t < dec.intervals[i].right => {
                sums[i].add(x);
                all.add(x);
            }
            _ => partitioned = false,
        }
    }
    let lengths_exact = dec.intervals.iter().zip(&sums).all(|(e, s)| s.value() == e.length);
    let total_exact = all.value() == total;
    let ulp = f64::from_bits(total.abs().to_bits() + 1) - total.abs();
    let gap = (dec.total() - total).abs() / ulp;
    MassBalance {
        jumps_partitioned: partitioned,
        lengths_exact,
        total_exact,
        rounded_gap_ulps: gap,
        within_rounding: gap <= (dec.len() as f64 + 1.0) / 2.0,
    }
}

/// Excursion lengths of a step path above its running infimum, nonincreasing.
pub fn excursion_masses(y: &CadlagStepPath) -> Vec<f64> {
    excursions_of_path(y).masses()
}

/// Maximal runs of grid points where `above(k)` holds.  Endpoints are grid
/// times: an excursion spans from its first positive grid time to the
/// first grid time where the path is back at its reference.
fn grid_runs(n: usize, dt: f64, above: impl Fn(usize) -> bool) -> Vec<Excursion> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for k in 0..n {
        match (open, above(k)) {
            (None, true) => open = Some(k),
            (Some(l), false) => {
                out.push(Excursion { left: l as f64 * dt, right: k as f64 * dt, length: (k - l) as f64 * dt, complete: true });
                open = None;
            }
            _ => {}
        }
    }
    // A run opening at the last grid point has no observed length.
    if let Some(l) = open.filter(|&l| l + 1 < n) {
        let last = (n - 1) as f64 * dt;
        out.push(Excursion { left: l as f64 * dt, right: last, length: last - l as f64 * dt, complete: false });
    }
    out
}

/// Excursions above zero of a grid path `h(k·dt)`.
pub fn excursions_above_zero_grid(values: &[f64], dt: f64) -> Result<ExcursionDecomposition, ExcursionError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ExcursionError::BadStep(dt));
    }
    Ok(ExcursionDecomposition::sorted(grid_runs(values.len(), dt, |k| values[k] > TOL_EXC)))
}

/// Excursions of a grid path `y(k·dt)` above its running infimum.
pub fn excursions_above_infimum_grid(values: &[f64], dt: f64) -> Result<ExcursionDecomposition, ExcursionError> {
    excursions_above_infimum_grid_with_jumps(values, values, dt)
}

/// Same as [`excursions_above_infimum_grid`] for a path with jumps, given
/// also `pre_jump[k]`, the value at `k·dt` without the jumps that occurred
/// in the cell `((k−1)·dt, k·dt]`.  The running infimum then sees the level
/// just before each jump, which the grid values alone miss.
pub fn excursions_above_infimum_grid_with_jumps(
    values: &[f64],
    pre_jump: &[f64],
    dt: f64,
) -> Result<ExcursionDecomposition, ExcursionError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ExcursionError::BadStep(dt));
    }
    assert_eq!(values.len(), pre_jump.len(), "one pre-jump value per grid point");
    let mut inf = f64::INFINITY;
    let reflected: Vec<f64> = values
        .iter()
        .zip(pre_jump)
        .map(|(&v, &p)| {
            inf = inf.min(v).min(p);
            v - inf
        })
        .collect();
    Ok(ExcursionDecomposition::sorted(grid_runs(values.len(), dt, |k| reflected[k] > TOL_EXC)))
}

/// Keeps the `k` largest masses (input already sorted nonincreasing).
pub fn top_k(masses: &[f64], k: usize) -> Vec<f64> {
    masses.iter().copied().take(k).collect()
}

/// A pinch in the coordinates of its excursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPinch {
    /// `s − left`.
    pub s: f64,
    /// `t − left`.
    pub t: f64,
    pub y: f64,
    pub u: usize,
    pub v: usize,
}

/// Distributes pinches over the excursions (in canonical order), shifting
/// their times to start at the excursion's left endpoint.
pub fn assign_pinches(dec: &ExcursionDecomposition, pinches: &PinchSetup) -> Result<Vec<Vec<LocalPinch>>, ExcursionError> {
    let mut out = vec![Vec::new(); dec.len()];
    for p in &pinches.pinches {
        let k = dec.containing(p.t).ok_or(ExcursionError::PinchOutside(p.t))?;
        let l = dec.intervals[k].left;
        out[k].push(LocalPinch { s: p.s - l, t: p.t - l, y: p.y, u: p.u, v: p.v });
    }
    for list in &mut out {
        list.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    Ok(out)
}
