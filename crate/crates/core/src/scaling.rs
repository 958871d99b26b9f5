//! Laplace exponents of the limit family, their inverse and largest root, the
//! extinction profile of the associated branching process, discrete exponents
//! of scaling triples, regime diagnostics, and the Aldous–Limic
//! reparametrisation.

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{exp_compensator, integrate, stable_sum, CompensatedSum};
use crate::weights::{LimitParams, ScalingTriple};

/// Absolute tolerance on λ for inversion by bisection.
pub const TOL_INV: f64 = 1e-10;
/// Maximal number of bisection (or bracket-doubling) steps.
pub const MAX_BISECTION: usize = 200;
/// Number of jump-size ratios `w_j / a_n` reported per triple.
pub const C3_WINDOW: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ScalingError {
    #[error("exponent is identically zero or does not tend to infinity; its inverse is undefined")]
    Degenerate,
    #[error("bisection did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("the exponent does not satisfy the integrability condition at infinity")]
    NotGrey,
    #[error("argument must be {0}")]
    BadArgument(&'static str),
    #[error("scaling family must be nonempty with strictly increasing indices")]
    BadFamily,
}

/// Value of the Laplace exponent with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    /// Upper bound `½κλ² Σ_{j>J} c_j³` on the neglected jump terms.
    pub tail_bound: f64,
}

/// `ψ(λ) = αλ + ½βλ² + Σ_{j≤J} κc_j(e^{-λc_j} − 1 + λc_j)`, truncated after
/// `truncation` jump sizes (clamped to the length of `c`).
pub fn psi_eval(p: &LimitParams, lambda: f64, truncation: usize) -> PsiValue {
    let j = truncation.min(p.c.len());
    let mut acc = CompensatedSum::new();
    acc.add(p.alpha * lambda);
    acc.add(0.5 * p.beta * lambda * lambda);
    for &c in &p.c[..j] {
        acc.add(p.kappa * c * exp_compensator(lambda * c));
    }
    let rest = stable_sum(p.c[j..].iter().map(|c| c * c * c));
    PsiValue { value: acc.value(), tail_bound: 0.5 * p.kappa * lambda * lambda * rest }
}

/// `ψ(λ)` with every stored jump size.
pub fn psi(p: &LimitParams, lambda: f64) -> f64 {
    psi_eval(p, lambda, p.c.len()).value
}

/// `ψ` tends to infinity and is not identically zero.
fn is_nondegenerate(p: &LimitParams) -> bool {
    p.beta > 0.0 || p.alpha + p.kappa * stable_sum(p.c.iter().map(|c| c * c)) > 0.0
}

/// `ψ^{-1}(y) = inf{u ≥ 0 : ψ(u) > y}` for `y ≥ 0`, by bracketed bisection.
///
/// Because `ψ` is convex with `ψ(0) = 0`, the set `{u ≥ 0 : ψ(u) ≤ y}` is an
/// interval containing 0, so the predicate `ψ(u) > y` is monotone.
pub fn psi_inverse(p: &LimitParams, y: f64) -> Result<f64, ScalingError> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(ScalingError::BadArgument("a finite nonnegative number"));
    }
    if !is_nondegenerate(p) {
        return Err(ScalingError::Degenerate);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while psi(p, hi) <= y {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BISECTION {
            return Err(ScalingError::NonConvergence(MAX_BISECTION));
        }
    }
    for _ in 0..MAX_BISECTION {
        if hi - lo <= TOL_INV {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if psi(p, mid) > y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(ScalingError::NonConvergence(MAX_BISECTION))
}

/// Largest root `ϱ = ψ^{-1}(0)`; zero whenever `α ≥ 0`.
pub fn largest_root(p: &LimitParams) -> Result<f64, ScalingError> {
    if !is_nondegenerate(p) {
        return Err(ScalingError::Degenerate);
    }
    if p.alpha >= 0.0 {
        return Ok(0.0);
    }
    psi_inverse(p, 0.0)
}

/// Root, integrability at infinity, and the tail integral of `1/ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiReport {
    pub root: f64,
    /// `∫_{1+2ϱ}^∞ dλ/ψ(λ)`, `None` when the integral diverges.
    pub grey_integral_tail: Option<f64>,
    pub is_grey: bool,
}

/// Quadrature cutoff: beyond it `1/ψ` is integrated analytically.
fn cutoff(root: f64) -> f64 {
    (1e6f64).max(1e3 * root)
}

/// `∫_v^∞ dλ/ψ(λ)` for `v > ϱ`.
///
/// The integration variable is `x = λ − ϱ` on a logarithmic scale, which
/// tames both the pole at `ϱ` and the many decades up to the cutoff; the
/// remainder uses `ψ(λ) ≈ ½β'λ²` with `β' = 2ψ(Λ)/Λ²` fitted at the cutoff.
fn reciprocal_integral(p: &LimitParams, root: f64, v: f64) -> f64 {
    let lmax = cutoff(root);
    let tail_from = |x: f64| x / psi(p, x);
    if v >= lmax {
        return tail_from(v);
    }
    let f = |u: f64| {
        let x = u.exp();
        x / psi(p, root + x)
    };
    let (body, _) = integrate(f, (v - root).ln(), (lmax - root).ln(), 1e-15, 1e-12, 4000);
    body + tail_from(lmax)
}

/// Reports root and integrability. For finite jump vectors
/// `ψ(λ) = ½βλ² + O(λ)`, so `∫^∞ dλ/ψ < ∞` exactly when `β > 0`.
pub fn psi_report(p: &LimitParams) -> Result<PsiReport, ScalingError> {
    let root = largest_root(p)?;
    let is_grey = p.beta > 0.0;
    let grey_integral_tail = is_grey.then(|| reciprocal_integral(p, root, 1.0 + 2.0 * root));
    Ok(PsiReport { root, grey_integral_tail, is_grey })
}

/// Solves `∫_{v}^∞ dλ/ψ(λ) = t` for `v > ϱ` by bisection on `log(v − ϱ)`.
pub fn extinction_profile(p: &LimitParams, t: f64) -> Result<f64, ScalingError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ScalingError::BadArgument("a finite positive time"));
    }
    let report = psi_report(p)?;
    if !report.is_grey {
        return Err(ScalingError::NotGrey);
    }
    let root = report.root;
    let big = |x: f64| reciprocal_integral(p, root, root + x.exp());
    // Bracket log(v − ϱ) in [lo, hi] with F(lo) ≥ t > F(hi).
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut steps = 0;
    while big(hi) >= t {
        hi += 2.0;
        steps += 1;
        if steps > MAX_BISECTION {
            return Err(ScalingError::NonConvergence(MAX_BISECTION));
        }
    }
    while big(lo) < t {
        lo -= 2.0;
        steps += 1;
        if steps > MAX_BISECTION {
            return Err(ScalingError::NonConvergence(MAX_BISECTION));
        }
    }
    for _ in 0..MAX_BISECTION {
        if hi - lo <= 1e-13 {
            return Ok(root + (0.5 * (lo + hi)).exp());
        }
        let mid = 0.5 * (lo + hi);
        if big(mid) >= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(ScalingError::NonConvergence(MAX_BISECTION))
}

/// `∫_v^∞ dλ/ψ(λ)` (used to check the extinction profile).
pub fn reciprocal_tail_integral(p: &LimitParams, v: f64) -> Result<f64, ScalingError> {
    let root = largest_root(p)?;
    if v <= root {
        return Err(ScalingError::BadArgument("above the largest root"));
    }
    Ok(reciprocal_integral(p, root, v))
}

/// Drift coefficient `(b/a)(1 − σ_2/σ_1)` of the discrete exponent.
pub fn discrete_drift(t: &ScalingTriple) -> f64 {
    (t.b / t.a) * (1.0 - t.weights.sigma2() / t.weights.sigma1())
}

/// Discrete exponent `ψ_n(λ)` of a scaling triple.
pub fn psi_n_eval(t: &ScalingTriple, lambda: f64) -> f64 {
    discrete_drift(t) * lambda + psi_n_jump_part(t, lambda)
}

/// The jump part `(ab/σ_1) Σ_j (w_j/a)(e^{-λw_j/a} − 1 + λw_j/a)` of `ψ_n`.
pub fn psi_n_jump_part(t: &ScalingTriple, lambda: f64) -> f64 {
    let scale = t.a * t.b / t.weights.sigma1();
    let sum = stable_sum(t.weights.as_slice().iter().map(|&w| {
        let x = w / t.a;
        x * exp_compensator(lambda * x)
    }));
    scale * sum
}

/// Trajectory of one regime quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryVerdict {
    pub target: f64,
    pub last: f64,
    /// `|last − target|`.
    pub last_gap: f64,
    /// Whether `|value − target|` never increases along the family.
    pub gap_nonincreasing: bool,
}

impl TrajectoryVerdict {
    fn from_values(values: &[f64], target: f64) -> Self {
        let gaps: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
        let last = *values.last().expect("nonempty family");
        Self {
            target,
            last,
            last_gap: (last - target).abs(),
            gap_nonincreasing: gaps.windows(2).all(|g| g[1] <= g[0]),
        }
    }
}

/// Diagnostic verdict on the height-process condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeightConditionVerdict {
    /// `b_n/a_n²` stays bounded away from zero, which suffices on its own.
    SatisfiedBrownianPart { beta0_proxy: f64 },
    /// Finite-size integrals only: for each `y`, the maximum over the family of
    /// `∫_y^{a_n} dλ/ψ_n`.  The limit in `n` is an extrapolation and is flagged.
    FiniteSizeIntegrals { y_grid: Vec<f64>, max_over_family: Vec<Option<f64>>, extrapolated: bool },
}

/// One row of a regime report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
    pub b_over_a: f64,
    pub b_over_a2: f64,
    pub ab_over_sigma1: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: Vec<f64>,
    /// `∫_y^{a_n} dλ/ψ_n(λ)` per grid value; `None` where `ψ_n(y) ≤ 0`.
    pub c4: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub rows: Vec<RegimeRow>,
    pub y_grid: Vec<f64>,
    pub drift: TrajectoryVerdict,
    pub variance: TrajectoryVerdict,
    pub jump_sizes: Vec<TrajectoryVerdict>,
    pub kappa: TrajectoryVerdict,
    pub height_condition: HeightConditionVerdict,
}

/// `∫_y^{a} dλ/ψ_n(λ)`, `None` if `ψ_n(y) ≤ 0`.
fn discrete_height_integral(t: &ScalingTriple, y: f64) -> Option<f64> {
    if y >= t.a {
        return Some(0.0);
    }
    if !(y > 0.0) || psi_n_eval(t, y) <= 0.0 {
        return None;
    }
    let f = |u: f64| {
        let x = u.exp();
        x / psi_n_eval(t, x)
    };
    Some(integrate(f, y.ln(), t.a.ln(), 1e-14, 1e-10, 2000).0)
}

/// Evaluates the a-priori estimates and the convergence conditions of a
/// scaling family against the limit `p`.  Never fails on a bad fit: verdicts
/// are diagnostics.
pub fn check_regime(family: &[ScalingTriple], p: &LimitParams, y_grid: &[f64]) -> Result<RegimeReport, ScalingError> {
    if family.is_empty() || family.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(ScalingError::BadFamily);
    }
    let rows: Vec<RegimeRow> = family
        .iter()
        .map(|t| {
            let w = &t.weights;
            let window = C3_WINDOW.min(w.j_max());
            RegimeRow {
                n: t.n,
                a_n: t.a,
                b_n: t.b,
                b_over_a: t.b / t.a,
                b_over_a2: t.b / (t.a * t.a),
                ab_over_sigma1: t.a * t.b / w.sigma1(),
                c1: discrete_drift(t),
                c2: (t.b / (t.a * t.a)) * w.sigma3() / w.sigma1(),
                c3: w.as_slice()[..window].iter().map(|x| x / t.a).collect(),
                c4: y_grid.iter().map(|&y| discrete_height_integral(t, y)).collect(),
            }
        })
        .collect();
    let column = |f: &dyn Fn(&RegimeRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let drift = TrajectoryVerdict::from_values(&column(&|r| r.c1), p.alpha);
    let variance = TrajectoryVerdict::from_values(&column(&|r| r.c2), p.beta + p.kappa * p.sigma3_c());
    let kappa = TrajectoryVerdict::from_values(&column(&|r| r.ab_over_sigma1), p.kappa);
    let shortest = rows.iter().map(|r| r.c3.len()).min().unwrap_or(0);
    let jump_sizes = (0..shortest)
        .map(|j| {
            let target = p.c.get(j).copied().unwrap_or(0.0);
            TrajectoryVerdict::from_values(&column(&|r| r.c3[j]), target)
        })
        .collect();
    let beta0 = column(&|r| r.b_over_a2);
    let max_b = beta0.iter().cloned().fold(f64::MIN, f64::max);
    let min_b = beta0.iter().cloned().fold(f64::MAX, f64::min);
    let beta0_proxy = *beta0.last().expect("nonempty");
    // Bounded away from zero: no decay by more than half along the family.
    let height_condition = if min_b > 0.0 && min_b >= 0.5 * max_b {
        HeightConditionVerdict::SatisfiedBrownianPart { beta0_proxy }
    } else {
        let max_over_family = (0..y_grid.len())
            .map(|k| {
                rows.iter()
                    .map(|r| r.c4[k])
                    .try_fold(f64::MIN, |m, v| v.map(|v| m.max(v)))
            })
            .collect();
        HeightConditionVerdict::FiniteSizeIntegrals { y_grid: y_grid.to_vec(), max_over_family, extrapolated: true }
    };
    Ok(RegimeReport { rows, y_grid: y_grid.to_vec(), drift, variance, jump_sizes, kappa, height_condition })
}

/// Aldous–Limic parameters `(κ_AL, τ_AL, c) = (β/κ, α/κ, c)`.
pub fn aldous_limic_params(p: &LimitParams) -> (f64, f64, Vec<f64>) {
    (p.beta / p.kappa, p.alpha / p.kappa, p.c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{gen_er_triple, WeightSeq};
    use approx::assert_relative_eq;

    fn lp(alpha: f64, beta: f64, kappa: f64, c: &[f64]) -> LimitParams {
        LimitParams::new(alpha, beta, kappa, c.to_vec()).unwrap()
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_eval(&lp(0.0, 1.0, 1.0, &[]), 1.0, 0).value, 0.5);
        assert_eq!(psi_eval(&lp(1.0, 0.0, 1.0, &[]), 2.0, 0).value, 2.0);
        assert_relative_eq!(psi_eval(&lp(0.0, 0.0, 1.0, &[1.0]), 1.0, 1).value, (-1f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(psi(&lp(0.0, 0.0, 1.0, &[1.0]), 1.0), 0.367_879_441_171_442_3, epsilon = 1e-15);
    }

    #[test]
    fn truncation_bound_dominates_neglected_terms() {
        let p = lp(0.2, 0.5, 1.5, &[1.0, 0.7, 0.4, 0.1]);
        for &l in &[0.1, 1.0, 7.0] {
            let full = psi_eval(&p, l, 4).value;
            let cut = psi_eval(&p, l, 2);
            assert!(full - cut.value >= 0.0);
            assert!(full - cut.value <= cut.tail_bound + 1e-15);
        }
    }

    #[test]
    fn inverse_and_root_examples() {
        assert!((psi_inverse(&lp(0.0, 1.0, 1.0, &[]), 2.0).unwrap() - 2.0).abs() <= TOL_INV);
        assert!((largest_root(&lp(-1.0, 1.0, 1.0, &[])).unwrap() - 2.0).abs() <= TOL_INV);
        assert_eq!(largest_root(&lp(0.5, 1.0, 1.0, &[0.3])).unwrap(), 0.0);
        assert_eq!(largest_root(&lp(0.0, 0.0, 1.0, &[])), Err(ScalingError::Degenerate));
        assert_eq!(psi_inverse(&lp(-1.0, 0.0, 1.0, &[0.5]), 0.0), Err(ScalingError::Degenerate));
    }

    #[test]
    fn extinction_profile_examples() {
        let p = lp(0.0, 1.0, 1.0, &[]);
        assert_relative_eq!(extinction_profile(&p, 1.0).unwrap(), 2.0, max_relative = 1e-9);
        assert_relative_eq!(extinction_profile(&p, 2.0).unwrap(), 1.0, max_relative = 1e-9);
        let mut last = f64::INFINITY;
        for t in [1.0, 10.0, 100.0, 1e4, 1e6] {
            let v = extinction_profile(&p, t).unwrap();
            assert!(v < last && v > 0.0);
            last = v;
        }
        assert!(last < 1e-5);
        assert_eq!(extinction_profile(&lp(1.0, 0.0, 1.0, &[1.0]), 1.0), Err(ScalingError::NotGrey));
    }

    #[test]
    fn discrete_exponent_examples() {
        let w = WeightSeq::new(vec![1.0]).unwrap();
        let t = ScalingTriple::new(1, 1.0, 1.0, w, None).unwrap();
        assert_relative_eq!(psi_n_eval(&t, 1.0), (-1f64).exp(), epsilon = 1e-15);
        assert_eq!(psi_n_eval(&t, 0.0), 0.0);
        let w = WeightSeq::new(vec![2.0, 1.0, 1.0]).unwrap();
        let t = ScalingTriple::new(3, 2.0, 4.0, w, None).unwrap();
        assert_eq!(discrete_drift(&t), -1.0);
        let h = 1e-7;
        assert_relative_eq!(psi_n_eval(&t, h) / h, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn aldous_limic_examples() {
        assert_eq!(aldous_limic_params(&lp(1.0, 2.0, 2.0, &[0.5])), (1.0, 0.5, vec![0.5]));
        assert_eq!(aldous_limic_params(&lp(0.0, 3.0, 2.0, &[])).1, 0.0);
        assert_eq!(aldous_limic_params(&lp(1.0, 0.0, 2.0, &[])).0, 0.0);
    }

    #[test]
    fn regime_on_constant_family_is_flat() {
        let t = gen_er_triple(50, 1.0 - (-1.0f64 / 50.0).exp()).unwrap();
        let mut fam = Vec::new();
        for n in 1..4 {
            let mut u = t.clone();
            u.n = n;
            fam.push(u);
        }
        let r = check_regime(&fam, &lp(0.0, 1.0, 1.0, &[]), &[0.5, 1.0]).unwrap();
        for row in &r.rows {
            assert_eq!(row.c1, r.rows[0].c1);
            assert_eq!(row.c2, r.rows[0].c2);
            assert_eq!(row.c4, r.rows[0].c4);
        }
        assert!(matches!(r.height_condition, HeightConditionVerdict::SatisfiedBrownianPart { .. }));
        assert_eq!(check_regime(&[], &lp(0.0, 1.0, 1.0, &[]), &[]), Err(ScalingError::BadFamily));
    }
}
