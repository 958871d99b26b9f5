//! Weight sequences, their moments and criticality, and the two canonical
//! scaling families (Erdős–Rényi and power-law).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{integrate, stable_sum};

/// Relative band used to call a weight sequence critical (`σ_2 = σ_1`).
pub const TOL_CRIT: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("weight sequence has no positive entry")]
    Empty,
    #[error("weight {index} is not a finite nonnegative number: {value}")]
    InvalidEntry { index: usize, value: f64 },
    #[error("edge probability must lie strictly between 0 and 1, got {0}")]
    BadProbability(f64),
    #[error("size parameter n must be at least 1")]
    BadSize,
    #[error("tail exponent must lie in (2, 3), got {0}")]
    BadExponent(f64),
    #[error("{name} must be finite and positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("tilt factor {0} is not positive: the family is not defined at this size")]
    NonPositiveTilt(f64),
    #[error("tabulated quantile function is invalid: {0}")]
    BadTabulation(String),
    #[error("invalid limit parameters: {0}")]
    BadLimit(String),
}

/// A finite, nonincreasing vector of positive weights with cached moments.
///
/// Zero entries are dropped at construction; the remaining entries are sorted
/// in nonincreasing order, so client/vertex `j` (1-based) carries `w[j-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightSeq {
    w: Vec<f64>,
    sigma: [f64; 3],
}

impl TryFrom<Vec<f64>> for WeightSeq {
    type Error = WeightError;
    fn try_from(w: Vec<f64>) -> Result<Self, Self::Error> {
        WeightSeq::new(w)
    }
}

impl From<WeightSeq> for Vec<f64> {
    fn from(w: WeightSeq) -> Self {
        w.w
    }
}

impl WeightSeq {
    /// Validates, drops zeros and sorts in nonincreasing order.
    pub fn new(mut w: Vec<f64>) -> Result<Self, WeightError> {
        for (index, &value) in w.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(WeightError::InvalidEntry { index, value });
            }
        }
        w.retain(|&x| x > 0.0);
        if w.is_empty() {
            return Err(WeightError::Empty);
        }
        w.sort_by(|a, b| b.total_cmp(a));
        let sigma = [1.0, 2.0, 3.0].map(|r| stable_sum(w.iter().map(|&x| x.powf(r))));
        Ok(Self { w, sigma })
    }

    /// The weights, nonincreasing.
    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// Weight of vertex/client `j` (1-based).
    pub fn weight(&self, j: usize) -> f64 {
        self.w[j - 1]
    }

    /// Number of positive entries.
    pub fn j_max(&self) -> usize {
        self.w.len()
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma[1]
    }

    pub fn sigma3(&self) -> f64 {
        self.sigma[2]
    }

    /// Multiplies every weight by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self, WeightError> {
        Self::new(self.w.iter().map(|x| x * t).collect())
    }
}

/// `Σ_j w_j^r` over the positive entries.
///
/// # Panics
/// If `r` is not positive.
pub fn sigma_r(w: &WeightSeq, r: f64) -> f64 {
    assert!(r > 0.0, "moment order must be positive");
    match r {
        1.0 => w.sigma1(),
        2.0 => w.sigma2(),
        3.0 => w.sigma3(),
        _ => stable_sum(w.as_slice().iter().map(|&x| x.powf(r))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// Compares `σ_2` with `σ_1` using the relative band [`TOL_CRIT`].
pub fn classify_criticality(w: &WeightSeq) -> Criticality {
    let rel = (w.sigma2() - w.sigma1()) / w.sigma1();
    if rel.abs() <= TOL_CRIT {
        Criticality::Critical
    } else if rel > 0.0 {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    }
}

/// Parameters `(α, β, κ, c)` of a continuum limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub c: Vec<f64>,
}

impl LimitParams {
    pub fn new(alpha: f64, beta: f64, kappa: f64, c: Vec<f64>) -> Result<Self, WeightError> {
        let p = Self { alpha, beta, kappa, c };
        p.validate()?;
        Ok(p)
    }

    /// Checks finiteness, `β ≥ 0`, `κ > 0` and that `c` is nonincreasing and nonnegative.
    pub fn validate(&self) -> Result<(), WeightError> {
        if !self.alpha.is_finite() {
            return Err(WeightError::BadLimit("alpha must be finite".into()));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(WeightError::BadLimit("beta must be finite and nonnegative".into()));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(WeightError::BadLimit("kappa must be finite and positive".into()));
        }
        if self.c.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(WeightError::BadLimit("c entries must be finite and nonnegative".into()));
        }
        if self.c.windows(2).any(|p| p[1] > p[0]) {
            return Err(WeightError::BadLimit("c must be nonincreasing".into()));
        }
        Ok(())
    }

    /// `σ_3(c)` over the stored entries.
    pub fn sigma3_c(&self) -> f64 {
        stable_sum(self.c.iter().map(|x| x * x * x))
    }
}

/// A discrete family member `(a_n, b_n, w_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTriple {
    pub n: u64,
    pub a: f64,
    pub b: f64,
    pub weights: WeightSeq,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitParams>,
}

impl ScalingTriple {
    pub fn new(n: u64, a: f64, b: f64, weights: WeightSeq, limit: Option<LimitParams>) -> Result<Self, WeightError> {
        if n == 0 {
            return Err(WeightError::BadSize);
        }
        for (name, value) in [("a", a), ("b", b)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(WeightError::NotPositive { name, value });
            }
        }
        Ok(Self { n, a, b, weights, limit })
    }
}

/// Erdős–Rényi family: `n` vertices of weight `n·log(1/(1-p))`, `a = n^{1/3}`, `b = a²`.
///
/// With `p = 1 - exp(-x/n)` every pair is joined with probability `p`.  The
/// limit `(α, β, κ, c) = (0, 1, 1, ∅)` is attached when the weights equal one.
pub fn gen_er_triple(n: u64, p: f64) -> Result<ScalingTriple, WeightError> {
    if n == 0 {
        return Err(WeightError::BadSize);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(WeightError::BadProbability(p));
    }
    let value = n as f64 * -(-p).ln_1p();
    let weights = WeightSeq::new(vec![value; n as usize])?;
    let a = (n as f64).cbrt();
    // b is defined as a² so that b/a² = 1 holds exactly in floating point.
    let b = a * a;
    // (b/a)(1 - σ2/σ1) = a(1 - value) is the centred drift of the family.
    let limit = LimitParams::new(a * (1.0 - value), 1.0, 1.0, Vec::new()).ok();
    ScalingTriple::new(n, a, b, weights, limit)
}

/// Quantile function `G(y) = sup{x : P(W ≥ x) ≥ y}` of the weight tail.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerLawTail {
    /// `P(W ≥ x) = x^{-ρ}` for `x ≥ 1`, i.e. `G(y) = y^{-1/ρ}` on `(0, 1]`.
    Pure,
    /// Tabulated quantile: strictly increasing `y` nodes in `(0, 1]`, strictly
    /// decreasing `g` values, log–log linear interpolation between nodes.
    /// Flat stretches (atoms of `W`) are rejected.
    Tabulated { y: Vec<f64>, g: Vec<f64> },
}

impl PowerLawTail {
    fn validate(&self) -> Result<(), WeightError> {
        if let PowerLawTail::Tabulated { y, g } = self {
            if y.len() < 2 || y.len() != g.len() {
                return Err(WeightError::BadTabulation("need at least two (y, g) nodes of equal count".into()));
            }
            if y.iter().chain(g.iter()).any(|v| !(v.is_finite() && *v > 0.0)) || *y.last().unwrap() > 1.0 {
                return Err(WeightError::BadTabulation("nodes must be positive with y in (0, 1]".into()));
            }
            if y.windows(2).any(|p| p[1] <= p[0]) {
                return Err(WeightError::BadTabulation("y nodes must be strictly increasing".into()));
            }
            if g.windows(2).any(|p| p[1] >= p[0]) {
                return Err(WeightError::BadTabulation(
                    "g must be strictly decreasing; flat stretches are atoms of W and are rejected".into(),
                ));
            }
        }
        Ok(())
    }

    /// Evaluates `G(y)` for `y ∈ (0, 1]`.
    pub fn quantile(&self, rho: f64, y: f64) -> Result<f64, WeightError> {
        match self {
            PowerLawTail::Pure => Ok(y.powf(-1.0 / rho)),
            PowerLawTail::Tabulated { y: ys, g } => {
                if y < ys[0] || y > *ys.last().unwrap() {
                    return Err(WeightError::BadTabulation(format!("y = {y} outside the tabulated range")));
                }
                let i = ys.partition_point(|&v| v <= y).clamp(1, ys.len() - 1);
                let (y0, y1) = (ys[i - 1].ln(), ys[i].ln());
                let (g0, g1) = (g[i - 1].ln(), g[i].ln());
                let s = (y.ln() - y0) / (y1 - y0);
                Ok((g0 + s * (g1 - g0)).exp())
            }
        }
    }
}

/// `∫_0^1 y {y^{-ρ}} dy`, `{·}` the fractional part.
///
/// Substituting `x = y^{-ρ}` gives `(1/ρ) ∫_1^∞ {x} x^{-s-1} dx` with
/// `s = 2/ρ`.  Each unit interval `[k, k+1)` is integrated by a Kronrod panel
/// (the integrand is smooth there); beyond `K = 10⁴` the Euler–Maclaurin
/// expansion `K^{-s}/(2s) − K^{-s-1}/12` is exact to `O(K^{-s-3})`.
pub fn fractional_part_integral(rho: f64) -> f64 {
    const K: u32 = 10_000;
    let s = 2.0 / rho;
    let mut acc = crate::numeric::ExactSum::new();
    for k in 1..K {
        let kf = k as f64;
        let (v, _) = integrate(|u| u * (kf + u).powf(-s - 1.0), 0.0, 1.0, 0.0, 1e-15, 1);
        acc.add(v);
    }
    let kf = K as f64;
    acc.add(kf.powf(-s) / (2.0 * s) - kf.powf(-s - 1.0) / 12.0);
    acc.value() / rho
}

/// Centring constant `α_0 = 2κq² (∫_0^1 y{y^{-ρ}} dy + 1/(ρ − 2))` of the power-law family.
pub fn powerlaw_alpha0(rho: f64, q: f64, kappa: f64) -> f64 {
    2.0 * kappa * q * q * (fractional_part_integral(rho) + 1.0 / (rho - 2.0))
}

/// Power-law family with tail exponent `ρ ∈ (2, 3)`.
///
/// Raw weights `w_j = G(j/n)`, `j = 1..n`; `a_n = G(1/n)/q`;
/// `b_n = κσ_1(raw)/a_n`; the returned weights are the raw ones multiplied by
/// the tilt `1 − (a_n/b_n)(α − α_0)`, which centres the drift at `α`.
pub fn gen_powerlaw_triple(n: u64, rho: f64, q: f64, kappa: f64, alpha: f64) -> Result<ScalingTriple, WeightError> {
    gen_powerlaw_triple_with_tail(n, rho, q, kappa, alpha, &PowerLawTail::Pure)
}

/// [`gen_powerlaw_triple`] with an explicit tail quantile function.
pub fn gen_powerlaw_triple_with_tail(
    n: u64,
    rho: f64,
    q: f64,
    kappa: f64,
    alpha: f64,
    tail: &PowerLawTail,
) -> Result<ScalingTriple, WeightError> {
    if n == 0 {
        return Err(WeightError::BadSize);
    }
    if !(rho > 2.0 && rho < 3.0) {
        return Err(WeightError::BadExponent(rho));
    }
    for (name, value) in [("q", q), ("kappa", kappa)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(WeightError::NotPositive { name, value });
        }
    }
    if !alpha.is_finite() {
        return Err(WeightError::BadLimit("alpha must be finite".into()));
    }
    tail.validate()?;
    let nf = n as f64;
    let raw = (1..=n).map(|j| tail.quantile(rho, j as f64 / nf)).collect::<Result<Vec<_>, _>>()?;
    let raw = WeightSeq::new(raw)?;
    let a = raw.weight(1) / q;
    let b = kappa * raw.sigma1() / a;
    let tilt = 1.0 - (a / b) * (alpha - powerlaw_alpha0(rho, q, kappa));
    if !(tilt > 0.0) {
        return Err(WeightError::NonPositiveTilt(tilt));
    }
    let weights = raw.scaled(tilt)?;
    // Limit parameters, truncated to the first n jump sizes c_j = q j^{-1/ρ}.
    let c = (1..=n.min(10_000)).map(|j| q * (j as f64).powf(-1.0 / rho)).collect();
    let limit = LimitParams::new(alpha, 0.0, kappa, c).ok();
    ScalingTriple::new(n, a, b, weights, limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ws(v: &[f64]) -> WeightSeq {
        WeightSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_r(&ws(&[2.0, 1.0, 1.0]), 1.0), 4.0);
        assert_eq!(sigma_r(&ws(&[2.0, 1.0, 1.0]), 3.0), 10.0);
        assert_eq!(sigma_r(&ws(&[1.0]), 2.5), 1.0);
    }

    #[test]
    fn criticality_examples() {
        assert_eq!(classify_criticality(&ws(&[1.0, 1.0, 1.0])), Criticality::Critical);
        assert_eq!(classify_criticality(&ws(&[2.0, 1.0, 1.0])), Criticality::Supercritical);
        assert_eq!(classify_criticality(&ws(&[0.5, 0.5])), Criticality::Subcritical);
    }

    #[test]
    fn construction_sorts_and_drops_zeros() {
        let w = ws(&[1.0, 0.0, 3.0, 2.0]);
        assert_eq!(w.as_slice(), &[3.0, 2.0, 1.0]);
        assert_eq!(w.j_max(), 3);
        assert_eq!(WeightSeq::new(vec![0.0]), Err(WeightError::Empty));
        assert!(matches!(WeightSeq::new(vec![1.0, -1.0]), Err(WeightError::InvalidEntry { index: 1, .. })));
        assert!(WeightSeq::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn json_round_trip_is_a_plain_array() {
        let w = ws(&[2.0, 1.0]);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, "[2.0,1.0]");
        let back: WeightSeq = serde_json::from_str("[1, 2]").unwrap();
        assert_eq!(back.as_slice(), &[2.0, 1.0]);
        assert!(serde_json::from_str::<WeightSeq>("[]").is_err());
        let t = gen_er_triple(2, 0.3).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: ScalingTriple = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn er_examples() {
        let t = gen_er_triple(2, 1.0 - (-0.5f64).exp()).unwrap();
        assert_eq!(t.weights.j_max(), 2);
        for &x in t.weights.as_slice() {
            assert_relative_eq!(x, 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(t.a, 2f64.cbrt(), epsilon = 1e-15);
        assert_relative_eq!(t.b, 2f64.powf(2.0 / 3.0), epsilon = 1e-15);
        let t = gen_er_triple(1, 1.0 - (-1f64).exp()).unwrap();
        assert_relative_eq!(t.weights.weight(1), 1.0, epsilon = 1e-15);
        let t = gen_er_triple(8, 1.0 - (-0.125f64).exp()).unwrap();
        assert_eq!(t.weights.j_max(), 8);
        assert_relative_eq!(t.weights.weight(8), 1.0, epsilon = 1e-14);
        assert_eq!((t.a, t.b), (2.0, 4.0));
        assert_eq!(gen_er_triple(3, 0.0), Err(WeightError::BadProbability(0.0)));
        assert_eq!(gen_er_triple(3, 1.0), Err(WeightError::BadProbability(1.0)));
    }

    #[test]
    fn er_normalisation_is_exact() {
        for n in [1u64, 7, 100, 999, 10_000, 123_457] {
            let t = gen_er_triple(n, 0.5 / n as f64).unwrap();
            assert_eq!(t.a * t.a, t.b);
        }
    }

    #[test]
    fn powerlaw_examples() {
        let t = gen_powerlaw_triple(4, 2.5, 1.0, 1.0, powerlaw_alpha0(2.5, 1.0, 1.0)).unwrap();
        // At alpha = alpha_0 the tilt is one and the raw weights are returned.
        assert_relative_eq!(t.weights.weight(1), 4f64.powf(0.4), epsilon = 1e-12);
        assert_relative_eq!(t.weights.weight(1), 1.741_101_126_592_248, epsilon = 1e-12);
        assert_relative_eq!(t.weights.weight(4), 1.0, epsilon = 1e-12);
        assert!(matches!(gen_powerlaw_triple(4, 3.0, 1.0, 1.0, 0.0), Err(WeightError::BadExponent(_))));
        assert!(matches!(gen_powerlaw_triple(4, 2.0, 1.0, 1.0, 0.0), Err(WeightError::BadExponent(_))));
    }

    #[test]
    fn tabulated_tail_rejects_atoms() {
        let flat = PowerLawTail::Tabulated { y: vec![0.1, 0.5, 1.0], g: vec![3.0, 3.0, 1.0] };
        assert!(matches!(
            gen_powerlaw_triple_with_tail(4, 2.5, 1.0, 1.0, 0.0, &flat),
            Err(WeightError::BadTabulation(_))
        ));
        let ok = PowerLawTail::Tabulated { y: vec![0.01, 1.0], g: vec![0.01f64.powf(-0.4), 1.0] };
        let a = gen_powerlaw_triple_with_tail(10, 2.5, 1.0, 1.0, 0.0, &ok).unwrap();
        let b = gen_powerlaw_triple(10, 2.5, 1.0, 1.0, 0.0).unwrap();
        for (x, y) in a.weights.as_slice().iter().zip(b.weights.as_slice()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }
}
