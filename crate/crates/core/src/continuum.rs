//! Grid simulation of the limit load process
//! `Y_t = −αt − ½κβt² + √β B_t + Σ_{j≤J} c_j (1{E_j ≤ t} − κ c_j t)`
//! with independent `E_j ~ Exp(rate κ c_j)`, and its excursion masses.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::excursions::{excursions_above_infimum_grid_with_jumps, ExcursionDecomposition};
use crate::weights::{LimitParams, WeightError};

/// Truncation level target for the jump sum.
pub const TRUNCATION_TARGET: f64 = 1e-3;

/// Default grid step as a fraction of the horizon.
pub const DEFAULT_DT_FRACTION: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum ContinuumError {
    #[error("grid step {dt} and horizon {horizon} must be positive and finite")]
    BadGrid { dt: f64, horizon: f64 },
    #[error("truncation {0} exceeds the number of jump sizes {1}")]
    BadTruncation(usize, usize),
    #[error("expected {expected} forced jump times, got {got}")]
    JumpCount { expected: usize, got: usize },
    #[error("coarsening factor {0} must divide the number of grid cells {1}")]
    BadFactor(usize, usize),
    #[error(transparent)]
    Params(#[from] WeightError),
}

/// Values of `Y` on the grid `k·dt`, `k = 0..=⌊T/dt⌋`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub dt: f64,
    pub horizon: f64,
    pub values: Vec<f64>,
    /// `values[k]` without the jumps that fell in `((k−1)dt, k·dt]`.
    pub pre_jump: Vec<f64>,
    pub params: LimitParams,
    /// Number of jump sizes kept.
    pub truncation: usize,
    /// `½ κ² T² Σ_{j>J} c_j³`: bound on the mean effect of the dropped jumps
    /// (each dropped compensated term has mean of size at most `½(κt)² c_j³`).
    pub truncation_bound: f64,
    /// Jump times actually used (`E_j`, `j ≤ J`).
    pub jump_times: Vec<f64>,
}

impl GridPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }

    /// Keeps every `factor`-th grid point: the same path on a coarser grid.
    pub fn coarsen(&self, factor: usize) -> Result<GridPath, ContinuumError> {
        let cells = self.values.len() - 1;
        if factor == 0 || !cells.is_multiple_of(factor) {
            return Err(ContinuumError::BadFactor(factor, cells));
        }
        let values: Vec<f64> = self.values.iter().copied().step_by(factor).collect();
        // Pre-jump level at a coarse point: its value minus all jumps in the coarse cell.
        let dt = self.dt * factor as f64;
        let pre_jump = (0..values.len())
            .map(|m| {
                let t = m as f64 * dt;
                let jumps: f64 = self
                    .jump_times
                    .iter()
                    .zip(&self.params.c)
                    .filter(|(&e, _)| cell_index(e, self.dt).div_ceil(factor) == m && m > 0 && e <= t + 0.5 * self.dt)
                    .map(|(_, &c)| c)
                    .sum();
                values[m] - jumps
            })
            .collect();
        Ok(GridPath { dt, values, pre_jump, ..self.clone() })
    }
}

/// Grid index at which a jump at time `e` is first included: the smallest
/// `k` with `e ≤ k·dt` (computed with a relative guard against rounding).
fn cell_index(e: f64, dt: f64) -> usize {
    let x = e / dt;
    let k = x.ceil();
    if k - x > 1.0 - 1e-9 { (k - 1.0) as usize } else { k as usize }
}

/// `½ κ² T² Σ_{j>J} c_j³`.
pub fn truncation_bound(p: &LimitParams, horizon: f64, truncation: usize) -> f64 {
    let tail: f64 = p.c.iter().skip(truncation).map(|c| c * c * c).sum();
    0.5 * p.kappa * p.kappa * horizon * horizon * tail
}

/// Smallest `J` whose truncation bound is below `target`, or all of `c`.
pub fn choose_truncation(p: &LimitParams, horizon: f64, target: f64) -> usize {
    (0..=p.c.len()).find(|&j| truncation_bound(p, horizon, j) < target).unwrap_or(p.c.len())
}

fn check_grid(dt: f64, horizon: f64) -> Result<usize, ContinuumError> {
    if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
        return Err(ContinuumError::BadGrid { dt, horizon });
    }
    Ok((horizon / dt + 1e-9).floor() as usize)
}

/// Simulates `Y` on the grid with the first `truncation` jump sizes.
pub fn simulate_limit_y<R: Rng + ?Sized>(
    p: &LimitParams,
    dt: f64,
    horizon: f64,
    truncation: usize,
    rng: &mut R,
) -> Result<GridPath, ContinuumError> {
    p.validate()?;
    if truncation > p.c.len() {
        return Err(ContinuumError::BadTruncation(truncation, p.c.len()));
    }
    let jumps: Vec<f64> = p.c[..truncation]
        .iter()
        .map(|&c| Exp::new(p.kappa * c).map_or(f64::INFINITY, |d| d.sample(rng)))
        .collect();
    simulate_limit_y_with_jumps(p, dt, horizon, &jumps, rng)
}

/// Simulates `Y` with prescribed jump times `E_1, …, E_J` (`J = jumps.len()`);
/// only the Brownian increments are random.
pub fn simulate_limit_y_with_jumps<R: Rng + ?Sized>(
    p: &LimitParams,
    dt: f64,
    horizon: f64,
    jumps: &[f64],
    rng: &mut R,
) -> Result<GridPath, ContinuumError> {
    p.validate()?;
    let cells = check_grid(dt, horizon)?;
    let truncation = jumps.len();
    if truncation > p.c.len() {
        return Err(ContinuumError::JumpCount { expected: p.c.len(), got: truncation });
    }
    let c = &p.c[..truncation];
    let compensator: f64 = c.iter().map(|&x| p.kappa * x * x).sum();
    let mut jump_at = vec![0.0; cells + 1];
    for (&e, &x) in jumps.iter().zip(c) {
        let k = cell_index(e, dt);
        if k <= cells {
            jump_at[k] += x;
        }
    }
    let sd = (p.beta * dt).sqrt();
    let mut values = Vec::with_capacity(cells + 1);
    let mut pre_jump = Vec::with_capacity(cells + 1);
    let (mut brownian, mut jumped) = (0.0, 0.0);
    for (k, &jump) in jump_at.iter().enumerate() {
        if k > 0 && p.beta > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            brownian += sd * z;
        }
        let t = k as f64 * dt;
        let continuous = -p.alpha * t - 0.5 * p.kappa * p.beta * t * t + brownian - compensator * t;
        pre_jump.push(continuous + jumped);
        jumped += jump;
        values.push(continuous + jumped);
    }
    Ok(GridPath {
        dt,
        horizon,
        values,
        pre_jump,
        params: p.clone(),
        truncation,
        truncation_bound: truncation_bound(p, horizon, truncation),
        jump_times: jumps.to_vec(),
    })
}

/// Excursions of `Y` above its running infimum.
pub fn limit_excursions(g: &GridPath) -> ExcursionDecomposition {
    excursions_above_infimum_grid_with_jumps(&g.values, &g.pre_jump, g.dt).expect("validated grid step")
}

/// The `top_k` largest excursion lengths of `Y` above its running infimum.
pub fn limit_masses(g: &GridPath, top_k: usize) -> Vec<f64> {
    let mut m = limit_excursions(g).masses();
    m.truncate(top_k);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn params(alpha: f64, beta: f64, kappa: f64, c: &[f64]) -> LimitParams {
        LimitParams::new(alpha, beta, kappa, c.to_vec()).unwrap()
    }

    #[test]
    fn forced_jump_path() {
        let p = params(0.0, 0.0, 1.0, &[1.0]);
        let mut rng = stream(0, 0, Purpose::Continuum);
        let g = simulate_limit_y_with_jumps(&p, 0.25, 2.0, &[0.5], &mut rng).unwrap();
        for (k, t) in g.times().enumerate() {
            let expected = if t >= 0.5 { 1.0 } else { 0.0 } - t;
            assert!((g.values[k] - expected).abs() < 1e-15, "t={t}");
        }
        assert_eq!(limit_masses(&g, 10), vec![1.0]);
    }

    #[test]
    fn pure_drift() {
        let p = params(1.0, 0.0, 1.0, &[]);
        let mut rng = stream(0, 0, Purpose::Continuum);
        let g = simulate_limit_y(&p, 0.1, 1.0, 0, &mut rng).unwrap();
        assert_eq!(g.values.len(), 11);
        for (k, t) in g.times().enumerate() {
            assert!((g.values[k] + t).abs() < 1e-15);
        }
        assert!(limit_masses(&g, 10).is_empty());
    }

    #[test]
    fn truncation_choice() {
        let p = params(0.0, 1.0, 1.0, &[0.5, 0.1, 0.01]);
        assert_eq!(truncation_bound(&p, 1.0, 3), 0.0);
        let j = choose_truncation(&p, 1.0, TRUNCATION_TARGET);
        assert_eq!(j, 1);
        assert!(truncation_bound(&p, 1.0, j) < TRUNCATION_TARGET);
        let mut rng = stream(0, 0, Purpose::Continuum);
        assert!(simulate_limit_y(&p, 0.1, 1.0, 4, &mut rng).is_err());
        assert!(simulate_limit_y(&p, 0.0, 1.0, 1, &mut rng).is_err());
    }

    #[test]
    fn coarsening_keeps_the_path() {
        let p = params(0.0, 1.0, 1.0, &[1.0, 0.5]);
        let mut rng = stream(3, 0, Purpose::Continuum);
        let fine = simulate_limit_y_with_jumps(&p, 0.05, 2.0, &[0.33, 1.2], &mut rng).unwrap();
        let coarse = fine.coarsen(2).unwrap();
        assert_eq!(coarse.values.len(), 21);
        assert_eq!(coarse.values[5], fine.values[10]);
        // The jump at 0.33 falls in the coarse cell (0.3, 0.4].
        assert!((coarse.values[4] - coarse.pre_jump[4] - 1.0).abs() < 1e-12);
        assert!(fine.coarsen(3).is_err());
    }
}
