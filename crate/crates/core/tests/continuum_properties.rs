//! Grid simulation of the limit process: moments, grid consistency and the
//! shape of the excursion masses.

use proptest::prelude::*;
use rayon::prelude::*;
use wmgraph::continuum::{limit_masses, simulate_limit_y};
use wmgraph::rng::{stream, Purpose};
use wmgraph::LimitParams;

/// `Y_1 = B_1 − 1/2` for `(α, β, κ, c) = (0, 1, 1, ∅)`: mean −1/2 and variance 1
/// on any grid, since the Brownian increments sum to an exact `N(0, 1)`.
#[test]
fn brownian_limit_has_unit_variance_at_time_one() {
    let p = LimitParams::new(0.0, 1.0, 1.0, vec![]).unwrap();
    let n = 10_000u64;
    let y1: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|r| {
            let g = simulate_limit_y(&p, 0.01, 1.0, 0, &mut stream(11, r, Purpose::Continuum)).unwrap();
            *g.values.last().unwrap()
        })
        .collect();
    let nf = n as f64;
    let mean = y1.iter().sum::<f64>() / nf;
    let var = y1.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    // Standard errors: 1/√n for the mean, √(2/(n−1)) for a normal sample variance.
    assert!((mean + 0.5).abs() < 3.0 / nf.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 3.0 * (2.0 / (nf - 1.0)).sqrt(), "variance {var}");
}

/// Halving the grid step on a fixed seed (the coarse path keeps every other
/// point of the fine one) moves each of the five largest masses by less than
/// three coarse steps.
#[test]
fn halving_dt_moves_top_masses_by_less_than_three_steps() {
    let p = LimitParams::new(0.0, 1.0, 1.0, vec![]).unwrap();
    let (dt, horizon) = (1e-3, 10.0);
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let fine = simulate_limit_y(&p, dt / 2.0, horizon, 0, &mut stream(seed, 0, Purpose::Continuum)).unwrap();
        let coarse = fine.coarsen(2).unwrap();
        let (a, b) = (limit_masses(&fine, 5), limit_masses(&coarse, 5));
        let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if a.len() != b.len() || worst >= 3.0 * dt {
            failures.push((seed, worst / dt));
        }
    }
    assert!(failures.is_empty(), "(seed, largest shift in coarse steps): {failures:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masses_are_sorted_grid_multiples(
        alpha in -1.0..1.0f64,
        c in prop::collection::vec(0.1..1.0f64, 0..4),
        seed in any::<u64>(),
    ) {
        let mut c = c;
        c.sort_by(|a, b| b.total_cmp(a));
        let p = LimitParams::new(alpha, 1.0, 1.0, c.clone()).unwrap();
        let dt = 1e-2;
        let g = simulate_limit_y(&p, dt, 5.0, c.len(), &mut stream(seed, 0, Purpose::Continuum)).unwrap();
        prop_assert!(g.values.iter().all(|v| v.is_finite()));
        let m = limit_masses(&g, usize::MAX);
        prop_assert!(m.windows(2).all(|w| w[0] >= w[1]));
        for &x in &m {
            let cells = x / dt;
            prop_assert!(x > 0.0 && x <= 5.0 + 1e-9, "mass {} in {:?}", x, m);
            prop_assert!((cells - cells.round()).abs() < 1e-6, "{} is not a grid multiple", x);
        }
    }
}
