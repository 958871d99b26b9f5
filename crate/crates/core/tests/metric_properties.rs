//! Metric properties of tree-coded and pinched spaces and of the GHP bound.

use proptest::prelude::*;
use wmgraph::coded_metric::{ghp_upper_bound, modulus, pinched_matrix, sup_distance, tree_distance, CodedSpace, CodingPath};

/// Rounding slack for sums of a handful of O(10) distances.
const SLACK: f64 = 1e-9;

/// A nonnegative step coding path with breakpoints on a coarse grid, plus
/// sample times and pinch pairs inside `[0, ζ]`.
fn space() -> impl Strategy<Value = (CodingPath, Vec<f64>, Vec<(f64, f64)>)> {
    (prop::collection::vec((1u32..5, 0u32..8), 1..25), prop::collection::vec(0.0..1.0f64, 2..8), prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 0..5))
        .prop_map(|(pieces, fr, pf)| {
            let mut times = Vec::new();
            let mut values = Vec::new();
            let mut t = 0.0;
            for (len, v) in pieces {
                times.push(t);
                values.push(v as f64);
                t += len as f64 * 0.25;
            }
            let h = CodingPath::step(times, values, t).unwrap();
            let samples = fr.iter().map(|f| f * t).collect();
            let pinches = pf.iter().map(|&(a, b)| ((a * t).min(b * t), (a * t).max(b * t))).collect();
            (h, samples, pinches)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tree_distance_is_a_zero_hyperbolic_pseudometric((h, s, _) in space()) {
        let d = |a: f64, b: f64| tree_distance(&h, a, b);
        for &x in &s {
            prop_assert_eq!(d(x, x), 0.0);
            for &y in &s {
                prop_assert!(d(x, y) >= 0.0);
                prop_assert_eq!(d(x, y), d(y, x));
                for &z in &s {
                    prop_assert!(d(x, z) <= d(x, y) + d(y, z) + SLACK);
                }
            }
        }
        // Four-point condition: of the three pair sums, the two largest agree.
        if s.len() >= 4 {
            let (a, b, c, e) = (s[0], s[1], s[2], s[3]);
            let mut sums = [d(a, b) + d(c, e), d(a, c) + d(b, e), d(a, e) + d(b, c)];
            sums.sort_by(f64::total_cmp);
            prop_assert!((sums[2] - sums[1]).abs() <= SLACK);
        }
    }

    #[test]
    fn pinching_shortens_and_stays_a_pseudometric((h, s, p) in space(), eps in 0.0..3.0f64) {
        // Pinch endpoints are also sampled so that shortcut lengths are visible.
        let mut samples = s.clone();
        samples.extend(p.iter().flat_map(|&(a, b)| [a, b]));
        let m = samples.len();
        let sp = CodedSpace::new(h.clone(), p.clone(), eps, samples.clone()).unwrap();
        let d = pinched_matrix(&sp);
        for i in 0..m {
            prop_assert_eq!(d[i][i], 0.0);
            for j in 0..m {
                prop_assert!(d[i][j] <= tree_distance(&h, samples[i], samples[j]) + SLACK);
                prop_assert!((d[i][j] - d[j][i]).abs() <= SLACK);
                for k in 0..m {
                    prop_assert!(d[i][k] <= d[i][j] + d[j][k] + SLACK);
                }
            }
        }
        for (k, _) in p.iter().enumerate() {
            let (a, b) = (s.len() + 2 * k, s.len() + 2 * k + 1);
            prop_assert!(d[a][b] <= eps + SLACK);
        }
        // Larger shortcuts never shorten distances.
        let wider = pinched_matrix(&CodedSpace::new(h, p, eps + 1.0, samples).unwrap());
        for i in 0..m {
            for j in 0..m {
                prop_assert!(d[i][j] <= wider[i][j] + SLACK);
            }
        }
    }

    #[test]
    fn ghp_bound_terms_behave((h, _, p) in space(), (g, _, _) in space(), eps in 0.0..2.0f64, delta in 0.0..1.0f64) {
        let b = ghp_upper_bound(&h, &g, &p, &p, eps, eps, delta).unwrap();
        prop_assert!(b.value >= b.length_gap);
        prop_assert_eq!(b.length_gap, (h.length() - g.length()).abs());
        prop_assert_eq!(b.sup_norm, sup_distance(&h, &g));
        prop_assert_eq!(b.modulus, modulus(&h, delta));
        let more = ghp_upper_bound(&h, &g, &p, &p, eps + 0.5, eps, delta).unwrap();
        prop_assert!(more.value >= b.value);
        let wider = ghp_upper_bound(&h, &g, &p, &p, eps, eps, delta + 0.5).unwrap();
        prop_assert!(wider.value >= b.value);
        // A space compared with itself at zero resolution costs only its shortcuts.
        let same = ghp_upper_bound(&h, &h, &p, &p, eps, eps, 0.0).unwrap();
        prop_assert_eq!(same.value, 3.0 * p.len() as f64 * eps);
    }
}

#[test]
fn ghp_rejects_mismatched_pinches() {
    let h = CodingPath::step(vec![0.0, 1.0], vec![0.0, 1.0], 2.0).unwrap();
    assert!(ghp_upper_bound(&h, &h, &[(0.0, 1.0)], &[], 1.0, 1.0, 0.1).is_err());
    assert!(ghp_upper_bound(&h, &h, &[(0.0, 1.0)], &[(0.5, 1.0)], 1.0, 1.0, 0.1).is_err());
    assert!(ghp_upper_bound(&h, &h, &[(0.0, 1.0)], &[(0.05, 1.0)], 1.0, 1.0, 0.1).is_ok());
}
