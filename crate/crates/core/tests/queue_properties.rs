//! Properties of the LIFO and Markov queues, their excursions and the
//! coded metric spaces they induce.

use proptest::prelude::*;
use wmgraph::coded_metric::{lifo_coded_space, pinched_matrix, tree_distance};
use wmgraph::direct_graph::{all_pairs_hops, connected_components, OrderBy, UNREACHABLE};
use wmgraph::excursions::{excursions_above_zero, excursions_of_path, mass_balance};
use wmgraph::lifo_coder::{assemble_graph, sample_pinches, simulate_lifo, PinchSetup};
use wmgraph::markov_coder::{color_blue_red, gw_forest_stats, simulate_markov, verify_embedding, StopRule};
use wmgraph::numeric::stable_sum;
use wmgraph::rng::{stream, Purpose};
use wmgraph::WeightSeq;

fn weights(max_len: usize) -> impl Strategy<Value = WeightSeq> {
    prop::collection::vec(0.05..5.0f64, 1..=max_len).prop_map(|w| WeightSeq::new(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lifo_serves_every_client_its_weight(w in weights(40), seed in any::<u64>()) {
        let tr = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
        prop_assert_eq!(tr.client_count(), w.j_max());
        for j in 0..w.j_max() {
            let served: f64 = tr.service[j].iter().map(|(a, b)| b - a).sum();
            prop_assert!((served - w.as_slice()[j]).abs() <= 1e-9 * w.sigma1());
            prop_assert!(tr.departure[j] >= tr.arrival[j] + w.as_slice()[j] - 1e-9 * w.sigma1());
        }
        prop_assert!(tr.height.values.iter().all(|&h| h >= 0));
    }

    #[test]
    fn masses_are_conserved(w in weights(40), seed in any::<u64>()) {
        let tr = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
        let pinches = sample_pinches(&tr, &mut stream(seed, 0, Purpose::Pinches));
        let g = assemble_graph(&tr, &pinches).unwrap();
        let dec = excursions_of_path(&tr.path);
        let balance = mass_balance(&tr.path, &dec, w.sigma1());
        prop_assert!(balance.holds(), "{:?}", balance);
        // Order-free summation: the same multiset gives the same bits.
        prop_assert_eq!(stable_sum(w.as_slice().iter().rev().copied()), w.sigma1());
        let mut comp: Vec<f64> = connected_components(&g, OrderBy::Mass).iter().map(|c| c.mass).collect();
        comp.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(comp, dec.masses());
    }

    #[test]
    fn height_and_load_excursions_agree(w in weights(40), seed in any::<u64>()) {
        let tr = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
        let a = excursions_above_zero(&tr.height);
        let b = excursions_of_path(&tr.path);
        prop_assert_eq!(a.len(), b.len());
        let mut x: Vec<(f64, f64)> = a.intervals.iter().map(|e| (e.left, e.right)).collect();
        let mut y: Vec<(f64, f64)> = b.intervals.iter().map(|e| (e.left, e.right)).collect();
        x.sort_by(|p, q| p.0.total_cmp(&q.0));
        y.sort_by(|p, q| p.0.total_cmp(&q.0));
        for (p, q) in x.iter().zip(&y) {
            prop_assert_eq!(p.0, q.0);
            prop_assert!((p.1 - q.1).abs() <= 1e-9 * w.sigma1());
        }
        // Sorting is a permutation of the lengths.
        let mut lengths: Vec<f64> = b.intervals.iter().map(|e| e.length).collect();
        lengths.sort_by(|p, q| q.total_cmp(p));
        prop_assert_eq!(lengths, b.masses());
    }

    #[test]
    fn tree_without_pinches_is_a_forest(w in weights(40), seed in any::<u64>()) {
        let tr = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
        let g = assemble_graph(&tr, &PinchSetup::default()).unwrap();
        prop_assert_eq!(g.edges.len(), w.j_max() - tr.busy_periods.len());
        prop_assert_eq!(connected_components(&g, OrderBy::Mass).len(), tr.busy_periods.len());
    }

    #[test]
    fn coded_distances_are_graph_distances(w in weights(30), seed in any::<u64>()) {
        let tr = simulate_lifo(&w, &mut stream(seed, 0, Purpose::Arrivals));
        // Tree: the height coding at arrival times.
        let tree = assemble_graph(&tr, &PinchSetup::default()).unwrap();
        let hops = all_pairs_hops(&tree);
        let space = lifo_coded_space(&tr, &PinchSetup::default(), 1.0).unwrap();
        for i in 0..w.j_max() {
            for j in 0..w.j_max() {
                if hops[i][j] != UNREACHABLE {
                    let d = tree_distance(&space.h, space.samples[i], space.samples[j]);
                    prop_assert_eq!(d, hops[i][j] as f64);
                }
            }
        }
        // Graph: unit shortcuts at the pinches.
        let pinches = sample_pinches(&tr, &mut stream(seed, 0, Purpose::Pinches));
        let g = assemble_graph(&tr, &pinches).unwrap();
        let hops = all_pairs_hops(&g);
        let m = pinched_matrix(&lifo_coded_space(&tr, &pinches, 1.0).unwrap());
        for i in 0..w.j_max() {
            for j in 0..w.j_max() {
                if hops[i][j] != UNREACHABLE {
                    prop_assert_eq!(m[i][j], hops[i][j] as f64);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn markov_embedding_identities_hold(w in prop::collection::vec(0.2..2.0f64, 1..=6), seed in any::<u64>()) {
        let w = WeightSeq::new(w).unwrap();
        let rule = StopRule::EmptyEpochs { count: 3, horizon: 200.0 };
        let tr = simulate_markov(&w, rule, &mut stream(seed, 0, Purpose::Arrivals)).unwrap();
        let col = color_blue_red(&tr).unwrap();
        let rep = verify_embedding(&tr, &col);
        prop_assert!(rep.passed(), "{:?}", rep.checks);
    }

    #[test]
    fn forest_codings_are_consistent(w in prop::collection::vec(0.2..1.2f64, 1..=6), seed in any::<u64>()) {
        let w = WeightSeq::new(w).unwrap();
        let rule = StopRule::EmptyEpochs { count: 4, horizon: 500.0 };
        let tr = simulate_markov(&w, rule, &mut stream(seed, 0, Purpose::Arrivals)).unwrap();
        let st = gw_forest_stats(&tr);
        prop_assert_eq!(&st.height_from_lukasiewicz, &st.height);
        // Every Lukasiewicz step is (children − 1) ≥ −1.
        prop_assert!(st.lukasiewicz.windows(2).all(|p| p[1] - p[0] >= -1));
        prop_assert_eq!(st.offspring_histogram.iter().sum::<u64>() as usize, st.complete_prefix);
        if st.complete_prefix == tr.client_count() {
            // A complete walk visits each vertex deg times, plus once more at the server.
            for v in 0..=tr.client_count() {
                prop_assert_eq!(st.contour_visits[v], st.degree[v] + u32::from(v == 0));
            }
            prop_assert_eq!(st.tree_sizes.iter().sum::<usize>(), tr.client_count());
            // The walk ends at the server after 2n unit steps.
            prop_assert_eq!(st.contour.len(), 2 * tr.client_count() + 1);
            prop_assert_eq!(*st.lukasiewicz.last().unwrap(), -(st.tree_sizes.len() as i64));
        }
    }
}
