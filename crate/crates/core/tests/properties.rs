mod common;

use common::{arb_strongly_connected, arb_symmetric, net};
use idealflow::calibrate::{fit_scale, unit_ideal_flow, FitMode, FitOptions};
use idealflow::graph::{
    augment_with_cloud, incidence, is_strongly_connected, remove_self_loops, DirectedNetwork, Link,
};
use idealflow::io::{export_matrix_csv, load_document, parse_matrix_csv, save_document, NetworkDocument};
use idealflow::markov::{
    capacity_transition, entropy_bits, ideal_flow, is_premagic, node_entropy, normalize_min, perron_ratio_check, scale,
    stationary, stationary_with, uniform_transition, StationaryMethod, PREMAGIC_TOL,
};
use idealflow::nullspace::{nullspace_flow_with, NullspaceMethod};
use idealflow::walk::{propagate_flow, simulate, SimConfig};
use idealflow::Error;
use proptest::prelude::*;

fn closure(g: &DirectedNetwork) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for l in g.links() {
        r[l.tail.0][l.head.0] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn arb_digraph(max_n: usize) -> impl Strategy<Value = DirectedNetwork> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::btree_set((0..n, 0..n), 0..=n * 2).prop_map(move |arcs| {
            let arcs: Vec<_> = arcs.into_iter().filter(|(a, b)| a != b).collect();
            net(n, &arcs)
        })
    })
}

fn with_capacities(g: &DirectedNetwork, caps: &[f64]) -> DirectedNetwork {
    DirectedNetwork::new(
        g.node_count(),
        g.links()
            .iter()
            .enumerate()
            .map(|(k, l)| Link::new(l.tail.0, l.head.0, caps[k % caps.len()])),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn strong_connectivity_matches_closure(g in arb_digraph(12)) {
        let all = closure(&g).iter().flatten().all(|&b| b);
        prop_assert_eq!(is_strongly_connected(&g), all);
    }

    #[test]
    fn incidence_columns_cancel(g in arb_digraph(15)) {
        let b = incidence(&g);
        prop_assert_eq!(b.cols(), g.link_count());
        for c in 0..b.cols() {
            let col: Vec<i8> = (0..b.rows()).map(|r| b.get(r, c)).collect();
            prop_assert_eq!(col.iter().map(|&v| v as i32).sum::<i32>(), 0);
            prop_assert_eq!(col.iter().filter(|&&v| v == 1).count(), 1);
        }
    }

    #[test]
    fn augmentation_connects_or_fails(g in arb_digraph(12)) {
        match augment_with_cloud(&g, 1.0) {
            Ok(aug) => prop_assert!(is_strongly_connected(&aug.network)),
            Err(e) => prop_assert_eq!(e, Error::AugmentationFailed),
        }
    }

    #[test]
    fn self_loop_removal_idempotent(n in 1usize..8, arcs in prop::collection::btree_set((0usize..8, 0usize..8), 0..20)) {
        let arcs: Vec<_> = arcs.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let g = net(n, &arcs);
        let once = remove_self_loops(&g);
        prop_assert!(once.links().iter().all(|l| l.tail != l.head));
        prop_assert_eq!(remove_self_loops(&once), once.clone());
        prop_assert_eq!(once.link_count(), arcs.iter().filter(|(a, b)| a != b).count());
    }

    #[test]
    fn ideal_flow_is_premagic(g in arb_strongly_connected(30), caps in prop::collection::vec(0.01f64..100.0, 1..10), kappa in 1e-3f64..1e3) {
        let g = with_capacities(&g, &caps);
        for t in [uniform_transition(&g).unwrap(), capacity_transition(&g).unwrap()] {
            let pi = stationary(&t, kappa).unwrap();
            prop_assert!(pi.residual(&t) <= 1e-9 * kappa / g.node_count() as f64);
            let f = ideal_flow(&pi, &t).unwrap();
            prop_assert!(is_premagic(f.matrix(), PREMAGIC_TOL).premagic);
            prop_assert!((f.total() - kappa).abs() <= 1e-9 * kappa);
        }
    }

    #[test]
    fn normalization_is_scale_free(g in arb_strongly_connected(20), exp in -6.0f64..6.0) {
        let t = uniform_transition(&g).unwrap();
        let f = ideal_flow(&stationary(&t, 1.0).unwrap(), &t).unwrap();
        let a = normalize_min(&f).unwrap();
        let b = normalize_min(&scale(&f, 10f64.powf(exp)).unwrap()).unwrap();
        for (x, y) in a.matrix().values().iter().zip(b.matrix().values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn symmetric_stationary_tracks_degree(g in arb_symmetric(25)) {
        let t = uniform_transition(&g).unwrap();
        let pi = stationary(&t, g.link_count() as f64).unwrap();
        for (i, v) in pi.values.iter().enumerate() {
            prop_assert!((v - g.out_degree(i) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn perron_bound_holds(g in arb_strongly_connected(20)) {
        let t = uniform_transition(&g).unwrap();
        prop_assert!(perron_ratio_check(&stationary(&t, 1.0).unwrap(), &g));
    }

    #[test]
    fn uniform_split_maximizes_entropy(k in 1usize..12, w in prop::collection::vec(0.01f64..1.0, 12)) {
        let uniform = (k as f64).log2();
        let w = &w[..k];
        let s: f64 = w.iter().sum();
        let h = entropy_bits(w.iter().map(|x| x / s));
        prop_assert!(h <= uniform + 1e-12);
        prop_assert!(h >= 0.0);
    }

    #[test]
    fn direct_and_power_agree(g in arb_strongly_connected(15)) {
        let t = uniform_transition(&g).unwrap();
        let a = stationary_with(&t, 1.0, StationaryMethod::Direct).unwrap();
        let b = stationary_with(&t, 1.0, StationaryMethod::Power).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn three_methods_agree(g in arb_strongly_connected(30)) {
        let t = uniform_transition(&g).unwrap();
        let m = normalize_min(&ideal_flow(&stationary(&t, 1.0).unwrap(), &t).unwrap()).unwrap();
        let d = nullspace_flow_with(&g, NullspaceMethod::Dense).unwrap();
        let s = nullspace_flow_with(&g, NullspaceMethod::Sparse).unwrap();
        let p = propagate_flow(&g, 0, 100.0, 1_000_000, 1e-14).unwrap();
        for other in [&d, &s, &p] {
            for ((_, _, x), (_, _, y)) in m.matrix().entries().zip(other.matrix().entries()) {
                prop_assert!((x - y).abs() < 1e-8, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn node_entropy_bounded(g in arb_strongly_connected(20), caps in prop::collection::vec(0.01f64..100.0, 1..10)) {
        let g = with_capacities(&g, &caps);
        let t = capacity_transition(&g).unwrap();
        for i in 0..g.node_count() {
            let h = node_entropy(&t, i);
            prop_assert!(h >= 0.0 && h <= (g.out_degree(i) as f64).log2() + 1e-12);
        }
    }

    #[test]
    fn walk_counts_stay_on_links(g in arb_strongly_connected(12), agents in 1usize..20, steps in 1usize..50, seed: u64) {
        let t = uniform_transition(&g).unwrap();
        let r = simulate(&t, &SimConfig::new(agents, steps, seed)).unwrap();
        prop_assert_eq!(r.total(), (agents * steps) as u64);
        prop_assert!(r.entries().all(|(i, j, _)| g.contains(i, j)));
        prop_assert_eq!(&r, &simulate(&t, &SimConfig::new(agents, steps, seed)).unwrap());
    }

    #[test]
    fn calibration_recovers_total(g in arb_strongly_connected(20), caps in prop::collection::vec(0.01f64..100.0, 1..10), kappa in 1.0f64..1e6) {
        let g = with_capacities(&g, &caps);
        let t = capacity_transition(&g).unwrap();
        let f = ideal_flow(&stationary(&t, kappa).unwrap(), &t).unwrap();
        let unit = unit_ideal_flow(f.matrix()).unwrap();
        let c = fit_scale(&unit, f.matrix(), FitMode::ClosedForm, &FitOptions::default()).unwrap();
        prop_assert!((c.kappa - f.total()).abs() <= 1e-8 * f.total());
        prop_assert!(c.residuals.iter().all(|r| r.residual.abs() <= 1e-8 * kappa.max(1.0)));
        let gs = fit_scale(&unit, f.matrix(), FitMode::GoldenSection, &FitOptions::default()).unwrap();
        prop_assert!((gs.kappa - c.kappa).abs() <= 1e-3 * c.kappa);
    }

    #[test]
    fn matrix_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 1e-8f64..1e8], 4), 4)) {
        let labels: Vec<String> = (1..=4).map(|i| i.to_string()).collect();
        let (l, back) = parse_matrix_csv(&export_matrix_csv(&rows, &labels)).unwrap();
        prop_assert_eq!(l, labels);
        for (a, b) in rows.iter().flatten().zip(back.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }

    #[test]
    fn document_round_trip(g in arb_digraph(10)) {
        let doc = NetworkDocument::from_network(&g);
        let back = load_document(&save_document(&doc)).unwrap();
        prop_assert_eq!(&back, &doc);
        let rebuilt = back.to_network().unwrap();
        prop_assert_eq!(rebuilt.links(), g.links());
    }
}
