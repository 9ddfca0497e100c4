use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use lily_core::dynamics::EvolutionEngine;
use lily_core::graph::{ChiralEdge, ChiralGraph, VertexId};
use lily_core::lily::{beta_star, build_lily, interference_sum, phases, retarget, LilyParams};
use lily_core::routing::{optimal_time, ClosedForm, default_window};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

/// Connected graph: a random path through all vertices plus extra chords.
fn arb_graph() -> impl Strategy<Value = ChiralGraph> {
    (2usize..12)
        .prop_flat_map(|n| {
            let path = Just(Vec::from_iter(0..n)).prop_shuffle();
            let extra = prop::collection::vec((0..n, 0..n), 0..2 * n);
            let weights = prop::collection::vec((0.05f64..3.0, 0.0f64..TAU), 3 * n);
            (Just(n), path, extra, weights)
        })
        .prop_map(|(n, path, extra, weights)| {
            let mut seen = BTreeSet::new();
            let mut pairs = Vec::new();
            let candidates = path.windows(2).map(|w| (w[0], w[1])).chain(extra);
            for (a, b) in candidates {
                if a != b && seen.insert((a.min(b), a.max(b))) {
                    pairs.push((a, b));
                }
            }
            let edges = pairs
                .into_iter()
                .zip(weights.into_iter().cycle())
                .map(|((a, b), (m, p))| ChiralEdge::new(a, b, m, p))
                .collect();
            ChiralGraph::new(n, edges, None).expect("generator yields valid graphs")
        })
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_json_round_trip(g in arb_graph()) {
        let back = ChiralGraph::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(&back, &g);
        let (hb, hg) = (back.hamiltonian(), g.hamiltonian());
        prop_assert_eq!(hb.matrix(), hg.matrix());
    }

    #[test]
    fn hamiltonian_is_hermitian(g in arb_graph()) {
        prop_assert_eq!(g.hamiltonian().hermiticity_residual(), 0.0);
    }

    #[test]
    fn propagator_unitary_and_composes(g in arb_graph(), t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let eng = EvolutionEngine::new(&g.hamiltonian());
        let u1 = eng.propagator(t1);
        let n = u1.nrows();
        prop_assert!(max_abs(&(u1.adjoint() * &u1 - DMatrix::identity(n, n))) < 1e-10);
        let composed = &u1 * eng.propagator(t2);
        prop_assert!(max_abs(&(composed - eng.propagator(t1 + t2))) < 1e-10);
    }

    #[test]
    fn roots_of_unity_cancel(d in 2usize..200) {
        let s: Complex64 = phases(d).unwrap().iter().map(|&p| Complex64::from_polar(1.0, p)).sum();
        prop_assert!(s.norm() < 1e-10 * d as f64);
    }

    #[test]
    fn beta_star_solves_the_tuning_condition(d in 2usize..500, q in 1usize..6) {
        let b = beta_star(d, q).unwrap();
        prop_assert!(((1.0 + 2.0 * d as f64 * b * b).sqrt() - 2.0 * q as f64).abs() < 1e-12);
    }

    #[test]
    fn only_the_target_sees_the_chiral_layer(n in 1usize..6, d in 2usize..9, t in 0usize..6, beta in 0.1f64..2.0) {
        let target = t % n;
        let (g, layout) = build_lily(&LilyParams::new(n, d, target, beta).unwrap()).unwrap();
        for i in 0..n {
            let s = interference_sum(&g, &layout, layout.routing(i), beta);
            if i == target {
                prop_assert!((s - Complex64::new(d as f64, 0.0)).norm() < 1e-10);
            } else {
                prop_assert!(s.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn retarget_is_an_involution_and_matches_a_fresh_build(n in 2usize..6, d in 2usize..7, a in 0usize..6, b in 0usize..6) {
        let (from, to) = (a % n, b % n);
        let params = LilyParams::new(n, d, from, 1.0).unwrap();
        let (g, layout) = build_lily(&params).unwrap();
        let moved = retarget(&g, &layout, to).unwrap();
        let (fresh, _) = build_lily(&LilyParams::new(n, d, to, 1.0).unwrap()).unwrap();
        prop_assert!(max_abs(&(moved.hamiltonian().matrix() - fresh.hamiltonian().matrix())) < 1e-12);
        let back = retarget(&moved, &layout.with_target(to).unwrap(), from).unwrap();
        prop_assert!(max_abs(&(back.hamiltonian().matrix() - g.hamiltonian().matrix())) < 1e-12);
        prop_assert_eq!(moved.edges().len(), g.edges().len());
    }
}

#[test]
fn shortfall_stays_within_the_large_d_envelope() {
    // d * (1 - P_1f(t*)) <= [1 - cos(pi sqrt(2d+1))]/2 + 0.5 at unit weight
    for d in 2..=200usize {
        let (t, _) = optimal_time(d, 1.0, default_window()).unwrap();
        let p = ClosedForm::new(d, 1.0).p1f(t);
        let df = d as f64;
        let bound = (1.0 - (PI * (2.0 * df + 1.0).sqrt()).cos()) / 2.0 + 0.5;
        assert!(df * (1.0 - p) <= bound, "d = {d}: {} > {bound}", df * (1.0 - p));
    }
}

#[test]
fn lily_vertex_ids_are_dense() {
    let (g, layout) = build_lily(&LilyParams::new(4, 3, 1, 1.0).unwrap()).unwrap();
    for v in 0..layout.n_vertices() {
        assert!(g.degree(VertexId(v)) > 0);
    }
}
