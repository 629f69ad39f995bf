mod common;

use proptest::prelude::*;

use kuradyn::dynamics::{
    drc_rhs, drift_bound, energy_hessian, krw_rhs, lipschitz_constant, ModelParams,
};
use kuradyn::graph::SkeletonGraph;
use kuradyn::jump::{EdgeConfiguration, WalkerState};

#[derive(Debug, Clone)]
struct Case {
    graph: SkeletonGraph,
    walkers: WalkerState,
    theta: Vec<f64>,
    other: Vec<f64>,
    params: ModelParams,
}

fn case() -> impl Strategy<Value = Case> {
    (
        2usize..6,
        any::<u64>(),
        1usize..6,
        0.1f64..4.0,
        any::<bool>(),
    )
        .prop_flat_map(|(nv, seed, n, k, spin)| {
            let graph = SkeletonGraph::erdos_renyi(nv, 0.6, seed)
                .unwrap_or_else(|_| SkeletonGraph::path(nv).unwrap())
                .with_self_loops(0.7)
                .unwrap();
            (
                Just(graph),
                prop::collection::vec(0..nv, n),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-2.0f64..2.0, n).prop_map(move |w| {
                    if spin {
                        w
                    } else {
                        vec![0.0; w.len()]
                    }
                }),
                Just(k),
            )
                .prop_map(|(graph, x, theta, other, omega, k)| Case {
                    graph,
                    walkers: WalkerState::new(x),
                    theta,
                    other,
                    params: ModelParams::new(k, omega).unwrap(),
                })
        })
}

proptest! {
    #[test]
    fn rhs_sums_to_total_frequency(c in case()) {
        let b = krw_rhs(&c.theta, &c.walkers, &c.graph, &c.params).unwrap();
        let total: f64 = c.params.frequencies.iter().sum();
        prop_assert!((b.iter().sum::<f64>() - total).abs() < 1e-12);
    }

    #[test]
    fn rhs_matches_direct_sum(c in case()) {
        let b = krw_rhs(&c.theta, &c.walkers, &c.graph, &c.params).unwrap();
        let d = common::drift(&c.graph, c.walkers.positions(), &c.theta);
        let gain = c.params.coupling / c.theta.len() as f64;
        for i in 0..b.len() {
            prop_assert!((b[i] - c.params.frequencies[i] - gain * d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_is_bounded(c in case()) {
        let b = krw_rhs(&c.theta, &c.walkers, &c.graph, &c.params).unwrap();
        let bound = drift_bound(&c.graph, &c.params);
        prop_assert!(b.iter().all(|v| v.abs() <= bound + 1e-12));
    }

    #[test]
    fn drift_is_lipschitz(c in case()) {
        let b1 = krw_rhs(&c.theta, &c.walkers, &c.graph, &c.params).unwrap();
        let b2 = krw_rhs(&c.other, &c.walkers, &c.graph, &c.params).unwrap();
        let n = c.theta.len();
        let l = lipschitz_constant(c.params.coupling, n, c.graph.max_degree());
        let lhs: f64 = b1.iter().zip(&b2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let rhs: f64 = c.theta.iter().zip(&c.other).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(lhs <= l * rhs + 1e-12);
    }

    #[test]
    fn hessian_is_psd_on_cohesive_set(c in case(), offsets in prop::collection::vec(0.0f64..std::f64::consts::FRAC_PI_3, 6)) {
        let theta: Vec<f64> = (0..c.theta.len()).map(|i| c.theta[0] + offsets[i]).collect();
        let h = energy_hessian(&theta, &c.walkers, &c.graph).unwrap();
        for i in 0..h.nrows() {
            prop_assert!((h.row(i).sum()).abs() < 1e-12);
            for j in 0..h.ncols() {
                prop_assert!((h[(i, j)] - h[(j, i)]).abs() < 1e-15);
            }
        }
        let min = h.symmetric_eigenvalues().min();
        prop_assert!(min >= -1e-10, "smallest eigenvalue {}", min);
    }

    #[test]
    fn edge_drift_uses_vertex_count(nv in 3usize..8, mask in any::<u64>(), theta in prop::collection::vec(-4.0f64..4.0, 8)) {
        let g = SkeletonGraph::cycle(nv).unwrap();
        let theta = &theta[..nv];
        let m = g.edge_set().len();
        let e = EdgeConfiguration::from_mask(m, mask);
        let p = ModelParams::homogeneous(2.0, nv).unwrap();
        let b = drc_rhs(theta, &e, &g, &p).unwrap();
        let mut expected = vec![0.0; nv];
        for (idx, (u, v)) in g.edge_set().iter().enumerate() {
            if e.is_on(idx) {
                let s = (theta[v] - theta[u]).sin();
                expected[u] += s;
                expected[v] -= s;
            }
        }
        for u in 0..nv {
            prop_assert!((b[u] - 2.0 / nv as f64 * expected[u]).abs() < 1e-12);
        }
    }
}
