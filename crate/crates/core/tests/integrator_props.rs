mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use kuradyn::analysis::{Experiment, Theta0Spec};
use kuradyn::dynamics::ModelParams;
use kuradyn::graph::SkeletonGraph;
use kuradyn::integrator::{integrate_drc, integrate_krw, IntegratorConfig, SampledPath};
use kuradyn::jump::{simulate_edges, simulate_walkers, EdgeConfiguration, RngSeed, WalkerState};

/// Largest energy increase between consecutive samples strictly inside one
/// inter-event interval.
fn worst_energy_rise(path: &SampledPath, events: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for k in 1..path.len() {
        let (a, b) = (path.times[k - 1], path.times[k]);
        // A sample taken exactly at an event already carries the new state.
        if events.iter().any(|&e| e > a && e <= b) {
            continue;
        }
        worst = worst.max(path.diagnostics[k].energy - path.diagnostics[k - 1].energy);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_decays_between_jumps(
        seed in any::<u64>(),
        theta in prop::collection::vec(0.0f64..std::f64::consts::TAU, 4),
        eps in 0.2f64..3.0,
    ) {
        let g = SkeletonGraph::wsg(5, 1).unwrap().with_self_loops(1.0).unwrap();
        let x0 = WalkerState::new(vec![0, 1, 2, 4]);
        let traj = simulate_walkers(&g, eps, &x0, 10.0, RngSeed::new(seed, 0)).unwrap();
        let p = ModelParams::homogeneous(1.5, 4).unwrap();
        let path = integrate_krw(&g, &traj, &theta, &p, &IntegratorConfig::default()).unwrap();
        let events: Vec<f64> = traj.event_times().collect();
        prop_assert!(worst_energy_rise(&path, &events) <= 1e-8);
        for e in &events {
            prop_assert!(path.times.contains(e));
        }
    }

    #[test]
    fn edge_model_conserves_phase_sum_and_decays(
        seed in any::<u64>(),
        theta in prop::collection::vec(0.0f64..std::f64::consts::TAU, 6),
    ) {
        let g = SkeletonGraph::wsg(6, 2).unwrap();
        let traj = simulate_edges(&g, 1.0, 1.0, &EdgeConfiguration::all_on(g.edge_set().len()), 30.0, RngSeed::new(seed, 1)).unwrap();
        let p = ModelParams::homogeneous(1.0, 6).unwrap();
        let path = integrate_drc(&g, &traj, &theta, &p, &IntegratorConfig::default()).unwrap();
        prop_assert!(path.max_sum_drift_rate() < 1e-9);
        let events: Vec<f64> = traj.event_times().collect();
        prop_assert!(worst_energy_rise(&path, &events) <= 1e-8);
    }
}

#[test]
fn halving_the_step_moves_endpoints_little() {
    // The criterion scenarios: triangle walkers, P3 edges, averaging and
    // decay starts.
    let triangle = common::triangle();
    let scenarios: Vec<(Experiment, bool)> = vec![
        (
            Experiment::new(
                triangle.clone(),
                ModelParams::homogeneous(1.0, 3).unwrap(),
                Theta0Spec::Cohesive { gamma: PI / 3.0 },
                50.0,
                1,
            ),
            true,
        ),
        (
            Experiment::new(
                SkeletonGraph::path(3).unwrap(),
                ModelParams::homogeneous(1.0, 3).unwrap(),
                Theta0Spec::Cohesive { gamma: PI / 3.0 },
                50.0,
                2,
            ),
            false,
        ),
        (
            Experiment::new(
                common::p3_loops(),
                ModelParams::homogeneous(1.0, 3).unwrap(),
                Theta0Spec::Uniform,
                5.0,
                3,
            ),
            true,
        ),
    ];
    for (exp, walkers) in scenarios {
        for trial in 0..5 {
            let cfg = exp.integrator_for(0.1).unwrap();
            let theta0 = exp.initial_phases(trial, exp.params.population()).unwrap();
            let (a, b) = if walkers {
                let traj = exp.walker_trajectory(0.1, trial).unwrap();
                (
                    integrate_krw(&exp.graph, &traj, &theta0, &exp.params, &cfg).unwrap(),
                    integrate_krw(&exp.graph, &traj, &theta0, &exp.params, &cfg.halved()).unwrap(),
                )
            } else {
                let traj = exp.edge_trajectory(0.1, 1.0, trial).unwrap();
                (
                    integrate_drc(&exp.graph, &traj, &theta0, &exp.params, &cfg).unwrap(),
                    integrate_drc(&exp.graph, &traj, &theta0, &exp.params, &cfg.halved()).unwrap(),
                )
            };
            let diff = a
                .final_state()
                .iter()
                .zip(b.final_state())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-6, "step halving moved the endpoint by {diff}");
        }
    }
}

#[test]
fn samples_cover_grid_events_and_horizon() {
    let g = common::p3_loops();
    let traj = simulate_walkers(
        &g,
        0.3,
        &WalkerState::new(vec![0, 2]),
        7.25,
        RngSeed::new(9, 0),
    )
    .unwrap();
    let p = ModelParams::homogeneous(1.0, 2).unwrap();
    let cfg = IntegratorConfig::new(1e-2, 0.5, kuradyn::integrator::Method::Rk4).unwrap();
    let path = integrate_krw(&g, &traj, &[0.0, 2.0], &p, &cfg).unwrap();
    assert_eq!(path.times[0], 0.0);
    assert_eq!(*path.times.last().unwrap(), 7.25);
    assert!(path.times.windows(2).all(|w| w[0] < w[1]));
    for k in 0..=14 {
        let t = 0.5 * k as f64;
        assert!(
            path.times.iter().any(|s| (s - t).abs() < 1e-12),
            "missing grid time {t}"
        );
    }
}
