mod common;

use proptest::prelude::*;

use kuradyn::graph::SkeletonGraph;
use kuradyn::jump::{
    simulate_edges, simulate_walkers, simulate_walkers_raw, EdgeConfiguration, JumpState,
    JumpTrajectory, RngSeed, WalkerState,
};

fn single_change<S: JumpState>(traj: &JumpTrajectory<S>) -> bool {
    let mut prev = traj.initial_state().values();
    let mut last_time = 0.0;
    for ev in traj.events() {
        if !(ev.time > last_time && ev.time <= traj.horizon()) {
            return false;
        }
        last_time = ev.time;
        let next = traj.state_at(ev.time).unwrap().values();
        let changed = prev.iter().zip(&next).filter(|(a, b)| a != b).count();
        if changed != 1 {
            return false;
        }
        prev = next;
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walker_trajectories_change_one_walker(
        n in 2usize..7,
        walkers in 1usize..5,
        eps in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        let g = SkeletonGraph::cycle(n.max(3)).unwrap().with_self_loops(0.5).unwrap();
        let x0 = WalkerState::new((0..walkers).map(|i| i % g.vertex_count()).collect());
        let a = simulate_walkers(&g, eps, &x0, 20.0, RngSeed::new(seed, 0)).unwrap();
        prop_assert!(single_change(&a));
        let b = simulate_walkers(&g, eps, &x0, 20.0, RngSeed::new(seed, 0)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn edge_trajectories_change_one_bit(
        n in 3usize..8,
        eps in 0.05f64..5.0,
        kappa in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        let g = SkeletonGraph::cycle(n).unwrap();
        let e0 = EdgeConfiguration::all_on(n);
        let a = simulate_edges(&g, eps, kappa, &e0, 20.0, RngSeed::new(seed, 1)).unwrap();
        prop_assert!(single_change(&a));
        let b = simulate_edges(&g, eps, kappa, &e0, 20.0, RngSeed::new(seed, 1)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn zero_horizon_has_no_events() {
    let g = common::p3_loops();
    let x0 = WalkerState::new(vec![0, 2]);
    let t = simulate_walkers(&g, 1.0, &x0, 0.0, RngSeed::new(1, 0)).unwrap();
    assert!(t.events().is_empty());
    assert_eq!(t.final_state(), x0);
}

#[test]
fn missing_loops_and_bad_rates_are_rejected() {
    let plain = SkeletonGraph::path(3).unwrap();
    let x0 = WalkerState::new(vec![0]);
    assert!(simulate_walkers(&plain, 1.0, &x0, 1.0, RngSeed::new(1, 0)).is_err());
    assert!(simulate_walkers(&common::p3_loops(), 0.0, &x0, 1.0, RngSeed::new(1, 0)).is_err());
    assert!(simulate_edges(
        &plain,
        1.0,
        -1.0,
        &EdgeConfiguration::all_on(2),
        1.0,
        RngSeed::new(1, 0)
    )
    .is_err());
}

#[test]
fn jump_count_matches_poisson_mean() {
    // Including self-jumps, N walkers jump at total rate N/ε.
    let g = common::p3_loops();
    let (walkers, eps, horizon, runs) = (3usize, 0.5, 10.0, 1000u64);
    let x0 = WalkerState::new(vec![0; walkers]);
    let counts: Vec<f64> = (0..runs)
        .map(|r| {
            simulate_walkers_raw(&g, eps, &x0, horizon, RngSeed::new(5, r))
                .unwrap()
                .len() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / runs as f64;
    let expected = walkers as f64 * horizon / eps;
    let se = (expected / runs as f64).sqrt();
    assert!(
        (mean - expected).abs() < 3.0 * se,
        "mean {mean}, expected {expected} ± {se}"
    );
}

#[test]
fn inter_jump_times_are_exponential() {
    let g = common::p3_loops();
    let eps = 0.7;
    let raw = simulate_walkers_raw(
        &g,
        eps,
        &WalkerState::new(vec![1]),
        3000.0,
        RngSeed::new(17, 0),
    )
    .unwrap();
    let mut gaps: Vec<f64> = raw.windows(2).map(|w| w[1].time - w[0].time).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len() as f64;
    let d = gaps
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / eps).exp();
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    // Asymptotic Kolmogorov critical value at level 0.01.
    let critical = 1.628 / n.sqrt();
    assert!(d < critical, "KS statistic {d} vs {critical} over {n} gaps");
}

#[test]
fn destinations_follow_transition_probabilities() {
    let g =
        SkeletonGraph::from_dense(3, vec![1.0, 2.0, 0.0, 2.0, 0.5, 3.0, 0.0, 3.0, 1.0]).unwrap();
    let raw = simulate_walkers_raw(
        &g,
        1.0,
        &WalkerState::new(vec![1]),
        20_000.0,
        RngSeed::new(23, 0),
    )
    .unwrap();
    let mut counts = [0.0; 3];
    let mut from_one = 0.0_f64;
    for j in raw.iter().filter(|j| j.from == 1) {
        counts[j.to] += 1.0;
        from_one += 1.0;
    }
    let row: [f64; 3] = [2.0, 0.5, 3.0];
    for v in 0..3 {
        let p = row[v] / 5.5;
        let se = (p * (1.0 - p) / from_one).sqrt();
        assert!((counts[v] / from_one - p).abs() < 4.0 * se, "{counts:?}");
    }
}

#[test]
fn occupation_matches_stationary_measure() {
    for g in [
        common::p3_loops(),
        SkeletonGraph::wsg(6, 1)
            .unwrap()
            .with_self_loops(0.5)
            .unwrap(),
        SkeletonGraph::from_dense(
            4,
            vec![
                1.0, 2.0, 0.0, 0.0, 2.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 4.0, 0.0, 0.0, 4.0, 1.0,
            ],
        )
        .unwrap(),
    ] {
        let horizon = 1e4;
        let traj = simulate_walkers(
            &g,
            1.0,
            &WalkerState::new(vec![0]),
            horizon,
            RngSeed::new(31, 0),
        )
        .unwrap();
        let mu = common::stationary(&g);
        let tv: f64 = (0..g.vertex_count())
            .map(|u| (traj.occupation_time(|x| x.positions()[0] == u) / horizon - mu[u]).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 2e-2, "TV {tv}");
    }
}

#[test]
fn distinct_edges_are_uncorrelated() {
    let g = SkeletonGraph::cycle(4).unwrap();
    let runs = 1000;
    let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
    for r in 0..runs {
        let traj = simulate_edges(
            &g,
            1.0,
            1.0,
            &EdgeConfiguration::all_on(4),
            20.0,
            RngSeed::new(41, r),
        )
        .unwrap();
        let end = traj.final_state();
        let (x, y) = (end.is_on(0) as u8 as f64, end.is_on(1) as u8 as f64);
        a += x;
        b += y;
        ab += x * y;
    }
    let n = runs as f64;
    let (pa, pb) = (a / n, b / n);
    let corr = (ab / n - pa * pb) / (pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt();
    assert!(corr.abs() < 0.05, "correlation {corr}");
}
