//! A quick invariant suite for a fresh build, a few seconds end to end.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    averaging_experiment, enumerate_candidate_equilibria, instability_direction, krw_trial,
    quadratic_form, run_trials, verify_fixed_point_drc, verify_fixed_point_krw, DrcCheck,
    Experiment, Theta0Spec,
};
use crate::config::ExperimentConfig;
use crate::dynamics::{energy, energy_gradient, energy_hessian, krw_rhs, ModelParams};
use crate::formats::{parse_graph, parse_trajectory, write_graph, write_trajectory};
use crate::graph::{SkeletonGraph, DEFAULT_ENUMERATION_CAP};
use crate::integrator::{time_change_check, IntegratorConfig};
use crate::jump::{simulate_walkers, RngSeed, WalkerState};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfCheck {
    match f() {
        Ok((pass, detail)) => SelfCheck { name, pass, detail },
        Err(e) => SelfCheck {
            name,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn p3_loops() -> SkeletonGraph {
    SkeletonGraph::path(3)
        .and_then(|g| g.with_self_loops(1.0))
        .expect("P3 is connected")
}

fn random_case(rng: &mut ChaCha8Rng) -> (SkeletonGraph, WalkerState, Vec<f64>) {
    let nv = rng.random_range(2..6);
    let g = SkeletonGraph::erdos_renyi(nv, 0.6, rng.random())
        .unwrap_or_else(|_| SkeletonGraph::path(nv).expect("path is connected"))
        .with_self_loops(rng.random_range(0.2..2.0))
        .expect("positive loop weight");
    let n = rng.random_range(1..6);
    let x = WalkerState::new((0..n).map(|_| rng.random_range(0..nv)).collect());
    let theta = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
    (g, x, theta)
}

/// Phase grid with `m` points per coordinate, first phase pinned to 0.
fn grid(n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..m.pow(n as u32 - 1))
        .map(|mut idx| {
            let mut th = vec![0.0; n];
            for t in th.iter_mut().skip(1) {
                *t = 2.0 * PI * (idx % m) as f64 / m as f64;
                idx /= m;
            }
            th
        })
        .collect()
}

fn on_zero_pi(theta: &[f64]) -> bool {
    theta.iter().all(|t| {
        let r = t.rem_euclid(PI);
        r < 1e-9 || PI - r < 1e-9
    })
}

pub fn run() -> Vec<SelfCheck> {
    vec![
        check("gradient-flow identity", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let (mut id, mut fd) = (0.0_f64, 0.0_f64);
            for _ in 0..2000 {
                let (g, x, theta) = random_case(&mut rng);
                let n = theta.len();
                let p = ModelParams::homogeneous(2.0, n)?;
                let b = krw_rhs(&theta, &x, &g, &p)?;
                let grad = energy_gradient(&theta, &x, &g)?;
                for i in 0..n {
                    id = id.max((b[i] + 2.0 / n as f64 * grad[i]).abs());
                    let (mut up, mut dn) = (theta.clone(), theta.clone());
                    up[i] += 1e-6;
                    dn[i] -= 1e-6;
                    let diff = (energy(&up, &x, &g)? - energy(&dn, &x, &g)?) / 2e-6;
                    fd = fd.max((diff - grad[i]).abs());
                }
            }
            Ok((
                id < 1e-12 && fd < 1e-6,
                format!("identity {id:.1e}, finite differences {fd:.1e}"),
            ))
        }),
        check("Hessian PSD on Δ(π/3)", || {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut worst = f64::INFINITY;
            for _ in 0..500 {
                let (g, x, mut theta) = random_case(&mut rng);
                let base = theta[0];
                for t in theta.iter_mut() {
                    *t = base + rng.random_range(0.0..PI / 3.0);
                }
                worst = worst.min(
                    energy_hessian(&theta, &x, &g)?
                        .symmetric_eigenvalues()
                        .min(),
                );
            }
            Ok((worst >= -1e-10, format!("smallest eigenvalue {worst:.1e}")))
        }),
        check("cohesive invariance, sync and conservation", || {
            let g = SkeletonGraph::complete(3)?.with_self_loops(1.0)?;
            let exp = Experiment::new(
                g,
                ModelParams::homogeneous(1.0, 3)?,
                Theta0Spec::Cohesive { gamma: PI / 3.0 },
                100.0,
                3,
            );
            let runs = run_trials(10, |t| {
                let tr = krw_trial(&exp, 1.0, t)?;
                let last = tr
                    .path
                    .final_diagnostics()
                    .map_or(f64::INFINITY, |d| d.dist_sync);
                Ok((
                    tr.path.spread_non_increasing(1e-8),
                    last,
                    tr.path.max_sum_drift_rate(),
                ))
            })?;
            let ok = runs.iter().all(|(m, d, s)| *m && *d < 1e-3 && *s < 1e-9);
            let drift = runs.iter().map(|r| r.2).fold(0.0, f64::max);
            Ok((ok, format!("10 trials, worst sum drift rate {drift:.1e}")))
        }),
        check("fixed points of the walker model are S", || {
            let mut mismatches = 0;
            for (g, n) in [
                (p3_loops(), 2),
                (SkeletonGraph::cycle(4)?.with_self_loops(1.0)?, 3),
            ] {
                for th in grid(n, 8) {
                    let r = verify_fixed_point_krw(&th, &g, n, DEFAULT_ENUMERATION_CAP)?;
                    mismatches += usize::from(r.is_fixed_point != on_zero_pi(&th));
                }
                mismatches += usize::from(enumerate_candidate_equilibria(n)?.len() != 1 << (n - 1));
            }
            Ok((mismatches == 0, format!("{mismatches} mismatches")))
        }),
        check("single-edge reduction for the edge model", || {
            let g = SkeletonGraph::wsg(6, 1)?;
            let mut disagreements = 0;
            let candidates = grid(6, 4);
            for th in &candidates {
                let full = verify_fixed_point_drc(th, &g, DrcCheck::Exhaustive { cap: 1 << 12 })?;
                let single = verify_fixed_point_drc(th, &g, DrcCheck::SingleEdge)?;
                disagreements += usize::from(full.is_fixed_point != single.is_fixed_point)
                    + usize::from(full.is_fixed_point != on_zero_pi(th));
            }
            Ok((
                disagreements == 0,
                format!(
                    "{} candidates, {disagreements} disagreements",
                    candidates.len()
                ),
            ))
        }),
        check("instability quadratic form", || {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut bad = 0;
            for _ in 0..1000 {
                let (g, x, _) = random_case(&mut rng);
                let theta: Vec<f64> = (0..x.len())
                    .map(|_| if rng.random_bool(0.5) { 0.0 } else { PI })
                    .collect();
                let q = quadratic_form(&theta, &x, &g, &instability_direction(&theta)?)?;
                let pos = x.positions();
                let interacting = (0..theta.len()).any(|i| {
                    (0..theta.len()).any(|j| theta[i] != theta[j] && g.weight(pos[i], pos[j]) > 0.0)
                });
                bad += usize::from(interacting && q >= 0.0);
            }
            Ok((
                bad == 0,
                format!("{bad} non-negative forms with an interacting unequal pair"),
            ))
        }),
        check("time-change identity", || {
            let mut worst = 0.0_f64;
            for (s, eps) in [0.1, 1.0, 10.0].into_iter().enumerate() {
                worst = worst.max(time_change_check(
                    &p3_loops(),
                    &WalkerState::new(vec![0, 1, 2]),
                    &ModelParams::homogeneous(1.0, 3)?,
                    eps,
                    &[0.0, 2.0, 4.0],
                    5.0,
                    RngSeed::new(5, s as u64),
                    &IntegratorConfig::default(),
                )?);
            }
            Ok((worst < 1e-6, format!("max deviation {worst:.1e}")))
        }),
        check("walker occupation matches μ", || {
            let g = p3_loops();
            let traj =
                simulate_walkers(&g, 1.0, &WalkerState::new(vec![0]), 1e4, RngSeed::new(6, 0))?;
            let mu = g.stationary_measure();
            let tv = (0..3)
                .map(|u| (traj.occupation_time(|x| x.positions()[0] == u) / 1e4 - mu[u]).abs())
                .sum::<f64>()
                / 2.0;
            Ok((tv < 2e-2, format!("total variation {tv:.2e}")))
        }),
        check("seeded determinism and dump round trip", || {
            let g = SkeletonGraph::wsg(6, 1)?.with_self_loops(0.5)?;
            let x0 = WalkerState::new(vec![0, 3]);
            let a = simulate_walkers(&g, 0.3, &x0, 20.0, RngSeed::new(7, 1))?;
            let b = simulate_walkers(&g, 0.3, &x0, 20.0, RngSeed::new(7, 1))?;
            let text = write_trajectory(&a);
            let back = parse_trajectory::<WalkerState>(&text)?;
            let graph_back = parse_graph(&write_graph(&g))?;
            Ok((
                a == b && back == a && graph_back == g,
                format!("{} events", a.events().len()),
            ))
        }),
        check("config round trip", || {
            let cfg = ExperimentConfig::from_toml(
                "epsilon = 0.25\nhorizon = 10\nseed = 3\n[graph]\ngenerator = \"wsg\"\nn = 8\nk = 2\n\
                 [theta0]\nkind = \"cohesive\"\ngamma = 0.5\n",
            )?;
            let again = ExperimentConfig::from_toml(&cfg.to_toml())?;
            Ok((again == cfg, "parse → serialize → parse".into()))
        }),
        check("averaging trend", || {
            let exp = Experiment::new(
                p3_loops(),
                ModelParams::homogeneous(1.0, 3)?,
                Theta0Spec::Uniform,
                5.0,
                8,
            );
            let t = averaging_experiment(&exp, &[1.0, 0.1, 0.01], 20)?;
            let means: Vec<String> = t.rows.iter().map(|r| format!("{:.1e}", r.mean)).collect();
            Ok((
                t.is_monotone_within_std_error(),
                format!("means {}", means.join(", ")),
            ))
        }),
    ]
}
