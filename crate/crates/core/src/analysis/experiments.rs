//! Monte-Carlo experiments over seeded trials.
//!
//! Trial `t` draws everything from the streams `trial_stream(t, ·)` of the
//! experiment seed, independently of how many workers run and in which
//! order trials complete. Results are collected in trial order.

use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sync::{EscapeDetector, SyncDetector, Theta0Spec};
use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::graph::SkeletonGraph;
use crate::integrator::{
    integrate_averaged_aligned, integrate_drc, integrate_drc_with, integrate_krw,
    integrate_krw_with, sup_deviation, IntegratorConfig, Method, SampledPath,
};
use crate::jump::{
    simulate_edges, simulate_walkers, trial_stream, EdgeConfiguration, JumpTrajectory, RngSeed,
    StreamPurpose, WalkerState,
};

/// Everything a trial needs apart from the switching rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub graph: SkeletonGraph,
    pub params: ModelParams,
    pub theta0: Theta0Spec,
    /// Initial walker positions; drawn i.i.d. from the stationary measure
    /// when absent.
    pub walkers0: Option<WalkerState>,
    /// Initial edge states; all edges on when absent.
    pub edges0: Option<EdgeConfiguration>,
    pub horizon: f64,
    pub method: Method,
    /// Step cap; `min(1e-2, ε/10)` when absent.
    pub max_step: Option<f64>,
    pub sample_interval: f64,
    pub seed: u64,
}

impl Experiment {
    pub fn new(
        graph: SkeletonGraph,
        params: ModelParams,
        theta0: Theta0Spec,
        horizon: f64,
        seed: u64,
    ) -> Self {
        Experiment {
            graph,
            params,
            theta0,
            walkers0: None,
            edges0: None,
            horizon,
            method: Method::Rk4,
            max_step: None,
            sample_interval: 0.1,
            seed,
        }
    }

    pub fn integrator_for(&self, epsilon: f64) -> Result<IntegratorConfig> {
        let max_step = self.max_step.unwrap_or((epsilon / 10.0).min(1e-2));
        IntegratorConfig::new(max_step, self.sample_interval, self.method)
    }

    pub fn stream(&self, trial: u64, purpose: StreamPurpose) -> RngSeed {
        RngSeed::new(self.seed, trial_stream(trial, purpose))
    }

    pub fn initial_phases(&self, trial: u64, n: usize) -> Result<Vec<f64>> {
        let mut rng = self.stream(trial, StreamPurpose::InitialPhases).rng();
        self.theta0.sample(n, &mut rng)
    }

    pub fn initial_walkers(&self, trial: u64) -> Result<WalkerState> {
        let n = self.params.population();
        if let Some(x) = &self.walkers0 {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
            x.validate(&self.graph)?;
            return Ok(x.clone());
        }
        let mu = self.graph.stationary_measure();
        let dist = WeightedIndex::new(&mu).map_err(|e| Error::Consistency(e.to_string()))?;
        let mut rng = self.stream(trial, StreamPurpose::InitialWalkers).rng();
        Ok(WalkerState::new(
            (0..n).map(|_| dist.sample(&mut rng)).collect(),
        ))
    }

    pub fn initial_edges(&self) -> EdgeConfiguration {
        self.edges0
            .clone()
            .unwrap_or_else(|| EdgeConfiguration::all_on(self.graph.edge_set().len()))
    }

    pub fn walker_trajectory(
        &self,
        epsilon: f64,
        trial: u64,
    ) -> Result<JumpTrajectory<WalkerState>> {
        let x0 = self.initial_walkers(trial)?;
        simulate_walkers(
            &self.graph,
            epsilon,
            &x0,
            self.horizon,
            self.stream(trial, StreamPurpose::Walkers),
        )
    }

    pub fn edge_trajectory(
        &self,
        epsilon: f64,
        kappa: f64,
        trial: u64,
    ) -> Result<JumpTrajectory<EdgeConfiguration>> {
        simulate_edges(
            &self.graph,
            epsilon,
            kappa,
            &self.initial_edges(),
            self.horizon,
            self.stream(trial, StreamPurpose::Edges),
        )
    }
}

/// One fully recorded trial.
#[derive(Debug, Clone)]
pub struct Trial<S> {
    pub trial: u64,
    pub theta0: Vec<f64>,
    pub trajectory: JumpTrajectory<S>,
    pub path: SampledPath,
}

pub fn krw_trial(exp: &Experiment, epsilon: f64, trial: u64) -> Result<Trial<WalkerState>> {
    let trajectory = exp.walker_trajectory(epsilon, trial)?;
    let theta0 = exp.initial_phases(trial, exp.params.population())?;
    let path = integrate_krw(
        &exp.graph,
        &trajectory,
        &theta0,
        &exp.params,
        &exp.integrator_for(epsilon)?,
    )?;
    Ok(Trial {
        trial,
        theta0,
        trajectory,
        path,
    })
}

pub fn drc_trial(
    exp: &Experiment,
    epsilon: f64,
    kappa: f64,
    trial: u64,
) -> Result<Trial<EdgeConfiguration>> {
    let trajectory = exp.edge_trajectory(epsilon, kappa, trial)?;
    let theta0 = exp.initial_phases(trial, exp.graph.vertex_count())?;
    let path = integrate_drc(
        &exp.graph,
        &trajectory,
        &theta0,
        &exp.params,
        &exp.integrator_for(epsilon)?,
    )?;
    Ok(Trial {
        trial,
        theta0,
        trajectory,
        path,
    })
}

/// Runs `f` for trials `0..trials` on the current rayon pool and returns
/// the results in trial order.
pub fn run_trials<T: Send>(
    trials: u64,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingRow {
    pub epsilon: f64,
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingTable {
    pub rows: Vec<AveragingRow>,
    /// `deviations[k][t]`: sup-deviation of trial `t` in row `k`.
    pub deviations: Vec<Vec<f64>>,
}

impl AveragingTable {
    /// Each row's mean exceeds the previous one by at most the larger of
    /// the two standard errors.
    pub fn is_monotone_within_std_error(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].mean <= w[0].mean + w[0].std_error.max(w[1].std_error))
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "epsilon,trials,mean_sup_deviation,std_error")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.epsilon, r.trials, r.mean, r.std_error)?;
        }
        Ok(())
    }
}

/// Sample mean and standard error of the mean (0 for a single sample).
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sup-deviation between the walker-driven path and the averaged path
/// from the same initial phases, for each ε in `epsilons`.
///
/// Trial `t` uses the same streams in every row, so rows differ only in ε.
pub fn averaging_experiment(
    exp: &Experiment,
    epsilons: &[f64],
    trials: u64,
) -> Result<AveragingTable> {
    if epsilons.is_empty() {
        return Err(Error::param("epsilons", "need at least one value"));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("epsilons", "must be strictly decreasing"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let a_bar = exp.graph.averaged_coupling();
    let mut rows = Vec::with_capacity(epsilons.len());
    let mut deviations = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let devs = run_trials(trials, |t| {
            let Trial {
                theta0,
                trajectory,
                path,
                ..
            } = krw_trial(exp, eps, t)?;
            let breaks: Vec<f64> = trajectory.event_times().collect();
            let averaged = integrate_averaged_aligned(
                a_bar,
                &theta0,
                &exp.params,
                &exp.integrator_for(eps)?,
                exp.horizon,
                &breaks,
            )?;
            sup_deviation(&path, &averaged)
        })?;
        let (mean, std_error) = mean_and_std_error(&devs);
        rows.push(AveragingRow {
            epsilon: eps,
            trials,
            mean,
            std_error,
        });
        deviations.push(devs);
    }
    Ok(AveragingTable { rows, deviations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncTrial {
    pub trial: u64,
    pub sync_time: Option<f64>,
    /// Distance to sync at the last integrated sample.
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub tol: f64,
    pub dwell: f64,
    pub trials: Vec<SyncTrial>,
    pub fraction: f64,
}

impl SyncReport {
    fn from_trials(tol: f64, dwell: f64, trials: Vec<SyncTrial>) -> Self {
        let hits = trials.iter().filter(|t| t.sync_time.is_some()).count();
        let fraction = if trials.is_empty() {
            0.0
        } else {
            hits as f64 / trials.len() as f64
        };
        SyncReport {
            tol,
            dwell,
            trials,
            fraction,
        }
    }
}

/// Fraction of walker-driven trials that synchronize. Integration of a
/// trial stops once synchronization is certified.
pub fn sync_probability_experiment(
    exp: &Experiment,
    epsilon: f64,
    trials: u64,
    tol: f64,
    dwell: f64,
) -> Result<SyncReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }
    let cfg = exp.integrator_for(epsilon)?;
    let results = run_trials(trials, |t| {
        let traj = exp.walker_trajectory(epsilon, t)?;
        let theta0 = exp.initial_phases(t, exp.params.population())?;
        let mut det = SyncDetector::new(tol, dwell).stopping();
        integrate_krw_with(&exp.graph, &traj, &theta0, &exp.params, &cfg, &mut det)?;
        Ok(SyncTrial {
            trial: t,
            sync_time: det.time(),
            final_distance: det.last_distance(),
        })
    })?;
    Ok(SyncReport::from_trials(tol, dwell, results))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeTrial {
    pub trial: u64,
    pub escape_time: Option<f64>,
    pub max_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub radius: f64,
    pub trials: Vec<EscapeTrial>,
    pub escaped: u64,
}

/// Switching-edge trials started from `exp.theta0`; records when each
/// leaves the gauge-fixed ℓ∞ ball of `radius` around `center`.
pub fn escape_experiment(
    exp: &Experiment,
    epsilon: f64,
    kappa: f64,
    center: &[f64],
    radius: f64,
    trials: u64,
) -> Result<EscapeReport> {
    let n = exp.graph.vertex_count();
    if center.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: center.len(),
        });
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::param(
            "radius",
            format!("must be positive, got {radius}"),
        ));
    }
    let cfg = exp.integrator_for(epsilon)?;
    let results = run_trials(trials, |t| {
        let traj = exp.edge_trajectory(epsilon, kappa, t)?;
        let theta0 = exp.initial_phases(t, n)?;
        let mut det = EscapeDetector::new(center.to_vec(), radius);
        integrate_drc_with(&exp.graph, &traj, &theta0, &exp.params, &cfg, &mut det)?;
        Ok(EscapeTrial {
            trial: t,
            escape_time: det.escape_time(),
            max_distance: det.max_distance(),
        })
    })?;
    let escaped = results.iter().filter(|r| r.escape_time.is_some()).count() as u64;
    Ok(EscapeReport {
        radius,
        trials: results,
        escaped,
    })
}
