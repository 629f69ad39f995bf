use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde_json::{json, Value};

use kuradyn::analysis::{
    averaging_experiment, enumerate_candidate_equilibria, escape_experiment, in_equilibrium_set,
    run_trials, twisted_state, verify_fixed_point_drc, verify_fixed_point_krw, DrcCheck,
    EquilibriumReport, Experiment, SyncDetector, Theta0Spec,
};
use kuradyn::config::{ExperimentConfig, Model, ResolvedConfig};
use kuradyn::dynamics::{drc_rhs, Coupling};
use kuradyn::formats::write_trajectory;
use kuradyn::integrator::{
    integrate_averaged, integrate_drc_with, integrate_krw_with, PathObserver, SampledPath,
};
use kuradyn::jump::{EdgeConfiguration, StreamPurpose};
use kuradyn::phase::{canonical, phase_spread};
use kuradyn::selftest;
use kuradyn::Error;

use crate::output::{manifest, streams, OutputDir};
use crate::{Command, Failure};

const DEFAULT_OUTPUT_DIR: &str = "kuradyn-out";
const WALKER_GRID: usize = 12;
const EDGE_GRID: usize = 4;
const MAX_GRID_CANDIDATES: usize = 1 << 14;

fn runtime(e: Error) -> Failure {
    match e {
        Error::EnumerationBudget { .. } => Failure::Config(format!("equilibria.cap: {e}")),
        other => Failure::Consistency(other.to_string()),
    }
}

pub struct Invocation {
    command: Command,
    config: ExperimentConfig,
    resolved: ResolvedConfig,
    out: PathBuf,
    jobs: Option<usize>,
}

impl Invocation {
    pub fn load(
        command: Command,
        path: &Path,
        seed: Option<u64>,
        output: Option<PathBuf>,
        jobs: Option<usize>,
    ) -> Result<Self, Failure> {
        let mut config =
            ExperimentConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(s) = seed {
            config.seed = s;
        }
        if command == Command::TwistedEscape && config.theta0 == Theta0Spec::Uniform {
            config.theta0 = Theta0Spec::Twisted { winding: 1 };
        }
        let model = match command {
            Command::RunKrw | Command::SweepEpsilon => Model::Krw,
            Command::RunDrc | Command::TwistedEscape => Model::Drc,
            Command::RunAveraged => Model::Averaged,
            Command::CheckEquilibria => match config.model.unwrap_or(Model::Krw) {
                Model::Averaged => {
                    return Err(Failure::Config(
                        "model: check-equilibria needs `krw` or `drc`".into(),
                    ))
                }
                m => m,
            },
            Command::Selftest => unreachable!("selftest needs no configuration"),
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let resolved = config
            .resolve(model, base)
            .map_err(|e| Failure::Config(e.to_string()))?;
        let out = output
            .or_else(|| config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(Invocation {
            command,
            config,
            resolved,
            out,
            jobs,
        })
    }

    pub fn execute(self) -> Result<ExitCode, Failure> {
        match self.command {
            Command::RunKrw => self.run_switching(Model::Krw),
            Command::RunDrc => self.run_switching(Model::Drc),
            Command::RunAveraged => self.run_averaged(),
            Command::SweepEpsilon => self.sweep(),
            Command::CheckEquilibria => self.equilibria(),
            Command::TwistedEscape => self.escape(),
            Command::Selftest => Ok(selftest()),
        }
    }

    fn exp(&self) -> &Experiment {
        &self.resolved.experiment
    }

    fn finish(
        &self,
        dir: &OutputDir,
        summary: Value,
        purposes: &[StreamPurpose],
    ) -> Result<(), Failure> {
        dir.write_json("summary.json", &summary)?;
        let table = streams(self.config.seed, self.config.trials, purposes);
        dir.write_json(
            "manifest.json",
            &manifest(self.command.name(), &self.config, table, self.jobs),
        )?;
        println!("{}: wrote {}", self.command.name(), dir.root().display());
        Ok(())
    }

    fn base_summary(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(self.command.name()));
        m.insert("model".into(), json!(self.resolved.model.name()));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("seed".into(), json!(self.config.seed));
        m.insert("horizon".into(), json!(self.config.horizon));
        m.insert("trials".into(), json!(self.config.trials));
        m.insert("epsilon".into(), json!(self.resolved.epsilon));
        if self.resolved.model == Model::Drc {
            m.insert("kappa".into(), json!(self.resolved.kappa));
        }
        m
    }

    fn run_switching(&self, model: Model) -> Result<ExitCode, Failure> {
        let exp = self.exp();
        let (eps, kappa) = (self.resolved.epsilon, self.resolved.kappa);
        let sync = &self.config.sync;
        let keep_paths = self.config.output.paths;
        let cfg = exp.integrator_for(eps).map_err(runtime)?;
        let n = exp.params.population();
        let results = run_trials(self.config.trials, |t| {
            let theta0 = exp.initial_phases(t, n)?;
            let mut tracker = Tracker::new(sync.tol, sync.dwell);
            let mut path = SampledPath::default();
            let (jumps, dump) = if model == Model::Krw {
                let traj = exp.walker_trajectory(eps, t)?;
                if keep_paths {
                    integrate_krw_with(
                        &exp.graph,
                        &traj,
                        &theta0,
                        &exp.params,
                        &cfg,
                        &mut Tee(&mut tracker, &mut path),
                    )?;
                } else {
                    integrate_krw_with(
                        &exp.graph,
                        &traj,
                        &theta0,
                        &exp.params,
                        &cfg,
                        &mut tracker,
                    )?;
                }
                (
                    traj.events().len(),
                    self.config
                        .output
                        .trajectories
                        .then(|| write_trajectory(&traj)),
                )
            } else {
                let traj = exp.edge_trajectory(eps, kappa, t)?;
                if keep_paths {
                    integrate_drc_with(
                        &exp.graph,
                        &traj,
                        &theta0,
                        &exp.params,
                        &cfg,
                        &mut Tee(&mut tracker, &mut path),
                    )?;
                } else {
                    integrate_drc_with(
                        &exp.graph,
                        &traj,
                        &theta0,
                        &exp.params,
                        &cfg,
                        &mut tracker,
                    )?;
                }
                (
                    traj.events().len(),
                    self.config
                        .output
                        .trajectories
                        .then(|| write_trajectory(&traj)),
                )
            };
            Ok(TrialOutcome {
                trial: t,
                theta0,
                tracker,
                jumps,
                path: keep_paths.then_some(path),
                dump,
            })
        })
        .map_err(runtime)?;

        let dir = OutputDir::create(self.out.clone())?;
        write_trial_files(&dir, &results)?;
        dir.write_with("trials.csv", |w| {
            writeln!(
                w,
                "trial,jumps,final_dist_sync,sync_time,spread_non_increasing,max_sum_drift_rate"
            )?;
            for r in &results {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    r.trial,
                    r.jumps,
                    r.tracker.last_dist,
                    r.tracker
                        .sync
                        .time()
                        .map_or(String::new(), |s| s.to_string()),
                    r.tracker.spread_ok(),
                    r.tracker.drift_rate
                )?;
            }
            Ok(())
        })?;
        let synced = results
            .iter()
            .filter(|r| r.tracker.sync.time().is_some())
            .count();
        let fraction = if results.is_empty() {
            0.0
        } else {
            synced as f64 / results.len() as f64
        };
        let mut s = self.base_summary();
        s.insert(
            "results".into(),
            Value::Array(results.iter().map(TrialOutcome::json).collect()),
        );
        s.insert(
            "sync".into(),
            json!({
                "tol": sync.tol,
                "dwell": sync.dwell,
                "threshold": sync.threshold,
                "fraction": fraction,
                "meets_threshold": !results.is_empty() && fraction >= sync.threshold,
            }),
        );
        let purposes: &[StreamPurpose] = if model == Model::Krw {
            if exp.walkers0.is_some() {
                &[StreamPurpose::Walkers, StreamPurpose::InitialPhases]
            } else {
                &[
                    StreamPurpose::Walkers,
                    StreamPurpose::InitialPhases,
                    StreamPurpose::InitialWalkers,
                ]
            }
        } else {
            &[StreamPurpose::Edges, StreamPurpose::InitialPhases]
        };
        self.finish(&dir, Value::Object(s), purposes)?;
        Ok(ExitCode::SUCCESS)
    }

    fn run_averaged(&self) -> Result<ExitCode, Failure> {
        let exp = self.exp();
        let a_bar = exp.graph.averaged_coupling();
        let cfg = exp.integrator_for(self.resolved.epsilon).map_err(runtime)?;
        let sync = &self.config.sync;
        let n = exp.params.population();
        let results = run_trials(self.config.trials, |t| {
            let theta0 = exp.initial_phases(t, n)?;
            let path = integrate_averaged(a_bar, &theta0, &exp.params, &cfg, exp.horizon)?;
            let mut tracker = Tracker::new(sync.tol, sync.dwell);
            for (time, theta) in path.times.iter().zip(&path.states) {
                tracker.push(*time, theta);
            }
            Ok(TrialOutcome {
                trial: t,
                theta0,
                tracker,
                jumps: 0,
                path: self.config.output.paths.then_some(path),
                dump: None,
            })
        })
        .map_err(runtime)?;
        let dir = OutputDir::create(self.out.clone())?;
        write_trial_files(&dir, &results)?;
        let mut s = self.base_summary();
        s.remove("epsilon");
        s.insert("a_bar".into(), json!(a_bar));
        s.insert(
            "results".into(),
            Value::Array(results.iter().map(TrialOutcome::json).collect()),
        );
        self.finish(&dir, Value::Object(s), &[StreamPurpose::InitialPhases])?;
        Ok(ExitCode::SUCCESS)
    }

    fn sweep(&self) -> Result<ExitCode, Failure> {
        let exp = self.exp();
        let epsilons = &self.config.sweep.epsilons;
        let (rows, monotone) = if self.config.trials == 0 {
            (Vec::new(), true)
        } else {
            let table = averaging_experiment(exp, epsilons, self.config.trials).map_err(runtime)?;
            let monotone = table.is_monotone_within_std_error();
            (table.rows, monotone)
        };
        let dir = OutputDir::create(self.out.clone())?;
        dir.write_with("averaging.csv", |w| {
            writeln!(
                w,
                "epsilon,trials,mean_sup_deviation,std_error,monotone_within_std_error"
            )?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.epsilon, r.trials, r.mean, r.std_error, monotone
                )?;
            }
            Ok(())
        })?;
        let halved = match (rows.first(), rows.last()) {
            (Some(first), Some(last)) if rows.len() > 1 => Some(last.mean <= 0.5 * first.mean),
            _ => None,
        };
        let mut s = self.base_summary();
        s.remove("epsilon");
        s.insert("a_bar".into(), json!(exp.graph.averaged_coupling()));
        s.insert("epsilons".into(), json!(epsilons));
        s.insert(
            "rows".into(),
            serde_json::to_value(&rows).map_err(|e| Failure::Consistency(e.to_string()))?,
        );
        s.insert("monotone_within_std_error".into(), json!(monotone));
        s.insert("last_at_most_half_first".into(), json!(halved));
        let purposes: &[StreamPurpose] = if exp.walkers0.is_some() {
            &[StreamPurpose::Walkers, StreamPurpose::InitialPhases]
        } else {
            &[
                StreamPurpose::Walkers,
                StreamPurpose::InitialPhases,
                StreamPurpose::InitialWalkers,
            ]
        };
        self.finish(&dir, Value::Object(s), purposes)?;
        Ok(ExitCode::SUCCESS)
    }

    fn equilibria(&self) -> Result<ExitCode, Failure> {
        let exp = self.exp();
        let g = &exp.graph;
        let model = self.resolved.model;
        let cap = self.config.equilibria.cap;
        let n = match model {
            Model::Krw => exp.params.population(),
            _ => g.vertex_count(),
        };
        let verify = |theta: &[f64]| -> kuradyn::Result<EquilibriumReport> {
            match model {
                Model::Krw => verify_fixed_point_krw(theta, g, n, cap),
                _ => {
                    let mode = if self.config.equilibria.exhaustive {
                        DrcCheck::Exhaustive { cap }
                    } else {
                        DrcCheck::SingleEdge
                    };
                    verify_fixed_point_drc(theta, g, mode)
                }
            }
        };
        let s_set = enumerate_candidate_equilibria(n)
            .map_err(|e| Failure::Config(format!("params.population: {e}")))?;
        let s_reports: Vec<EquilibriumReport> = s_set
            .iter()
            .map(|th| verify(th.as_slice()))
            .collect::<kuradyn::Result<_>>()
            .map_err(runtime)?;
        let all_s_fixed = s_reports.iter().all(|r| r.is_fixed_point);

        let m = if model == Model::Krw {
            WALKER_GRID
        } else {
            EDGE_GRID
        };
        let grid_size = (m as u128).checked_pow(n as u32 - 1).unwrap_or(u128::MAX);
        let grid = if grid_size <= MAX_GRID_CANDIDATES as u128 {
            let candidates = phase_grid(n, m);
            let reports: Vec<(Vec<f64>, bool)> = run_trials(candidates.len() as u64, |i| {
                let th = &candidates[i as usize];
                Ok((th.clone(), verify(th)?.is_fixed_point))
            })
            .map_err(runtime)?;
            let extra: Vec<Vec<f64>> = reports
                .iter()
                .filter(|(th, fixed)| *fixed && !in_equilibrium_set(th))
                .map(|(th, _)| th.clone())
                .collect();
            Some((candidates.len(), extra))
        } else {
            None
        };
        let complete = g.is_complete();
        let s1_equals_s = grid
            .as_ref()
            .map(|(_, extra)| all_s_fixed && extra.is_empty());

        let dir = OutputDir::create(self.out.clone())?;
        let mut s = self.base_summary();
        for k in ["epsilon", "horizon", "trials", "seed"] {
            s.remove(k);
        }
        s.insert("dimension".into(), json!(n));
        s.insert("complete_skeleton".into(), json!(complete));
        s.insert(
            "check".into(),
            json!(match model {
                Model::Krw => "all walker configurations",
                _ if self.config.equilibria.exhaustive => "all edge subsets",
                _ => "single-edge subsets",
            }),
        );
        s.insert(
            "set_s".into(),
            serde_json::to_value(&s_reports).map_err(|e| Failure::Consistency(e.to_string()))?,
        );
        s.insert("all_of_s_fixed".into(), json!(all_s_fixed));
        s.insert(
            "grid".into(),
            match &grid {
                Some((size, extra)) => json!({
                    "points_per_axis": m,
                    "candidates": size,
                    "fixed_points_outside_s": extra,
                }),
                None => Value::Null,
            },
        );
        s.insert("s1_equals_s".into(), json!(s1_equals_s));
        self.finish(&dir, Value::Object(s), &[])?;

        // S is always fixed; a fixed point off S contradicts the
        // characterisation, except on complete skeletons where it is not
        // claimed for walkers.
        let claimed = model == Model::Drc || !complete;
        if !all_s_fixed {
            return Err(Failure::Consistency(
                "a member of S failed fixed-point verification".into(),
            ));
        }
        if claimed && s1_equals_s == Some(false) {
            return Err(Failure::Consistency(
                "brute-force fixed points differ from S".into(),
            ));
        }
        Ok(ExitCode::SUCCESS)
    }

    fn escape(&self) -> Result<ExitCode, Failure> {
        let exp = self.exp();
        let g = &exp.graph;
        let n = g.vertex_count();
        let winding = match exp.theta0 {
            Theta0Spec::Twisted { winding } => winding,
            _ => 1,
        };
        let center = twisted_state(n, winding);
        let full = EdgeConfiguration::all_on(g.edge_set().len());
        let rhs = drc_rhs(&center, &full, g, &exp.params).map_err(runtime)?;
        let static_residual = rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let check = verify_fixed_point_drc(&center, g, DrcCheck::SingleEdge).map_err(runtime)?;
        let radius = self.config.escape.radius;
        let report = escape_experiment(
            exp,
            self.resolved.epsilon,
            self.resolved.kappa,
            &center,
            radius,
            self.config.trials,
        )
        .map_err(runtime)?;
        let fraction = if self.config.trials == 0 {
            0.0
        } else {
            report.escaped as f64 / self.config.trials as f64
        };
        let dir = OutputDir::create(self.out.clone())?;
        dir.write_with("trials.csv", |w| {
            writeln!(w, "trial,escape_time,max_distance")?;
            for t in &report.trials {
                writeln!(
                    w,
                    "{},{},{}",
                    t.trial,
                    t.escape_time.map_or(String::new(), |s| s.to_string()),
                    t.max_distance
                )?;
            }
            Ok(())
        })?;
        let mut s = self.base_summary();
        s.insert("winding".into(), json!(winding));
        s.insert("static_residual".into(), json!(static_residual));
        s.insert(
            "fixed_point_of_switching_system".into(),
            json!(check.is_fixed_point),
        );
        s.insert(
            "violation".into(),
            serde_json::to_value(&check.violation)
                .map_err(|e| Failure::Consistency(e.to_string()))?,
        );
        s.insert("radius".into(), json!(radius));
        s.insert(
            "escape".into(),
            serde_json::to_value(&report).map_err(|e| Failure::Consistency(e.to_string()))?,
        );
        s.insert("fraction".into(), json!(fraction));
        s.insert(
            "min_fraction".into(),
            json!(self.config.escape.min_fraction),
        );
        s.insert(
            "meets_min_fraction".into(),
            json!(self.config.trials > 0 && fraction >= self.config.escape.min_fraction),
        );
        s.insert(
            "note".into(),
            json!("every trial starts at t = 0 from the configured initial phases; this is weaker than instability under an adversarial choice of start time and data"),
        );
        self.finish(
            &dir,
            Value::Object(s),
            &[StreamPurpose::Edges, StreamPurpose::InitialPhases],
        )?;
        Ok(ExitCode::SUCCESS)
    }
}

pub fn selftest() -> ExitCode {
    let checks = selftest::run();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut failed = 0;
    for c in &checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!c.pass);
        println!("{tag}  {:<width$}  {}", c.name, c.detail);
    }
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn phase_grid(n: usize, m: usize) -> Vec<Vec<f64>> {
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

/// Streaming per-trial statistics.
struct Tracker {
    sync: SyncDetector,
    prev_spread: Option<f64>,
    spread_rise: f64,
    sum0: Option<f64>,
    drift_rate: f64,
    last: Vec<f64>,
    last_dist: f64,
}

impl Tracker {
    fn new(tol: f64, dwell: f64) -> Self {
        Tracker {
            sync: SyncDetector::new(tol, dwell),
            prev_spread: None,
            spread_rise: 0.0,
            sum0: None,
            drift_rate: 0.0,
            last: Vec::new(),
            last_dist: f64::NAN,
        }
    }

    fn push(&mut self, t: f64, theta: &[f64]) {
        let spread = phase_spread(theta);
        if let Some(p) = self.prev_spread {
            self.spread_rise = self.spread_rise.max(spread - p);
        }
        self.prev_spread = Some(spread);
        let sum: f64 = theta.iter().sum();
        let sum0 = *self.sum0.get_or_insert(sum);
        self.drift_rate = self.drift_rate.max((sum - sum0).abs() / t.max(1.0));
        let d = kuradyn::phase::distance_to_sync(theta);
        self.sync.push(t, d);
        self.last_dist = d;
        self.last.clear();
        self.last.extend_from_slice(theta);
    }

    fn spread_ok(&self) -> bool {
        self.spread_rise <= 1e-8
    }
}

impl PathObserver for Tracker {
    fn observe(&mut self, t: f64, theta: &[f64], _: &Coupling) {
        self.push(t, theta);
    }
}

struct Tee<'a>(&'a mut dyn PathObserver, &'a mut dyn PathObserver);

impl PathObserver for Tee<'_> {
    fn observe(&mut self, t: f64, theta: &[f64], c: &Coupling) {
        self.0.observe(t, theta, c);
        self.1.observe(t, theta, c);
    }
}

struct TrialOutcome {
    trial: u64,
    theta0: Vec<f64>,
    tracker: Tracker,
    jumps: usize,
    path: Option<SampledPath>,
    dump: Option<String>,
}

impl TrialOutcome {
    fn json(&self) -> Value {
        json!({
            "trial": self.trial,
            "theta0": self.theta0,
            "final_phases": self.tracker.last.iter().map(|&t| canonical(t)).collect::<Vec<_>>(),
            "final_dist_sync": self.tracker.last_dist,
            "sync_time": self.tracker.sync.time(),
            "spread_non_increasing": self.tracker.spread_ok(),
            "max_sum_drift_rate": self.tracker.drift_rate,
            "jumps": self.jumps,
        })
    }
}

fn write_trial_files(dir: &OutputDir, results: &[TrialOutcome]) -> Result<(), Failure> {
    for r in results {
        if let Some(p) = &r.path {
            dir.write_with(&format!("paths/trial-{}.csv", r.trial), |w| p.write_csv(w))?;
        }
        if let Some(d) = &r.dump {
            dir.write_text(&format!("trajectories/trial-{}.txt", r.trial), d)?;
        }
    }
    Ok(())
}
