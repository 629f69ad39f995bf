//! Experiment configuration files.
//!
//! One TOML file describes one run. Times are in seconds and angles in
//! radians throughout. Top-level keys:
//!
//! | key                         | meaning                                             |
//! |-----------------------------|-----------------------------------------------------|
//! | `model`                     | `krw`, `drc` or `averaged` (optional; subcommands imply it) |
//! | `epsilon`, `kappa`          | switching rates; `kappa` only for `drc`             |
//! | `horizon`, `trials`, `seed` | run length, number of trials, base seed             |
//! | `graph.generator`           | `path`, `cycle`, `complete`, `wsg`, `erdos_renyi`, `file` |
//! | `graph.n`, `graph.k`, `graph.p`, `graph.seed`, `graph.path` | generator parameters |
//! | `graph.self_loops`          | weight set on every diagonal entry                  |
//! | `params.coupling`           | `K`                                                 |
//! | `params.population`         | number of walkers (`krw`/`averaged`)                 |
//! | `params.frequencies`        | natural frequencies, zero when absent               |
//! | `walkers0`, `edges0`        | initial graph state; stationary draw / all on when absent |
//! | `integrator.*`              | `method` (`rk4`/`dopri5`), `max_step`, `sample_interval`, `abs_tol` |
//! | `theta0.kind`               | `uniform`, `cohesive` (`gamma`), `fixed` (`values`), `fixed_with_noise` (`values`, `radius`), `twisted` (`winding`) |
//! | `sync.*`                    | `tol`, `dwell`, `threshold` for synchronization runs |
//! | `sweep.epsilons`            | decreasing ε list for the averaging sweep           |
//! | `escape.radius`, `escape.min_fraction` | escape-ball radius and reported pass threshold |
//! | `equilibria.cap`, `equilibria.exhaustive` | enumeration budget and edge-subset mode |
//! | `output.dir`, `output.paths`, `output.trajectories` | output directory and per-trial files |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{Experiment, Theta0Spec, DEFAULT_DWELL, DEFAULT_SYNC_TOL};
use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::graph::{SkeletonGraph, DEFAULT_ENUMERATION_CAP};
use crate::integrator::{IntegratorConfig, Method};
use crate::jump::{EdgeConfiguration, WalkerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Krw,
    Drc,
    Averaged,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Krw => "krw",
            Model::Drc => "drc",
            Model::Averaged => "averaged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Path,
    Cycle,
    Complete,
    Wsg,
    ErdosRenyi,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub generator: Generator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_loops: Option<f64>,
}

impl GraphSpec {
    pub fn generator(generator: Generator, n: usize) -> Self {
        GraphSpec {
            generator,
            n: Some(n),
            k: None,
            p: None,
            seed: None,
            path: None,
            self_loops: None,
        }
    }

    /// Builds the skeleton; relative file paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<SkeletonGraph> {
        let need_n = || self.n.ok_or_else(|| required("graph.n", self.generator));
        let g = match self.generator {
            Generator::Path => SkeletonGraph::path(need_n()?),
            Generator::Cycle => SkeletonGraph::cycle(need_n()?),
            Generator::Complete => SkeletonGraph::complete(need_n()?),
            Generator::Wsg => {
                let k = self.k.ok_or_else(|| required("graph.k", self.generator))?;
                SkeletonGraph::wsg(need_n()?, k)
            }
            Generator::ErdosRenyi => {
                let p = self.p.ok_or_else(|| required("graph.p", self.generator))?;
                SkeletonGraph::erdos_renyi(need_n()?, p, self.seed.unwrap_or(0))
            }
            Generator::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| required("graph.path", self.generator))?;
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::param("graph.path", format!("{}: {e}", full.display())))?;
                crate::formats::parse_graph(&text)
            }
        }
        .map_err(|e| scope("graph", e))?;
        match self.self_loops {
            Some(w) => g
                .with_self_loops(w)
                .map_err(|e| scope("graph.self_loops", e)),
            None => Ok(g),
        }
    }
}

fn required(field: &str, generator: Generator) -> Error {
    Error::param(
        field,
        format!("required for generator `{}`", generator_name(generator)),
    )
}

fn generator_name(g: Generator) -> &'static str {
    match g {
        Generator::Path => "path",
        Generator::Cycle => "cycle",
        Generator::Complete => "complete",
        Generator::Wsg => "wsg",
        Generator::ErdosRenyi => "erdos_renyi",
        Generator::File => "file",
    }
}

/// Prefixes the field name of parameter errors and wraps other errors so
/// the message always names a config field.
fn scope(prefix: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => {
            Error::param(format!("{prefix}.{name}"), reason)
        }
        other => Error::param(prefix, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        ParamsSpec {
            coupling: default_coupling(),
            population: None,
            frequencies: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk4,
    Dopri5,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default = "default_method")]
    pub method: MethodName,
    /// Defaults to `min(1e-2, ε/10)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            method: default_method(),
            max_step: None,
            sample_interval: default_sample_interval(),
            abs_tol: default_abs_tol(),
        }
    }
}

impl IntegratorSpec {
    pub fn method(&self) -> Method {
        match self.method {
            MethodName::Rk4 => Method::Rk4,
            MethodName::Dopri5 => Method::Dopri5 {
                abs_tol: self.abs_tol,
            },
        }
    }

    pub fn build(&self, epsilon: f64) -> Result<IntegratorConfig> {
        let max_step = self.max_step.unwrap_or((epsilon / 10.0).min(1e-2));
        IntegratorConfig::new(max_step, self.sample_interval, self.method())
            .map_err(|e| scope("integrator", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    /// Reported pass threshold for the synchronized fraction.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for SyncSpec {
    fn default() -> Self {
        SyncSpec {
            tol: default_tol(),
            dwell: default_dwell(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            epsilons: default_epsilons(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeSpec {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_min_fraction")]
    pub min_fraction: f64,
}

impl Default for EscapeSpec {
    fn default() -> Self {
        EscapeSpec {
            radius: default_radius(),
            min_fraction: default_min_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaSpec {
    #[serde(default = "default_cap")]
    pub cap: u64,
    /// Check every edge subset instead of single edges only.
    #[serde(default)]
    pub exhaustive: bool,
}

impl Default for EquilibriaSpec {
    fn default() -> Self {
        EquilibriaSpec {
            cap: default_cap(),
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write one path CSV per trial.
    #[serde(default)]
    pub paths: bool,
    /// Write one jump-trajectory dump per trial.
    #[serde(default)]
    pub trajectories: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub horizon: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walkers0: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges0: Option<Vec<bool>>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub theta0: Theta0Spec,
    #[serde(default)]
    pub sync: SyncSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub escape: EscapeSpec,
    #[serde(default)]
    pub equilibria: EquilibriaSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// TOML integers are signed, so larger seeds could not be echoed back.
fn echoable(field: &str, seed: Option<u64>) -> Result<()> {
    match seed {
        Some(s) if s > i64::MAX as u64 => Err(Error::param(
            field,
            format!("must be at most {}, got {s}", i64::MAX),
        )),
        _ => Ok(()),
    }
}

fn default_coupling() -> f64 {
    1.0
}
fn default_method() -> MethodName {
    MethodName::Rk4
}
fn default_sample_interval() -> f64 {
    0.1
}
fn default_abs_tol() -> f64 {
    1e-9
}
fn default_tol() -> f64 {
    DEFAULT_SYNC_TOL
}
fn default_dwell() -> f64 {
    DEFAULT_DWELL
}
fn default_threshold() -> f64 {
    0.95
}
fn default_epsilons() -> Vec<f64> {
    vec![1.0, 0.3, 0.1, 0.03, 0.01]
}
fn default_radius() -> f64 {
    0.1
}
fn default_min_fraction() -> f64 {
    0.9
}
fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}
fn default_epsilon() -> f64 {
    1.0
}
fn default_trials() -> u64 {
    1
}

/// A configuration checked against one model, with the graph built.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub model: Model,
    pub experiment: Experiment,
    pub epsilon: f64,
    pub kappa: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::param("config", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration types serialize to TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::param("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Validates the configuration for `model` and builds the experiment.
    /// Relative graph paths resolve against `base`. Every error names the
    /// offending field.
    pub fn resolve(&self, model: Model, base: &Path) -> Result<ResolvedConfig> {
        if let Some(m) = self.model {
            if m != model {
                return Err(Error::param(
                    "model",
                    format!(
                        "config is for `{}` but `{}` was requested",
                        m.name(),
                        model.name()
                    ),
                ));
            }
        }
        positive("epsilon", self.epsilon)?;
        echoable("seed", Some(self.seed))?;
        echoable("graph.seed", self.graph.seed)?;
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::param(
                "horizon",
                format!("must be finite and >= 0, got {}", self.horizon),
            ));
        }
        let kappa = match (model, self.kappa) {
            (Model::Drc, Some(k)) => {
                positive("kappa", k)?;
                k
            }
            (Model::Drc, None) => {
                return Err(Error::param("kappa", "required for the `drc` model"))
            }
            (_, Some(_)) => {
                return Err(Error::param("kappa", "only meaningful for the `drc` model"))
            }
            (_, None) => f64::NAN,
        };
        positive("sync.tol", self.sync.tol)?;
        if !(self.sync.dwell.is_finite() && self.sync.dwell >= 0.0) {
            return Err(Error::param("sync.dwell", "must be finite and >= 0"));
        }
        unit("sync.threshold", self.sync.threshold)?;
        positive("escape.radius", self.escape.radius)?;
        unit("escape.min_fraction", self.escape.min_fraction)?;
        for (i, e) in self.sweep.epsilons.iter().enumerate() {
            positive(&format!("sweep.epsilons[{i}]"), *e)?;
        }
        if self.sweep.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param(
                "sweep.epsilons",
                "must be strictly decreasing",
            ));
        }

        let graph = self.graph.build(base)?;
        if model == Model::Krw {
            graph
                .require_self_loops()
                .map_err(|e| Error::param("graph.self_loops", e.to_string()))?;
        }
        let population = match model {
            Model::Drc => {
                if let Some(p) = self.params.population {
                    if p != graph.vertex_count() {
                        return Err(Error::param(
                            "params.population",
                            format!(
                                "the drc model has one oscillator per vertex ({})",
                                graph.vertex_count()
                            ),
                        ));
                    }
                }
                graph.vertex_count()
            }
            _ => match (self.params.population, &self.params.frequencies) {
                (Some(p), _) => p,
                (None, Some(f)) => f.len(),
                (None, None) => {
                    return Err(Error::param("params.population", "required for this model"))
                }
            },
        };
        if population == 0 {
            return Err(Error::param("params.population", "must be at least 1"));
        }
        let frequencies = self
            .params
            .frequencies
            .clone()
            .unwrap_or_else(|| vec![0.0; population]);
        if frequencies.len() != population {
            return Err(Error::param(
                "params.frequencies",
                format!("expected {population} entries, got {}", frequencies.len()),
            ));
        }
        let params =
            ModelParams::new(self.params.coupling, frequencies).map_err(|e| scope("params", e))?;
        self.theta0.validate(population)?;

        self.integrator.build(self.epsilon)?;
        for eps in &self.sweep.epsilons {
            self.integrator.build(*eps)?;
        }
        let walkers0 = match &self.walkers0 {
            Some(x) if model == Model::Krw => {
                let x = WalkerState::new(x.clone());
                if x.len() != population {
                    return Err(Error::param(
                        "walkers0",
                        format!("expected {population} positions"),
                    ));
                }
                x.validate(&graph)
                    .map_err(|e| Error::param("walkers0", e.to_string()))?;
                Some(x)
            }
            Some(_) => {
                return Err(Error::param(
                    "walkers0",
                    "only meaningful for the `krw` model",
                ))
            }
            None => None,
        };
        let edges0 = match &self.edges0 {
            Some(bits) if model == Model::Drc => {
                let m = graph.edge_set().len();
                if bits.len() != m {
                    return Err(Error::param("edges0", format!("expected {m} edge bits")));
                }
                Some(EdgeConfiguration::new(bits.clone()))
            }
            Some(_) => {
                return Err(Error::param(
                    "edges0",
                    "only meaningful for the `drc` model",
                ))
            }
            None => None,
        };
        let experiment = Experiment {
            graph,
            params,
            theta0: self.theta0.clone(),
            walkers0,
            edges0,
            horizon: self.horizon,
            method: self.integrator.method(),
            max_step: self.integrator.max_step,
            sample_interval: self.integrator.sample_interval,
            seed: self.seed,
        };
        Ok(ResolvedConfig {
            model,
            experiment,
            epsilon: self.epsilon,
            kappa,
        })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::param(
            name,
            format!("must be finite and positive, got {v}"),
        ));
    }
    Ok(())
}

fn unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"
        epsilon = 0.1
        horizon = 5
        trials = 3
        seed = 7

        [graph]
        generator = "complete"
        n = 3
        self_loops = 1.0

        [params]
        coupling = 1
        population = 3

        [theta0]
        kind = "cohesive"
        gamma = 1.0471975511965976
    "#;

    fn name_of(e: Error) -> String {
        match e {
            Error::InvalidParameter { name, .. } => name,
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parses_and_resolves() {
        let cfg = ExperimentConfig::from_toml(TRIANGLE).unwrap();
        let r = cfg.resolve(Model::Krw, Path::new(".")).unwrap();
        assert_eq!(r.experiment.params.population(), 3);
        assert_eq!(r.experiment.integrator_for(0.1).unwrap().max_step, 1e-2);
        assert_eq!(cfg.sweep.epsilons.len(), 5);
        assert!(matches!(cfg.theta0, Theta0Spec::Cohesive { .. }));
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::from_toml(TRIANGLE).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_toml(), again.to_toml());
    }

    #[test]
    fn errors_name_the_field() {
        let base = ExperimentConfig::from_toml(TRIANGLE).unwrap();
        let mut c = base.clone();
        c.graph.self_loops = None;
        assert_eq!(
            name_of(c.resolve(Model::Krw, Path::new(".")).unwrap_err()),
            "graph.self_loops"
        );
        let mut c = base.clone();
        c.epsilon = -1.0;
        assert_eq!(
            name_of(c.resolve(Model::Krw, Path::new(".")).unwrap_err()),
            "epsilon"
        );
        assert_eq!(
            name_of(base.resolve(Model::Drc, Path::new(".")).unwrap_err()),
            "kappa"
        );
        let mut c = base.clone();
        c.integrator.sample_interval = 1e-4;
        assert_eq!(
            name_of(c.resolve(Model::Krw, Path::new(".")).unwrap_err()),
            "integrator.sample_interval"
        );
        let mut c = base.clone();
        c.graph.generator = Generator::Wsg;
        assert_eq!(
            name_of(c.resolve(Model::Krw, Path::new(".")).unwrap_err()),
            "graph.k"
        );
        let mut c = base.clone();
        c.model = Some(Model::Drc);
        assert_eq!(
            name_of(c.resolve(Model::Krw, Path::new(".")).unwrap_err()),
            "model"
        );
        let mut c = base;
        c.sweep.epsilons = vec![0.1, 0.2];
        assert_eq!(
            name_of(c.resolve(Model::Krw, Path::new(".")).unwrap_err()),
            "sweep.epsilons"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{TRIANGLE}\n[output]\nverbose = true\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{TRIANGLE}\n[theta0]\nkind = \"uniform\"\nradius = 1\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn drc_population_is_vertex_count() {
        let text = r#"
            model = "drc"
            kappa = 1
            horizon = 1
            [graph]
            generator = "wsg"
            n = 10
            k = 1
            [theta0]
            kind = "twisted"
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let r = cfg.resolve(Model::Drc, Path::new(".")).unwrap();
        assert_eq!(r.experiment.params.population(), 10);
        assert_eq!(r.kappa, 1.0);
    }
}
