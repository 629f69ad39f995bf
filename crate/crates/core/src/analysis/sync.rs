use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Coupling;
use crate::error::{Error, Result};
use crate::integrator::{PathObserver, SampledPath};
use crate::phase::{distance_to_sync, gauge_distance, phase_spread};

pub const DEFAULT_SYNC_TOL: f64 = 1e-3;
pub const DEFAULT_DWELL: f64 = 10.0;

const COHESIVE_ATTEMPTS: usize = 1_000_000;

/// How initial phases are drawn. Angles are in radians.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Theta0Spec {
    /// Uniform on the torus.
    #[default]
    Uniform,
    /// Uniform on the phase-cohesive set `Δ(γ)`.
    Cohesive {
        gamma: f64,
    },
    Fixed {
        values: Vec<f64>,
    },
    /// `values` plus independent uniform noise on `[−radius, radius]` per
    /// coordinate.
    FixedWithNoise {
        values: Vec<f64>,
        radius: f64,
    },
    /// `θ_u = 2π q u / n`.
    Twisted {
        #[serde(default = "one")]
        winding: i64,
    },
}

fn one() -> i64 {
    1
}

impl Theta0Spec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let check_values = |values: &[f64]| {
            if values.len() != n {
                return Err(Error::param(
                    "theta0.values",
                    format!("expected {n} phases, got {}", values.len()),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("theta0.values", "phases must be finite"));
            }
            Ok(())
        };
        match self {
            Theta0Spec::Uniform | Theta0Spec::Twisted { .. } => Ok(()),
            Theta0Spec::Cohesive { gamma } => {
                if !(*gamma > 0.0 && *gamma < PI) {
                    return Err(Error::param(
                        "theta0.gamma",
                        format!("must lie in (0, π), got {gamma}"),
                    ));
                }
                Ok(())
            }
            Theta0Spec::Fixed { values } => check_values(values),
            Theta0Spec::FixedWithNoise { values, radius } => {
                check_values(values)?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::param(
                        "theta0.radius",
                        format!("must be >= 0, got {radius}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Draws one phase vector of length `n`. Deterministic specs consume no
    /// randomness.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
        self.validate(n)?;
        Ok(match self {
            Theta0Spec::Uniform => (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
            Theta0Spec::Cohesive { gamma } => sample_cohesive(n, *gamma, rng)?,
            Theta0Spec::Fixed { values } => values.clone(),
            Theta0Spec::FixedWithNoise { values, radius } => values
                .iter()
                .map(|v| {
                    if *radius > 0.0 {
                        v + rng.random_range(-radius..=*radius)
                    } else {
                        *v
                    }
                })
                .collect(),
            Theta0Spec::Twisted { winding } => twisted_state(n, *winding),
        })
    }
}

pub fn twisted_state(n: usize, winding: i64) -> Vec<f64> {
    (0..n)
        .map(|u| TAU * winding as f64 * u as f64 / n as f64)
        .collect()
}

/// Rejection sampler: anchor `θ_0` uniformly, put the rest uniformly
/// within `γ` of it, keep the draw if the spread is at most `γ`. The
/// proposal covers `Δ(γ)` with constant density, so accepted draws are
/// uniform on it.
fn sample_cohesive(n: usize, gamma: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut theta = vec![0.0; n];
    for _ in 0..COHESIVE_ATTEMPTS {
        let anchor = rng.random_range(0.0..TAU);
        theta[0] = anchor;
        for t in &mut theta[1..] {
            *t = anchor + rng.random_range(-gamma..=gamma);
        }
        if phase_spread(&theta) <= gamma {
            return Ok(theta);
        }
    }
    Err(Error::param(
        "theta0.gamma",
        format!("no draw in Δ({gamma}) for {n} phases after {COHESIVE_ATTEMPTS} attempts"),
    ))
}

/// First sample time after which the distance to the all-in-phase state
/// stays below `tol` for at least `dwell` seconds.
pub fn detect_synchronization(path: &SampledPath, tol: f64, dwell: f64) -> Option<f64> {
    let mut det = SyncDetector::new(tol, dwell);
    for (t, d) in path.times.iter().zip(&path.diagnostics) {
        det.push(*t, d.dist_sync);
    }
    det.time()
}

/// Streaming version of [`detect_synchronization`].
#[derive(Debug, Clone)]
pub struct SyncDetector {
    tol: f64,
    dwell: f64,
    candidate: Option<f64>,
    found: Option<f64>,
    last_distance: f64,
    stop_when_found: bool,
}

impl SyncDetector {
    pub fn new(tol: f64, dwell: f64) -> Self {
        SyncDetector {
            tol,
            dwell,
            candidate: None,
            found: None,
            last_distance: f64::NAN,
            stop_when_found: false,
        }
    }

    /// Asks the integrator to stop as soon as synchronization is certified.
    pub fn stopping(mut self) -> Self {
        self.stop_when_found = true;
        self
    }

    pub fn push(&mut self, t: f64, distance: f64) {
        self.last_distance = distance;
        if self.found.is_some() {
            return;
        }
        if distance < self.tol {
            let start = *self.candidate.get_or_insert(t);
            if t - start >= self.dwell {
                self.found = Some(start);
            }
        } else {
            self.candidate = None;
        }
    }

    pub fn time(&self) -> Option<f64> {
        self.found
    }

    /// Distance at the most recent sample.
    pub fn last_distance(&self) -> f64 {
        self.last_distance
    }
}

impl PathObserver for SyncDetector {
    fn observe(&mut self, t: f64, theta: &[f64], _: &Coupling) {
        self.push(t, distance_to_sync(theta));
    }

    fn done(&self) -> bool {
        self.stop_when_found && self.found.is_some()
    }
}

/// Records the first sample at which the path leaves the gauge-fixed
/// `radius`-ball around `center`, then stops the integration.
#[derive(Debug, Clone)]
pub struct EscapeDetector {
    center: Vec<f64>,
    radius: f64,
    escaped: Option<f64>,
    max_distance: f64,
}

impl EscapeDetector {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        EscapeDetector {
            center,
            radius,
            escaped: None,
            max_distance: 0.0,
        }
    }

    pub fn escape_time(&self) -> Option<f64> {
        self.escaped
    }

    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }
}

impl PathObserver for EscapeDetector {
    fn observe(&mut self, t: f64, theta: &[f64], _: &Coupling) {
        let d = gauge_distance(theta, &self.center);
        self.max_distance = self.max_distance.max(d);
        if d > self.radius && self.escaped.is_none() {
            self.escaped = Some(t);
        }
    }

    fn done(&self) -> bool {
        self.escaped.is_some()
    }
}
