//! Integration of the phase equations along a frozen jump trajectory.
//!
//! Between consecutive jumps the coefficient matrix is constant, so each
//! constant piece is integrated as an autonomous ODE and no step ever
//! crosses a jump time. The phase state itself is carried through jumps
//! unchanged; only the right-hand side switches.
//!
//! The state is kept as lifted real coordinates (no reduction modulo 2π),
//! which keeps `Σ θ_i` meaningful as a conserved quantity.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Coupling, ModelParams};
use crate::error::{Error, Result};
use crate::graph::SkeletonGraph;
use crate::jump::{simulate_walkers, EdgeConfiguration, JumpTrajectory, RngSeed, WalkerState};
use crate::phase::{distance_to_sync, gauge_distance, phase_spread};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with absolute error control.
    Dopri5 { abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub max_step: f64,
    pub sample_interval: f64,
    pub method: Method,
}

impl IntegratorConfig {
    pub fn new(max_step: f64, sample_interval: f64, method: Method) -> Result<Self> {
        let cfg = IntegratorConfig {
            max_step,
            sample_interval,
            method,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// RK4 with `max_step = min(1e-2, ε/10)`.
    pub fn for_epsilon(epsilon: f64, sample_interval: f64) -> Result<Self> {
        Self::new((epsilon / 10.0).min(1e-2), sample_interval, Method::Rk4)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_step.is_finite() && self.max_step > 0.0) {
            return Err(Error::param(
                "max_step",
                format!("must be positive, got {}", self.max_step),
            ));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval >= self.max_step) {
            return Err(Error::param(
                "sample_interval",
                format!(
                    "must be finite and >= max_step ({}), got {}",
                    self.max_step, self.sample_interval
                ),
            ));
        }
        if let Method::Dopri5 { abs_tol } = self.method {
            if !(abs_tol.is_finite() && abs_tol > 0.0) {
                return Err(Error::param(
                    "abs_tol",
                    format!("must be positive, got {abs_tol}"),
                ));
            }
        }
        Ok(())
    }

    /// Same configuration with the step cap halved (for self-convergence
    /// checks; the sample grid is unchanged).
    pub fn halved(&self) -> Self {
        IntegratorConfig {
            max_step: self.max_step / 2.0,
            ..*self
        }
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            max_step: 1e-2,
            sample_interval: 0.1,
            method: Method::Rk4,
        }
    }
}

/// Per-sample diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub spread: f64,
    /// Energy with respect to the graph state in force at the sample time.
    pub energy: f64,
    pub sum: f64,
    pub dist_sync: f64,
}

/// Receives the state at every sample time.
pub trait PathObserver {
    fn observe(&mut self, t: f64, theta: &[f64], coupling: &Coupling);

    /// Once this returns true the integration stops at the next sample.
    fn done(&self) -> bool {
        false
    }
}

/// Time-stamped phase path. Sample times include 0, the horizon and every
/// jump time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledPath {
    pub times: Vec<f64>,
    /// Lifted phases (not reduced modulo 2π).
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Vec<Diagnostics>,
}

impl PathObserver for SampledPath {
    fn observe(&mut self, t: f64, theta: &[f64], coupling: &Coupling) {
        self.times.push(t);
        self.states.push(theta.to_vec());
        self.diagnostics.push(Diagnostics {
            spread: phase_spread(theta),
            energy: coupling.energy(theta),
            sum: theta.iter().sum(),
            dist_sync: distance_to_sync(theta),
        });
    }
}

impl SampledPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }

    pub fn final_diagnostics(&self) -> Option<&Diagnostics> {
        self.diagnostics.last()
    }

    /// True when the spread never increases between consecutive samples by
    /// more than `slack`.
    pub fn spread_non_increasing(&self, slack: f64) -> bool {
        self.diagnostics
            .windows(2)
            .all(|w| w[1].spread <= w[0].spread + slack)
    }

    /// Largest `|Σθ(t) − Σθ(0)| / max(t, 1)` over the samples.
    pub fn max_sum_drift_rate(&self) -> f64 {
        let Some(first) = self.diagnostics.first() else {
            return 0.0;
        };
        self.times
            .iter()
            .zip(&self.diagnostics)
            .map(|(t, d)| (d.sum - first.sum).abs() / t.max(1.0))
            .fold(0.0, f64::max)
    }

    /// Writes `t,theta_0..theta_{n-1},spread,energy,sum,dist_sync` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("theta_{i}")));
        header.extend(["spread", "energy", "sum", "dist_sync"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for ((t, theta), d) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            write!(w, "{t}")?;
            for v in theta {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{},{},{},{}", d.spread, d.energy, d.sum, d.dist_sync)?;
        }
        Ok(())
    }
}

/// A piecewise-constant coefficient schedule on `[0, horizon]`.
pub trait CouplingSchedule {
    fn dimension(&self) -> usize;
    fn horizon(&self) -> f64;
    /// Calls `f(start, end, coupling)` for consecutive pieces covering the
    /// horizon.
    fn for_each_piece(&self, f: &mut dyn FnMut(f64, f64, &Coupling) -> Result<()>) -> Result<()>;
}

pub struct WalkerSchedule<'a> {
    pub graph: &'a SkeletonGraph,
    pub trajectory: &'a JumpTrajectory<WalkerState>,
    pub coupling: f64,
}

impl CouplingSchedule for WalkerSchedule<'_> {
    fn dimension(&self) -> usize {
        self.trajectory.initial_state().len()
    }
    fn horizon(&self) -> f64 {
        self.trajectory.horizon()
    }
    fn for_each_piece(&self, f: &mut dyn FnMut(f64, f64, &Coupling) -> Result<()>) -> Result<()> {
        let n = self.dimension();
        let mut c = Coupling::zeros(n, self.coupling / n as f64);
        let mut seg = self.trajectory.segments();
        while let Some((s, e, x)) = seg.next() {
            c.set_walkers(self.graph, x.positions());
            f(s, e, &c)?;
        }
        Ok(())
    }
}

pub struct EdgeSchedule<'a> {
    pub graph: &'a SkeletonGraph,
    pub trajectory: &'a JumpTrajectory<EdgeConfiguration>,
    pub coupling: f64,
}

impl CouplingSchedule for EdgeSchedule<'_> {
    fn dimension(&self) -> usize {
        self.graph.vertex_count()
    }
    fn horizon(&self) -> f64 {
        self.trajectory.horizon()
    }
    fn for_each_piece(&self, f: &mut dyn FnMut(f64, f64, &Coupling) -> Result<()>) -> Result<()> {
        let n = self.dimension();
        let edges = self.graph.edge_set();
        let mut c = Coupling::zeros(n, self.coupling / n as f64);
        let mut seg = self.trajectory.segments();
        while let Some((s, e, cfg)) = seg.next() {
            c.set_edges(self.graph, &edges, cfg);
            f(s, e, &c)?;
        }
        Ok(())
    }
}

/// Constant coefficients, optionally split at extra breakpoints so the
/// sample grid matches a companion jump-driven path.
pub struct ConstantSchedule<'a> {
    pub coupling: Coupling,
    pub horizon: f64,
    pub breakpoints: &'a [f64],
}

impl CouplingSchedule for ConstantSchedule<'_> {
    fn dimension(&self) -> usize {
        self.coupling.dimension()
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn for_each_piece(&self, f: &mut dyn FnMut(f64, f64, &Coupling) -> Result<()>) -> Result<()> {
        let mut start = 0.0;
        for &b in self.breakpoints {
            if b > start && b < self.horizon {
                f(start, b, &self.coupling)?;
                start = b;
            }
        }
        f(start, self.horizon, &self.coupling)
    }
}

struct Stepper {
    n: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    err: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            n,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            err: vec![0.0; n],
        }
    }

    fn rk4(&mut self, c: &Coupling, omega: &[f64], y: &mut [f64], h: f64) {
        let n = self.n;
        let [k1, k2, k3, k4, ..] = &mut self.k;
        c.rhs_into(y, omega, k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        c.rhs_into(&self.tmp, omega, k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        c.rhs_into(&self.tmp, omega, k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * k3[i];
        }
        c.rhs_into(&self.tmp, omega, k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// One Dormand–Prince trial step from `y` into `out`; returns the
    /// max-norm of the embedded error estimate.
    #[allow(clippy::needless_range_loop)]
    fn dopri5(&mut self, c: &Coupling, omega: &[f64], y: &[f64], h: f64, out: &mut [f64]) -> f64 {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let n = self.n;
        c.rhs_into(y, omega, &mut self.k[0]);
        for s in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s].iter().enumerate().take(s + 1) {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            let (_, rest) = self.k.split_at_mut(s + 1);
            c.rhs_into(&self.tmp, omega, &mut rest[0]);
        }
        // Stage 7 was evaluated at the 5th-order solution (FSAL).
        out.copy_from_slice(&self.tmp);
        let mut err = 0.0_f64;
        for i in 0..n {
            let mut e = 0.0;
            for (j, ej) in E.iter().enumerate() {
                e += ej * self.k[j][i];
            }
            self.err[i] = h * e;
            err = err.max(self.err[i].abs());
        }
        err
    }
}

/// Drives `observer` along the schedule: samples at 0, at multiples of the
/// sample interval, at every piece boundary and at the horizon.
pub fn integrate_schedule(
    schedule: &dyn CouplingSchedule,
    theta0: &[f64],
    omega: &[f64],
    cfg: &IntegratorConfig,
    observer: &mut dyn PathObserver,
) -> Result<()> {
    cfg.validate()?;
    let n = schedule.dimension();
    for len in [theta0.len(), omega.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let horizon = schedule.horizon();
    let dt = cfg.sample_interval;
    let mut y = theta0.to_vec();
    let mut trial = vec![0.0; n];
    let mut stepper = Stepper::new(n);
    let mut next_grid: u64 = 1;
    let mut h_adapt = cfg.max_step;
    let mut last: Option<(f64, Coupling)> = None;

    schedule.for_each_piece(&mut |start, end, c| {
        if observer.done() {
            return Ok(());
        }
        observer.observe(start, &y, c);
        let mut t = start;
        loop {
            // Next stop inside this piece: a grid time strictly before `end`,
            // else `end` itself.
            while (next_grid as f64) * dt <= t {
                next_grid += 1;
            }
            let grid = next_grid as f64 * dt;
            let (target, is_grid) = if grid < end {
                (grid, true)
            } else {
                (end, false)
            };
            if target > t {
                advance(
                    &mut stepper,
                    c,
                    omega,
                    &mut y,
                    &mut trial,
                    t,
                    target,
                    cfg,
                    &mut h_adapt,
                )?;
            }
            t = target;
            if !is_grid {
                break;
            }
            observer.observe(t, &y, c);
            if observer.done() {
                return Ok(());
            }
        }
        last = (end >= horizon && end > start).then(|| (end, c.clone()));
        Ok(())
    })?;
    if let Some((end, c)) = last {
        if !observer.done() {
            debug_assert_eq!(end, horizon);
            observer.observe(end, &y, &c);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn advance(
    stepper: &mut Stepper,
    c: &Coupling,
    omega: &[f64],
    y: &mut [f64],
    trial: &mut [f64],
    from: f64,
    to: f64,
    cfg: &IntegratorConfig,
    h_adapt: &mut f64,
) -> Result<()> {
    match cfg.method {
        Method::Rk4 => {
            let steps = ((to - from) / cfg.max_step).ceil().max(1.0);
            let h = (to - from) / steps;
            for _ in 0..steps as u64 {
                stepper.rk4(c, omega, y, h);
            }
        }
        Method::Dopri5 { abs_tol } => {
            let mut t = from;
            let mut h = h_adapt.min(cfg.max_step);
            while t < to {
                let last = h >= to - t;
                let step = if last { to - t } else { h };
                if step < 1e-14 * t.abs().max(1.0) && !last {
                    return Err(Error::StepSizeUnderflow(t));
                }
                let err = stepper.dopri5(c, omega, y, step, trial) / abs_tol;
                if err <= 1.0 {
                    y.copy_from_slice(trial);
                    t = if last { to } else { t + step };
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err <= 1.0 && last {
                    // Keep the learned size instead of the truncated one.
                    h = h.max(step * factor).min(cfg.max_step);
                } else {
                    h = (step * factor).min(cfg.max_step);
                }
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow(t));
                }
            }
            *h_adapt = h;
        }
    }
    Ok(())
}

fn check_krw(traj: &JumpTrajectory<WalkerState>, theta0: &[f64], p: &ModelParams) -> Result<()> {
    let n = traj.initial_state().len();
    for len in [theta0.len(), p.population()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    Ok(())
}

pub fn integrate_krw_with(
    g: &SkeletonGraph,
    traj: &JumpTrajectory<WalkerState>,
    theta0: &[f64],
    p: &ModelParams,
    cfg: &IntegratorConfig,
    observer: &mut dyn PathObserver,
) -> Result<()> {
    check_krw(traj, theta0, p)?;
    traj.initial_state().validate(g)?;
    let schedule = WalkerSchedule {
        graph: g,
        trajectory: traj,
        coupling: p.coupling,
    };
    integrate_schedule(&schedule, theta0, &p.frequencies, cfg, observer)
}

/// Phases of oscillators riding the walkers of `traj`.
pub fn integrate_krw(
    g: &SkeletonGraph,
    traj: &JumpTrajectory<WalkerState>,
    theta0: &[f64],
    p: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<SampledPath> {
    let mut path = SampledPath::default();
    integrate_krw_with(g, traj, theta0, p, cfg, &mut path)?;
    Ok(path)
}

pub fn integrate_drc_with(
    g: &SkeletonGraph,
    traj: &JumpTrajectory<EdgeConfiguration>,
    theta0: &[f64],
    p: &ModelParams,
    cfg: &IntegratorConfig,
    observer: &mut dyn PathObserver,
) -> Result<()> {
    let m = g.edge_set().len();
    if traj.initial_state().len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: traj.initial_state().len(),
        });
    }
    let n = g.vertex_count();
    if p.population() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.population(),
        });
    }
    let schedule = EdgeSchedule {
        graph: g,
        trajectory: traj,
        coupling: p.coupling,
    };
    integrate_schedule(&schedule, theta0, &p.frequencies, cfg, observer)
}

/// Phases of one oscillator per vertex on the switching-edge graph.
pub fn integrate_drc(
    g: &SkeletonGraph,
    traj: &JumpTrajectory<EdgeConfiguration>,
    theta0: &[f64],
    p: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<SampledPath> {
    let mut path = SampledPath::default();
    integrate_drc_with(g, traj, theta0, p, cfg, &mut path)?;
    Ok(path)
}

/// Averaged system, with extra sample points at `breakpoints` (pass the
/// jump times of a companion path to get an identical grid).
pub fn integrate_averaged_aligned(
    a_bar: f64,
    theta0: &[f64],
    p: &ModelParams,
    cfg: &IntegratorConfig,
    horizon: f64,
    breakpoints: &[f64],
) -> Result<SampledPath> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::param(
            "horizon",
            format!("must be finite and >= 0, got {horizon}"),
        ));
    }
    if p.population() != theta0.len() {
        return Err(Error::DimensionMismatch {
            expected: theta0.len(),
            got: p.population(),
        });
    }
    let schedule = ConstantSchedule {
        coupling: Coupling::averaged(theta0.len(), a_bar, p.coupling),
        horizon,
        breakpoints,
    };
    let mut path = SampledPath::default();
    integrate_schedule(&schedule, theta0, &p.frequencies, cfg, &mut path)?;
    Ok(path)
}

pub fn integrate_averaged(
    a_bar: f64,
    theta0: &[f64],
    p: &ModelParams,
    cfg: &IntegratorConfig,
    horizon: f64,
) -> Result<SampledPath> {
    integrate_averaged_aligned(a_bar, theta0, p, cfg, horizon, &[])
}

/// `sup_k d(a_k, b_k)` with `d` the gauge-fixed ℓ∞ geodesic distance
/// ([`gauge_distance`]). The two paths must share the same sample times.
pub fn sup_deviation(a: &SampledPath, b: &SampledPath) -> Result<f64> {
    if a.times != b.times {
        return Err(Error::GridMismatch);
    }
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| gauge_distance(x, y))
        .fold(0.0, f64::max))
}

/// Checks the time-change identity `θ^ε(εt) = θ̃¹(t)`.
///
/// One rate-1 walker trajectory `X¹` is sampled on `[0, horizon]`. Path (a)
/// integrates the ε-model along `X^ε(s) = X¹(s/ε)` on `[0, ε·horizon]` with
/// the step and sample sizes of `cfg` scaled by ε; path (b) integrates along
/// `X¹` with coupling and frequencies scaled by ε. Returns the largest
/// coordinate difference between matching samples.
#[allow(clippy::too_many_arguments)]
pub fn time_change_check(
    g: &SkeletonGraph,
    x0: &WalkerState,
    p: &ModelParams,
    epsilon: f64,
    theta0: &[f64],
    horizon: f64,
    seed: RngSeed,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let base = simulate_walkers(g, 1.0, x0, horizon, seed)?;
    let fast = base.rescaled(epsilon)?;
    let cfg_fast = IntegratorConfig {
        max_step: cfg.max_step * epsilon,
        sample_interval: cfg.sample_interval * epsilon,
        method: cfg.method,
    };
    let path_a = integrate_krw(g, &fast, theta0, p, &cfg_fast)?;
    let slow = ModelParams::new(
        p.coupling * epsilon,
        p.frequencies.iter().map(|w| w * epsilon).collect(),
    )?;
    let path_b = integrate_krw(g, &base, theta0, &slow, cfg)?;
    if path_a.len() != path_b.len() {
        return Err(Error::GridMismatch);
    }
    let mut dev = 0.0_f64;
    for ((ta, a), (tb, b)) in path_a
        .times
        .iter()
        .zip(&path_a.states)
        .zip(path_b.times.iter().zip(&path_b.states))
    {
        if (ta - epsilon * tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::GridMismatch);
        }
        for (x, y) in a.iter().zip(b) {
            dev = dev.max((x - y).abs());
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::{simulate_edges, JumpEvent};
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn stacked_static(walkers: usize, horizon: f64) -> JumpTrajectory<WalkerState> {
        JumpTrajectory::constant(WalkerState::stacked(walkers, 0), horizon).unwrap()
    }

    /// Reference solution of `φ' = −r sin φ`: `tan(φ/2) = tan(φ₀/2) e^{−r t}`.
    fn two_oscillator_phase(phi0: f64, rate: f64, t: f64) -> f64 {
        2.0 * ((phi0 / 2.0).tan() * (-rate * t).exp()).atan()
    }

    #[test]
    fn constant_initial_state_is_fixed() {
        let g = SkeletonGraph::path(3)
            .unwrap()
            .with_self_loops(1.0)
            .unwrap();
        let traj = simulate_walkers(
            &g,
            0.5,
            &WalkerState::new(vec![0, 1, 2]),
            10.0,
            RngSeed::new(1, 0),
        )
        .unwrap();
        let p = ModelParams::homogeneous(1.0, 3).unwrap();
        let path = integrate_krw(&g, &traj, &[1.1; 3], &p, &IntegratorConfig::default()).unwrap();
        assert!(path.states.iter().all(|s| s.iter().all(|&v| v == 1.1)));
    }

    #[test]
    fn samples_include_events_and_endpoints() {
        let g = SkeletonGraph::path(3)
            .unwrap()
            .with_self_loops(1.0)
            .unwrap();
        let traj = simulate_walkers(
            &g,
            0.5,
            &WalkerState::new(vec![0, 1]),
            3.3,
            RngSeed::new(1, 0),
        )
        .unwrap();
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let path = integrate_krw(&g, &traj, &[0.0, 1.0], &p, &IntegratorConfig::default()).unwrap();
        assert_eq!(path.times[0], 0.0);
        assert_eq!(*path.times.last().unwrap(), 3.3);
        for t in traj.event_times() {
            assert!(path.times.contains(&t));
        }
        assert!(path.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_oscillators_match_closed_form() {
        let g = SkeletonGraph::from_dense(1, vec![1.0]).unwrap();
        let k = 1.5;
        let p = ModelParams::homogeneous(k, 2).unwrap();
        let traj = stacked_static(2, 10.0);
        let path = integrate_krw(&g, &traj, &[0.0, 2.0], &p, &IntegratorConfig::default()).unwrap();
        // φ = θ₂ − θ₁ solves φ' = −2(K/2) sin φ = −K sin φ.
        for (t, s) in path.times.iter().zip(&path.states) {
            let expected = two_oscillator_phase(2.0, k, *t);
            assert!((s[1] - s[0] - expected).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn averaged_two_oscillators_decay_monotonically() {
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let a_bar = 0.5;
        let path =
            integrate_averaged(a_bar, &[0.0, 3.0], &p, &IntegratorConfig::default(), 40.0).unwrap();
        let phi: Vec<f64> = path.states.iter().map(|s| s[1] - s[0]).collect();
        assert!(phi.windows(2).all(|w| w[1] <= w[0]));
        for (t, f) in path.times.iter().zip(&phi) {
            assert!((f - two_oscillator_phase(3.0, a_bar, *t)).abs() < 1e-6);
        }
        assert!(phi.last().unwrap().abs() < 1e-3);
    }

    #[test]
    fn averaged_constant_is_fixed() {
        let p = ModelParams::homogeneous(1.0, 4).unwrap();
        let path =
            integrate_averaged(1.0, &[0.3; 4], &p, &IntegratorConfig::default(), 5.0).unwrap();
        assert!(path.states.iter().all(|s| s == &vec![0.3; 4]));
    }

    #[test]
    fn averaged_enters_smaller_cohesive_set() {
        let p = ModelParams::homogeneous(1.0, 3).unwrap();
        let theta0 = [0.0, 0.5, 1.0];
        let cfg = IntegratorConfig::default();
        let coarse = integrate_averaged(1.0, &theta0, &p, &cfg, 30.0).unwrap();
        let fine = integrate_averaged(1.0, &theta0, &p, &cfg.halved(), 30.0).unwrap();
        let entry = |path: &SampledPath| {
            path.diagnostics
                .iter()
                .position(|d| d.spread <= PI / 6.0)
                .unwrap()
        };
        let k = entry(&coarse);
        assert_eq!(k, entry(&fine));
        assert!(coarse.diagnostics[k..].iter().all(|d| d.spread <= PI / 6.0));
        assert!(sup_deviation(&coarse, &fine).unwrap() < 1e-9);
    }

    #[test]
    fn drc_fixed_points_held() {
        let g = SkeletonGraph::wsg(10, 1).unwrap();
        let m = g.edge_set().len();
        let p = ModelParams::homogeneous(1.0, 10).unwrap();
        let twisted: Vec<f64> = (0..10).map(|u| TAU * u as f64 / 10.0).collect();
        let frozen = JumpTrajectory::constant(EdgeConfiguration::all_on(m), 20.0).unwrap();
        let path = integrate_drc(&g, &frozen, &twisted, &p, &IntegratorConfig::default()).unwrap();
        for s in &path.states {
            for (a, b) in s.iter().zip(&twisted) {
                assert!((a - b).abs() < 1e-12);
            }
        }

        let off = JumpTrajectory::constant(EdgeConfiguration::all_off(m), 20.0).unwrap();
        let theta0: Vec<f64> = (0..10).map(|u| u as f64 * 0.37).collect();
        let path = integrate_drc(&g, &off, &theta0, &p, &IntegratorConfig::default()).unwrap();
        assert!(path.states.iter().all(|s| *s == theta0));

        let single = SkeletonGraph::path(2).unwrap();
        // Anti-phase is unstable, so round-off in sin(π) grows like e^t.
        let traj = JumpTrajectory::constant(EdgeConfiguration::all_on(1), 5.0).unwrap();
        let p2 = ModelParams::homogeneous(1.0, 2).unwrap();
        let path = integrate_drc(
            &single,
            &traj,
            &[0.0, PI],
            &p2,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(path
            .states
            .iter()
            .all(|s| (s[1] - PI).abs() < 1e-12 && s[0].abs() < 1e-12));
    }

    #[test]
    fn sup_deviation_basics() {
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let cfg = IntegratorConfig::default();
        let a = integrate_averaged(1.0, &[0.0, 0.0], &p, &cfg, 2.0).unwrap();
        let b = integrate_averaged(1.0, &[PI / 12.0, PI / 12.0], &p, &cfg, 2.0).unwrap();
        assert_eq!(sup_deviation(&a, &a).unwrap(), 0.0);
        assert!(sup_deviation(&a, &b).unwrap() < 1e-15);
        let c = integrate_averaged(1.0, &[0.0, 0.0], &p, &cfg, 3.0).unwrap();
        assert!(matches!(sup_deviation(&a, &c), Err(Error::GridMismatch)));
    }

    #[test]
    fn step_halving_self_convergence() {
        let g = SkeletonGraph::path(3)
            .unwrap()
            .with_self_loops(1.0)
            .unwrap();
        let traj = simulate_walkers(
            &g,
            0.2,
            &WalkerState::new(vec![0, 1, 2]),
            20.0,
            RngSeed::new(5, 0),
        )
        .unwrap();
        let p = ModelParams::homogeneous(2.0, 3).unwrap();
        let cfg = IntegratorConfig::for_epsilon(0.2, 0.1).unwrap();
        let theta0 = [0.0, 2.0, 4.0];
        let a = integrate_krw(&g, &traj, &theta0, &p, &cfg).unwrap();
        let b = integrate_krw(&g, &traj, &theta0, &p, &cfg.halved()).unwrap();
        assert!(sup_deviation(&a, &b).unwrap() < 1e-6);
    }

    #[test]
    fn dopri_matches_rk4() {
        let g = SkeletonGraph::path(3).unwrap();
        let e0 = EdgeConfiguration::all_on(2);
        let traj = simulate_edges(&g, 1.0, 1.0, &e0, 30.0, RngSeed::new(8, 1)).unwrap();
        let p = ModelParams::new(2.0, vec![0.1, -0.2, 0.05]).unwrap();
        let theta0 = [0.0, 1.0, 2.5];
        let rk = integrate_drc(&g, &traj, &theta0, &p, &IntegratorConfig::default()).unwrap();
        let cfg = IntegratorConfig::new(0.1, 0.1, Method::Dopri5 { abs_tol: 1e-11 }).unwrap();
        let dp = integrate_drc(&g, &traj, &theta0, &p, &cfg).unwrap();
        assert_eq!(rk.times, dp.times);
        assert!(sup_deviation(&rk, &dp).unwrap() < 1e-7);
    }

    #[test]
    fn time_change_epsilon_one_is_exact() {
        let g = SkeletonGraph::from_dense(3, vec![1.0; 9]).unwrap();
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let dev = time_change_check(
            &g,
            &WalkerState::new(vec![0, 1]),
            &p,
            1.0,
            &[0.0, 2.0],
            5.0,
            RngSeed::new(1, 0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn jump_switches_rhs_but_not_state() {
        // Walkers separate at t = 1 on a path; afterwards nothing moves.
        let g = SkeletonGraph::path(3)
            .unwrap()
            .with_self_loops(1.0)
            .unwrap();
        let traj = JumpTrajectory::new(
            WalkerState::new(vec![0, 0]),
            vec![JumpEvent {
                time: 1.0,
                index: 1,
                value: 2,
            }],
            3.0,
        )
        .unwrap();
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let path = integrate_krw(
            &g,
            &traj,
            &[0.0, FRAC_PI_2],
            &p,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let k = path.times.iter().position(|&t| t == 1.0).unwrap();
        let at_jump = path.states[k].clone();
        assert!(path.states[k..].iter().all(|s| *s == at_jump));
        let phi = at_jump[1] - at_jump[0];
        assert!((phi - two_oscillator_phase(FRAC_PI_2, 1.0, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn zero_horizon_has_one_sample() {
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let path =
            integrate_averaged(1.0, &[0.0, 1.0], &p, &IntegratorConfig::default(), 0.0).unwrap();
        assert_eq!(path.times, vec![0.0]);

        let g = SkeletonGraph::path(2)
            .unwrap()
            .with_self_loops(1.0)
            .unwrap();
        let traj = JumpTrajectory::new(
            WalkerState::new(vec![0, 0]),
            vec![JumpEvent {
                time: 2.0,
                index: 0,
                value: 1,
            }],
            2.0,
        )
        .unwrap();
        let path = integrate_krw(&g, &traj, &[0.0, 1.0], &p, &IntegratorConfig::default()).unwrap();
        assert_eq!(*path.times.last().unwrap(), 2.0);
        assert!(path.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::new(0.0, 1.0, Method::Rk4).is_err());
        assert!(IntegratorConfig::new(0.1, 0.01, Method::Rk4).is_err());
        assert!(IntegratorConfig::new(0.1, 0.1, Method::Dopri5 { abs_tol: 0.0 }).is_err());
        let c = IntegratorConfig::for_epsilon(1e-3, 0.1).unwrap();
        assert!((c.max_step - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn csv_header() {
        let p = ModelParams::homogeneous(1.0, 2).unwrap();
        let path =
            integrate_averaged(1.0, &[0.0, 1.0], &p, &IntegratorConfig::default(), 0.2).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,theta_0,theta_1,spread,energy,sum,dist_sync"
        );
        assert_eq!(lines.count(), path.len());
    }
}
