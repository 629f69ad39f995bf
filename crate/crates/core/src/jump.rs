//! Exact simulation of the two graph-valued Markov chains.
//!
//! * Random walkers: `N` independent walkers, each holding its vertex for an
//!   `Exp(ε⁻¹)` time and then jumping to `v` with probability
//!   `π(u, v) / π(u)` (self-loops included).
//! * Switching edges: every skeleton edge is an independent two-state chain
//!   that switches off at rate `ε⁻¹` and on at rate `κ`.
//!
//! Both use one exponential clock per component, merged through a binary
//! heap. The generator is ChaCha8 seeded from a 64-bit seed with a separate
//! stream id per use (see [`RngSeed`]), so any trial can be reproduced in
//! isolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SkeletonGraph;

/// Seed plus stream id for a ChaCha8 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Stream ids used by the experiment harness: trial `t` owns streams
/// `8t .. 8t + 8`, one per [`StreamPurpose`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamPurpose {
    Walkers = 0,
    Edges = 1,
    InitialPhases = 2,
    InitialWalkers = 3,
}

pub fn trial_stream(trial: u64, purpose: StreamPurpose) -> u64 {
    trial * 8 + purpose as u64
}

/// A state that changes one coordinate per jump.
pub trait JumpState: Clone + PartialEq + std::fmt::Debug {
    const MODEL: &'static str;
    fn dimension(&self) -> usize;
    fn value(&self, index: usize) -> usize;
    fn apply(&mut self, index: usize, value: usize);
    fn accepts(&self, value: usize) -> bool;
    fn values(&self) -> Vec<usize> {
        (0..self.dimension()).map(|i| self.value(i)).collect()
    }
    fn from_values(values: Vec<usize>) -> Result<Self>;
}

/// Walker positions `(x_1, …, x_N) ∈ V^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkerState(Vec<usize>);

impl WalkerState {
    pub fn new(positions: Vec<usize>) -> Self {
        WalkerState(positions)
    }

    /// All walkers on vertex `u`.
    pub fn stacked(walkers: usize, u: usize) -> Self {
        WalkerState(vec![u; walkers])
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, g: &SkeletonGraph) -> Result<()> {
        let count = g.vertex_count();
        match self.0.iter().find(|&&u| u >= count) {
            Some(&vertex) => Err(Error::VertexOutOfRange { vertex, count }),
            None => Ok(()),
        }
    }
}

impl JumpState for WalkerState {
    const MODEL: &'static str = "krw";

    fn dimension(&self) -> usize {
        self.0.len()
    }
    fn value(&self, index: usize) -> usize {
        self.0[index]
    }
    fn apply(&mut self, index: usize, value: usize) {
        self.0[index] = value;
    }
    fn accepts(&self, _value: usize) -> bool {
        true
    }
    fn from_values(values: Vec<usize>) -> Result<Self> {
        Ok(WalkerState(values))
    }
}

/// On/off bits over a skeleton's [`EdgeSet`](crate::graph::EdgeSet).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeConfiguration(Vec<bool>);

impl EdgeConfiguration {
    pub fn new(bits: Vec<bool>) -> Self {
        EdgeConfiguration(bits)
    }

    pub fn all_on(len: usize) -> Self {
        EdgeConfiguration(vec![true; len])
    }

    pub fn all_off(len: usize) -> Self {
        EdgeConfiguration(vec![false; len])
    }

    /// Bit `e` of `mask` becomes edge `e`. `len` must be at most 64.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        EdgeConfiguration((0..len).map(|e| mask >> e & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn is_on(&self, e: usize) -> bool {
        self.0[e]
    }

    pub fn set(&mut self, e: usize, on: bool) {
        self.0[e] = on;
    }

    pub fn count_on(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

impl JumpState for EdgeConfiguration {
    const MODEL: &'static str = "drc";

    fn dimension(&self) -> usize {
        self.0.len()
    }
    fn value(&self, index: usize) -> usize {
        self.0[index] as usize
    }
    fn apply(&mut self, index: usize, value: usize) {
        self.0[index] = value == 1;
    }
    fn accepts(&self, value: usize) -> bool {
        value <= 1
    }
    fn from_values(values: Vec<usize>) -> Result<Self> {
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::param(
                    "initial",
                    format!("edge bit {i} must be 0 or 1, got {v}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(EdgeConfiguration)
    }
}

/// One coordinate change: at `time`, coordinate `index` takes `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub index: usize,
    pub value: usize,
}

/// Parameters recorded alongside a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMeta {
    pub epsilon: f64,
    pub kappa: Option<f64>,
    pub seed: RngSeed,
}

/// Piecewise-constant, right-continuous sample path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectory<S> {
    initial: S,
    events: Vec<JumpEvent>,
    horizon: f64,
    pub meta: Option<TrajectoryMeta>,
}

impl<S: JumpState> JumpTrajectory<S> {
    /// Checks that event times are strictly increasing inside `(0, horizon]`
    /// and that each event changes exactly one coordinate.
    pub fn new(initial: S, events: Vec<JumpEvent>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::param(
                "horizon",
                format!("must be finite and >= 0, got {horizon}"),
            ));
        }
        let mut state = initial.clone();
        let mut last = 0.0;
        for (k, ev) in events.iter().enumerate() {
            if !(ev.time > last && ev.time <= horizon) {
                return Err(Error::param(
                    "events",
                    format!(
                        "event {k} at time {} breaks strict ordering in (0, {horizon}]",
                        ev.time
                    ),
                ));
            }
            if ev.index >= state.dimension() || !state.accepts(ev.value) {
                return Err(Error::param(
                    "events",
                    format!("event {k} has invalid index/value"),
                ));
            }
            if state.value(ev.index) == ev.value {
                return Err(Error::param(
                    "events",
                    format!("event {k} does not change the state"),
                ));
            }
            state.apply(ev.index, ev.value);
            last = ev.time;
        }
        Ok(JumpTrajectory {
            initial,
            events,
            horizon,
            meta: None,
        })
    }

    /// A trajectory with no jumps.
    pub fn constant(initial: S, horizon: f64) -> Result<Self> {
        Self::new(initial, Vec::new(), horizon)
    }

    pub fn initial_state(&self) -> &S {
        &self.initial
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.time)
    }

    /// State after the last event with time `≤ t`.
    pub fn state_at(&self, t: f64) -> Result<S> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let upto = self.events.partition_point(|e| e.time <= t);
        let mut state = self.initial.clone();
        for ev in &self.events[..upto] {
            state.apply(ev.index, ev.value);
        }
        Ok(state)
    }

    pub fn final_state(&self) -> S {
        let mut state = self.initial.clone();
        for ev in &self.events {
            state.apply(ev.index, ev.value);
        }
        state
    }

    pub fn segments(&self) -> Segments<'_, S> {
        Segments {
            traj: self,
            state: self.initial.clone(),
            next: 0,
            done: false,
        }
    }

    /// Lebesgue measure of `{t ∈ [0, horizon] : predicate(state_at(t))}`.
    pub fn occupation_time(&self, predicate: impl FnMut(&S) -> bool) -> f64 {
        OccupationClock::new(self, predicate).total()
    }

    /// Same trajectory read on a clock running `factor` times slower:
    /// event at `t` moves to `factor · t`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let events = self
            .events
            .iter()
            .map(|e| JumpEvent {
                time: e.time * factor,
                ..*e
            })
            .collect();
        Self::new(self.initial.clone(), events, self.horizon * factor)
    }
}

/// Lending cursor over the constant pieces `[start, end)` of a trajectory.
pub struct Segments<'a, S> {
    traj: &'a JumpTrajectory<S>,
    state: S,
    next: usize,
    done: bool,
}

impl<S: JumpState> Segments<'_, S> {
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<(f64, f64, &S)> {
        if self.done {
            return None;
        }
        let events = &self.traj.events;
        let start = if self.next == 0 {
            0.0
        } else {
            let ev = events[self.next - 1];
            self.state.apply(ev.index, ev.value);
            ev.time
        };
        let end = match events.get(self.next) {
            Some(ev) => ev.time,
            None => {
                self.done = true;
                self.traj.horizon
            }
        };
        self.next += 1;
        Some((start, end, &self.state))
    }
}

/// Cumulative occupation time `L(t)` of a predicate along a trajectory,
/// evaluated exactly from the piecewise-constant structure.
#[derive(Debug, Clone)]
pub struct OccupationClock {
    starts: Vec<f64>,
    cumulative: Vec<f64>,
    flags: Vec<bool>,
    horizon: f64,
}

impl OccupationClock {
    pub fn new<S: JumpState>(
        traj: &JumpTrajectory<S>,
        mut predicate: impl FnMut(&S) -> bool,
    ) -> Self {
        let mut starts = Vec::with_capacity(traj.events.len() + 1);
        let mut cumulative = Vec::with_capacity(traj.events.len() + 1);
        let mut flags = Vec::with_capacity(traj.events.len() + 1);
        let mut acc = 0.0;
        let mut seg = traj.segments();
        while let Some((start, end, state)) = seg.next() {
            let flag = predicate(state);
            starts.push(start);
            cumulative.push(acc);
            flags.push(flag);
            if flag {
                acc += end - start;
            }
        }
        OccupationClock {
            starts,
            cumulative,
            flags,
            horizon: traj.horizon,
        }
    }

    /// `L(t) = ∫_0^t 1{predicate(X(s))} ds`, with `t` clamped to the horizon.
    pub fn at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.horizon);
        let k = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        let mut l = self.cumulative[k];
        if self.flags[k] {
            l += t - self.starts[k];
        }
        l
    }

    pub fn total(&self) -> f64 {
        self.at(self.horizon)
    }
}

#[derive(Debug, Clone, Copy)]
struct Clock {
    time: f64,
    id: usize,
}

impl PartialEq for Clock {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Clock {}
impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Clock {
    // Reversed so the std max-heap pops the earliest clock; ties go to the
    // lower id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// One tick of a walker clock, including self-loop jumps that leave the
/// position unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawJump {
    pub time: f64,
    pub walker: usize,
    pub from: usize,
    pub to: usize,
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::param(
            name,
            format!("must be finite and positive, got {value}"),
        ));
    }
    Ok(())
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::param(
            "horizon",
            format!("must be finite and >= 0, got {horizon}"),
        ));
    }
    Ok(())
}

/// Every clock tick of `N` independent walkers on `[0, horizon]`.
pub fn simulate_walkers_raw(
    g: &SkeletonGraph,
    epsilon: f64,
    x0: &WalkerState,
    horizon: f64,
    seed: RngSeed,
) -> Result<Vec<RawJump>> {
    g.require_self_loops()?;
    check_rate("epsilon", epsilon)?;
    check_horizon(horizon)?;
    x0.validate(g)?;

    let n = g.vertex_count();
    let rows: Vec<WeightedIndex<f64>> = (0..n)
        .map(|u| WeightedIndex::new(&g.weights()[u * n..(u + 1) * n]).expect("degree > 0"))
        .collect();
    let hold = Exp::new(1.0 / epsilon).map_err(|e| Error::param("epsilon", e.to_string()))?;
    let mut rng = seed.rng();

    let mut pos = x0.positions().to_vec();
    let mut heap: BinaryHeap<Clock> = (0..pos.len())
        .map(|id| Clock {
            time: hold.sample(&mut rng),
            id,
        })
        .collect();
    let mut out = Vec::new();
    let mut last = 0.0_f64;
    while let Some(Clock { time, id }) = heap.pop() {
        if time > horizon {
            break;
        }
        let time = if time > last { time } else { last.next_up() };
        let from = pos[id];
        let to = rows[from].sample(&mut rng);
        pos[id] = to;
        out.push(RawJump {
            time,
            walker: id,
            from,
            to,
        });
        last = time;
        heap.push(Clock {
            time: time + hold.sample(&mut rng),
            id,
        });
    }
    Ok(out)
}

/// Walker trajectory with self-loop jumps compacted away.
pub fn simulate_walkers(
    g: &SkeletonGraph,
    epsilon: f64,
    x0: &WalkerState,
    horizon: f64,
    seed: RngSeed,
) -> Result<JumpTrajectory<WalkerState>> {
    let raw = simulate_walkers_raw(g, epsilon, x0, horizon, seed)?;
    let events = raw
        .into_iter()
        .filter(|j| j.from != j.to)
        .map(|j| JumpEvent {
            time: j.time,
            index: j.walker,
            value: j.to,
        })
        .collect();
    let mut traj = JumpTrajectory::new(x0.clone(), events, horizon)?;
    traj.meta = Some(TrajectoryMeta {
        epsilon,
        kappa: None,
        seed,
    });
    Ok(traj)
}

/// Independent on/off edge chains: on→off at rate `1/ε`, off→on at rate `κ`.
pub fn simulate_edges(
    g: &SkeletonGraph,
    epsilon: f64,
    kappa: f64,
    e0: &EdgeConfiguration,
    horizon: f64,
    seed: RngSeed,
) -> Result<JumpTrajectory<EdgeConfiguration>> {
    check_rate("epsilon", epsilon)?;
    check_rate("kappa", kappa)?;
    check_horizon(horizon)?;
    let m = g.edge_set().len();
    if e0.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: e0.len(),
        });
    }
    let off = Exp::new(1.0 / epsilon).map_err(|e| Error::param("epsilon", e.to_string()))?;
    let on = Exp::new(kappa).map_err(|e| Error::param("kappa", e.to_string()))?;
    let mut rng = seed.rng();
    let mut state = e0.clone();
    let draw = |is_on: bool, rng: &mut ChaCha8Rng| {
        if is_on {
            off.sample(rng)
        } else {
            on.sample(rng)
        }
    };

    let mut heap: BinaryHeap<Clock> = (0..m)
        .map(|id| Clock {
            time: draw(state.is_on(id), &mut rng),
            id,
        })
        .collect();
    let mut events = Vec::new();
    let mut last = 0.0_f64;
    while let Some(Clock { time, id }) = heap.pop() {
        if time > horizon {
            break;
        }
        let time = if time > last { time } else { last.next_up() };
        let now_on = !state.is_on(id);
        state.set(id, now_on);
        events.push(JumpEvent {
            time,
            index: id,
            value: now_on as usize,
        });
        last = time;
        heap.push(Clock {
            time: time + draw(now_on, &mut rng),
            id,
        });
    }
    let mut traj = JumpTrajectory::new(e0.clone(), events, horizon)?;
    traj.meta = Some(TrajectoryMeta {
        epsilon,
        kappa: Some(kappa),
        seed,
    });
    Ok(traj)
}
