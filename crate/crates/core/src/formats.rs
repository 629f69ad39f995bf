//! Plain-text graph files and jump-trajectory dumps.
//!
//! Both formats are line based. `#` starts a comment, blank lines are
//! ignored, header lines have the form `key = value`, and data lines are
//! whitespace-separated fields.
//!
//! Graph file:
//!
//! ```text
//! vertices = 3
//! self_loops = 1     # optional: set every diagonal entry to this weight
//! 0 1 1.0            # u v [weight], weight defaults to 1
//! 1 2 0.5
//! ```
//!
//! Trajectory dump:
//!
//! ```text
//! model = krw        # krw (walker positions) or drc (edge bits)
//! horizon = 10
//! initial = 0 2 1
//! epsilon = 0.1      # optional metadata, together with kappa/seed/stream
//! 0.25 1 0           # time index value
//! ```
//!
//! Floats are written with Rust's shortest round-trip representation, so
//! dumping and re-parsing reproduces every value bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::SkeletonGraph;
use crate::jump::{JumpEvent, JumpState, JumpTrajectory, RngSeed, TrajectoryMeta};

/// Dense storage is `n²` floats; larger graphs are rejected at parse time.
pub const MAX_FILE_VERTICES: usize = 4096;
/// Upper bound on the length of an `initial` header.
pub const MAX_STATE_DIMENSION: usize = 1 << 20;

enum Line<'a> {
    Header(&'a str, &'a str),
    Data(Vec<&'a str>),
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Line<'_>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            return None;
        }
        let line = match content.split_once('=') {
            Some((k, v)) => Line::Header(k.trim(), v.trim()),
            None => Line::Data(content.split_whitespace().collect()),
        };
        Some((i + 1, line))
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{s}`")))
}

fn parse_f64(line: usize, what: &str, s: &str) -> Result<f64> {
    let v: f64 = parse_num(line, what, s)?;
    if !v.is_finite() {
        return Err(Error::parse(
            line,
            format!("{what} must be finite, got `{s}`"),
        ));
    }
    Ok(v)
}

pub fn parse_graph(text: &str) -> Result<SkeletonGraph> {
    let mut vertices: Option<(usize, usize)> = None;
    let mut self_loops: Option<f64> = None;
    let mut edges = Vec::new();
    for (no, line) in lines(text) {
        match line {
            Line::Header("vertices", v) => {
                if vertices.is_some() {
                    return Err(Error::parse(no, "duplicate `vertices` header"));
                }
                let n: usize = parse_num(no, "vertex count", v)?;
                if n == 0 || n > MAX_FILE_VERTICES {
                    return Err(Error::parse(
                        no,
                        format!("vertex count must lie in 1..={MAX_FILE_VERTICES}"),
                    ));
                }
                vertices = Some((n, no));
            }
            Line::Header("self_loops", v) => {
                if self_loops.is_some() {
                    return Err(Error::parse(no, "duplicate `self_loops` header"));
                }
                self_loops = Some(parse_f64(no, "self-loop weight", v)?);
            }
            Line::Header(k, _) => return Err(Error::parse(no, format!("unknown header `{k}`"))),
            Line::Data(fields) => {
                let (u, v, w) = match fields.as_slice() {
                    [u, v] => (u, v, 1.0),
                    [u, v, w] => (u, v, parse_f64(no, "weight", w)?),
                    _ => return Err(Error::parse(no, "expected `u v [weight]`")),
                };
                let u: usize = parse_num(no, "vertex", u)?;
                let v: usize = parse_num(no, "vertex", v)?;
                edges.push((no, u, v, w));
            }
        }
    }
    let Some((n, _)) = vertices else {
        return Err(Error::parse(0, "missing `vertices` header"));
    };
    for &(no, u, v, _) in &edges {
        if u >= n || v >= n {
            return Err(Error::parse(
                no,
                format!("vertex out of range for {n} vertices"),
            ));
        }
    }
    let list: Vec<(usize, usize, f64)> = edges.iter().map(|&(_, u, v, w)| (u, v, w)).collect();
    let g = SkeletonGraph::from_edges(n, &list)?;
    match self_loops {
        Some(w) => g.with_self_loops(w),
        None => Ok(g),
    }
}

/// Writes every pair `u ≤ v` with positive weight. Self-loops appear as
/// ordinary `u u w` lines.
pub fn write_graph(g: &SkeletonGraph) -> String {
    let mut out = format!("vertices = {}\n", g.vertex_count());
    for (u, v) in g.edge_set().iter() {
        let _ = writeln!(out, "{u} {v} {}", g.weight(u, v));
    }
    out
}

pub fn write_trajectory<S: JumpState>(traj: &JumpTrajectory<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model = {}", S::MODEL);
    let _ = writeln!(out, "horizon = {}", traj.horizon());
    let init: Vec<String> = traj
        .initial_state()
        .values()
        .iter()
        .map(|v| v.to_string())
        .collect();
    let _ = writeln!(out, "initial = {}", init.join(" "));
    if let Some(meta) = &traj.meta {
        let _ = writeln!(out, "epsilon = {}", meta.epsilon);
        if let Some(k) = meta.kappa {
            let _ = writeln!(out, "kappa = {k}");
        }
        let _ = writeln!(out, "seed = {}", meta.seed.seed);
        let _ = writeln!(out, "stream = {}", meta.seed.stream);
    }
    for ev in traj.events() {
        let _ = writeln!(out, "{} {} {}", ev.time, ev.index, ev.value);
    }
    out
}

pub fn parse_trajectory<S: JumpState>(text: &str) -> Result<JumpTrajectory<S>> {
    let mut model = None;
    let mut horizon = None;
    let mut initial: Option<Vec<usize>> = None;
    let mut epsilon = None;
    let mut kappa = None;
    let mut seed = None;
    let mut stream = None;
    let mut events = Vec::new();
    let mut last_line = 0;
    for (no, line) in lines(text) {
        last_line = no;
        match line {
            Line::Header(key, value) => {
                let dup = match key {
                    "model" => model.replace(value.to_string()).is_some(),
                    "horizon" => horizon.replace(parse_f64(no, "horizon", value)?).is_some(),
                    "epsilon" => epsilon.replace(parse_f64(no, "epsilon", value)?).is_some(),
                    "kappa" => kappa.replace(parse_f64(no, "kappa", value)?).is_some(),
                    "seed" => seed.replace(parse_num::<u64>(no, "seed", value)?).is_some(),
                    "stream" => stream
                        .replace(parse_num::<u64>(no, "stream", value)?)
                        .is_some(),
                    "initial" => {
                        let fields: Vec<&str> = value.split_whitespace().collect();
                        if fields.len() > MAX_STATE_DIMENSION {
                            return Err(Error::parse(no, "initial state too long"));
                        }
                        let values = fields
                            .iter()
                            .map(|f| parse_num::<usize>(no, "state value", f))
                            .collect::<Result<Vec<_>>>()?;
                        initial.replace(values).is_some()
                    }
                    other => return Err(Error::parse(no, format!("unknown header `{other}`"))),
                };
                if dup {
                    return Err(Error::parse(no, format!("duplicate `{key}` header")));
                }
            }
            Line::Data(fields) => {
                let [t, i, v] = fields.as_slice() else {
                    return Err(Error::parse(no, "expected `time index value`"));
                };
                events.push(JumpEvent {
                    time: parse_f64(no, "time", t)?,
                    index: parse_num(no, "index", i)?,
                    value: parse_num(no, "value", v)?,
                });
            }
        }
    }
    match model.as_deref() {
        Some(m) if m == S::MODEL => {}
        Some(m) => {
            return Err(Error::parse(
                0,
                format!("model `{m}` does not match expected `{}`", S::MODEL),
            ));
        }
        None => return Err(Error::parse(0, "missing `model` header")),
    }
    let horizon = horizon.ok_or_else(|| Error::parse(0, "missing `horizon` header"))?;
    let initial =
        S::from_values(initial.ok_or_else(|| Error::parse(0, "missing `initial` header"))?)?;
    let mut traj = JumpTrajectory::new(initial, events, horizon).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::parse(last_line, reason),
        other => other,
    })?;
    traj.meta = match (epsilon, seed, stream) {
        (Some(epsilon), Some(seed), Some(stream)) => Some(TrajectoryMeta {
            epsilon,
            kappa,
            seed: RngSeed::new(seed, stream),
        }),
        (None, None, None) if kappa.is_none() => None,
        _ => {
            return Err(Error::parse(
                0,
                "`epsilon`, `seed` and `stream` must appear together",
            ))
        }
    };
    Ok(traj)
}
