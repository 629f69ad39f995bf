//! Weighted skeleton graphs and their spectral quantities.
//!
//! A [`SkeletonGraph`] is the static substrate both switching models live
//! on: a connected, symmetric, nonnegatively weighted graph stored as a
//! dense matrix. Self-loops are allowed; random-walker skeletons require
//! them on every vertex (see [`SkeletonGraph::require_self_loops`]).
//!
//! The spectral side works with arbitrary symmetric weight matrices so it
//! can be applied to the skeleton itself, to subgraphs selected by an edge
//! configuration, and to the N-vertex "fictitious" graphs induced by walker
//! positions and phases, whose Laplacian is the Hessian of the energy.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jump::{EdgeConfiguration, WalkerState};

/// Eigenvalues below this are treated as zero when reporting a spectral gap.
pub const GAP_NOISE_FLOOR: f64 = 1e-10;

/// Default cap on the number of walker configurations enumerated by
/// [`uniform_spectral_gap`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    n: usize,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl SkeletonGraph {
    /// Builds a graph from a row-major `n × n` weight matrix.
    ///
    /// Rejects asymmetric (bit-exact comparison), negative or non-finite
    /// weights, zero-degree vertices and disconnected graphs.
    pub fn from_dense(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: weights.len(),
            });
        }
        for u in 0..n {
            for v in 0..n {
                let w = weights[u * n + v];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidWeight { u, v, weight: w });
                }
                if w.to_bits() != weights[v * n + u].to_bits() {
                    return Err(Error::NotSymmetric { u, v });
                }
            }
        }
        let degrees: Vec<f64> = (0..n)
            .map(|u| weights[u * n..(u + 1) * n].iter().sum())
            .collect();
        if let Some(u) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::ZeroDegree(u));
        }
        let g = SkeletonGraph {
            n,
            weights,
            degrees,
        };
        if !positive_part_connected(n, |u, v| g.weight(u, v)) {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    /// Builds a graph from an undirected edge list; each `(u, v, w)` sets
    /// both `π(u,v)` and `π(v,u)`. Repeated pairs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut weights = vec![0.0; n * n];
        let mut seen = vec![false; n * n];
        for &(u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange {
                        vertex: x,
                        count: n,
                    });
                }
            }
            if seen[u * n + v] {
                return Err(Error::param(
                    "edges",
                    format!("edge ({u}, {v}) listed more than once"),
                ));
            }
            seen[u * n + v] = true;
            seen[v * n + u] = true;
            weights[u * n + v] = w;
            weights[v * n + u] = w;
        }
        Self::from_dense(n, weights)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// `π(u, v)`. Panics on out-of-range indices.
    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.n + v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.weights)
    }

    /// `π(u) = Σ_v π(u, v)`.
    pub fn vertex_degree(&self, u: usize) -> Result<f64> {
        self.degrees.get(u).copied().ok_or(Error::VertexOutOfRange {
            vertex: u,
            count: self.n,
        })
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// The degree bound `A = max_u π(u)`.
    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }

    /// Reversible measure of the weight-proportional random walk,
    /// `μ(u) = π(u) / Σ_v π(v)`.
    pub fn stationary_measure(&self) -> Vec<f64> {
        let total: f64 = self.degrees.iter().sum();
        self.degrees.iter().map(|d| d / total).collect()
    }

    /// Jump probability `p(u, v) = π(u, v) / π(u)` of the embedded chain.
    pub fn transition_probability(&self, u: usize, v: usize) -> f64 {
        self.weight(u, v) / self.degrees[u]
    }

    /// Coupling of the averaged equation, `ā = Σ_{u,v} π(u,v) μ(u) μ(v)`.
    pub fn averaged_coupling(&self) -> f64 {
        let deg = self.degrees();
        let total: f64 = deg.iter().sum();
        let mut acc = 0.0;
        for u in 0..self.n {
            for v in 0..self.n {
                acc += self.weight(u, v) * deg[u] * deg[v];
            }
        }
        acc / (total * total)
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).all(|u| self.weight(u, u) > 0.0)
    }

    pub fn require_self_loops(&self) -> Result<()> {
        match (0..self.n).find(|&u| self.weight(u, u) <= 0.0) {
            Some(u) => Err(Error::MissingSelfLoop(u)),
            None => Ok(()),
        }
    }

    /// Returns a copy with every diagonal entry set to `w`.
    pub fn with_self_loops(&self, w: f64) -> Result<Self> {
        let mut weights = self.weights.clone();
        for u in 0..self.n {
            weights[u * self.n + u] = w;
        }
        Self::from_dense(self.n, weights)
    }

    /// True when every pair of distinct vertices is joined by an edge.
    pub fn is_complete(&self) -> bool {
        (0..self.n).all(|u| (0..self.n).all(|v| u == v || self.weight(u, v) > 0.0))
    }

    /// A pair `u ≠ v` with `π(u, v) = 0`, if the graph is not complete.
    pub fn missing_pair(&self) -> Option<(usize, usize)> {
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.weight(u, v) == 0.0 {
                    return Some((u, v));
                }
            }
        }
        None
    }

    pub fn edge_set(&self) -> EdgeSet {
        let mut edges = Vec::new();
        for u in 0..self.n {
            for v in u..self.n {
                if self.weight(u, v) > 0.0 {
                    edges.push((u, v));
                }
            }
        }
        EdgeSet { edges }
    }

    pub fn is_connected(&self) -> bool {
        positive_part_connected(self.n, |u, v| self.weight(u, v))
    }

    // --- generators -------------------------------------------------------

    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "path graph needs at least 2 vertices"));
        }
        let edges: Vec<_> = (0..n - 1).map(|u| (u, u + 1, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("n", "cycle graph needs at least 3 vertices"));
        }
        let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    /// Complete graph with unit weights and no self-loops.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(
                "n",
                "complete graph needs at least 2 vertices",
            ));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v, 1.0));
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Ring of `n` vertices, each joined by unit weight to its `k` nearest
    /// neighbours on either side. No self-loops.
    pub fn wsg(n: usize, k: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("n", "ring needs at least 3 vertices"));
        }
        if k < 1 || 2 * k >= n {
            return Err(Error::param(
                "k",
                format!("need 1 <= k < n/2, got k = {k}, n = {n}"),
            ));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for d in 1..=k {
                edges.push((u, (u + d) % n, 1.0));
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Erdős–Rényi `G(n, p)` with unit weights, redrawn until connected.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "need at least 2 vertices"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param(
                "p",
                format!("edge probability must lie in (0, 1], got {p}"),
            ));
        }
        const ATTEMPTS: usize = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ATTEMPTS {
            let mut weights = vec![0.0; n * n];
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random::<f64>() < p {
                        weights[u * n + v] = 1.0;
                        weights[v * n + u] = 1.0;
                    }
                }
            }
            match Self::from_dense(n, weights) {
                Ok(g) => return Ok(g),
                Err(Error::Disconnected | Error::ZeroDegree(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::param(
            "p",
            format!("no connected G({n}, {p}) sample in {ATTEMPTS} attempts"),
        ))
    }
}

/// The undirected edges `(u, v)`, `u ≤ v`, with `π(u, v) > 0`, in
/// lexicographic order. Positions in this list index edge bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<(usize, usize)> {
        self.edges.get(index).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn index_of(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }
}

/// The N-vertex graph with weights `π(x_i, x_j) cos(θ_j − θ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FictitiousGraph {
    pub weights: DMatrix<f64>,
}

impl FictitiousGraph {
    pub fn vertex_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        laplacian(&self.weights)
    }

    pub fn spectral_gap(&self) -> Result<f64> {
        laplacian_spectral_gap(&self.weights)
    }
}

pub fn fictitious_graph(
    g: &SkeletonGraph,
    x: &WalkerState,
    theta: &[f64],
) -> Result<FictitiousGraph> {
    let n = x.len();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    x.validate(g)?;
    let pos = x.positions();
    let weights = DMatrix::from_fn(n, n, |i, j| {
        g.weight(pos[i], pos[j]) * (theta[j] - theta[i]).cos()
    });
    Ok(FictitiousGraph { weights })
}

/// Walker interaction weights `a_ij(x) = π(x_i, x_j)` (the fictitious graph
/// at θ = 0).
pub fn interaction_matrix(g: &SkeletonGraph, x: &[usize]) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| g.weight(x[i], x[j]))
}

/// `L = D − W`; diagonal entries of `W` (self-loops) cancel and are ignored.
pub fn laplacian(weights: &DMatrix<f64>) -> DMatrix<f64> {
    let n = weights.nrows();
    let mut lap = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                lap[(i, j)] = -weights[(i, j)];
                diag += weights[(i, j)];
            }
        }
        lap[(i, i)] = diag;
    }
    lap
}

fn check_weight_matrix(weights: &DMatrix<f64>) -> Result<()> {
    let n = weights.nrows();
    if weights.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.ncols(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let w = weights[(i, j)];
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight {
                    u: i,
                    v: j,
                    weight: w,
                });
            }
            let wt = weights[(j, i)];
            if (w - wt).abs() > 1e-12 * w.abs().max(wt.abs()).max(1.0) {
                return Err(Error::NotSymmetric { u: i, v: j });
            }
        }
    }
    Ok(())
}

/// Sorted Laplacian spectrum of a symmetric nonnegative weight matrix.
pub fn laplacian_spectrum(weights: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_weight_matrix(weights)?;
    let eig = SymmetricEigen::new(laplacian(weights));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Second-smallest Laplacian eigenvalue λ₂, with values below
/// [`GAP_NOISE_FLOOR`] reported as zero. A single vertex has no second
/// eigenvalue; 0 is returned.
pub fn laplacian_spectral_gap(weights: &DMatrix<f64>) -> Result<f64> {
    let values = laplacian_spectrum(weights)?;
    let gap = values.get(1).copied().unwrap_or(0.0);
    Ok(if gap < GAP_NOISE_FLOOR { 0.0 } else { gap })
}

/// Connectivity of the graph on positive off-diagonal weights.
pub fn is_connected(weights: &DMatrix<f64>) -> bool {
    positive_part_connected(weights.nrows(), |u, v| weights[(u, v)])
}

/// Connectivity of the subgraph of `g` keeping only the edges switched on in
/// `config`.
pub fn is_subgraph_connected(
    g: &SkeletonGraph,
    edges: &EdgeSet,
    config: &EdgeConfiguration,
) -> bool {
    let n = g.vertex_count();
    let mut adj = vec![false; n * n];
    for (idx, (u, v)) in edges.iter().enumerate() {
        if config.is_on(idx) {
            adj[u * n + v] = true;
            adj[v * n + u] = true;
        }
    }
    positive_part_connected(n, |u, v| if adj[u * n + v] { 1.0 } else { 0.0 })
}

#[allow(clippy::needless_range_loop)]
fn positive_part_connected(n: usize, weight: impl Fn(usize, usize) -> f64) -> bool {
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && v != u && weight(u, v) > 0.0 {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Number of walker configurations `|V|^N`, saturating.
pub fn configuration_count(vertices: usize, walkers: usize) -> u128 {
    (vertices as u128)
        .checked_pow(walkers as u32)
        .unwrap_or(u128::MAX)
}

/// Calls `f` on every configuration in `V^N` in lexicographic order.
pub(crate) fn for_each_configuration(
    vertices: usize,
    walkers: usize,
    mut f: impl FnMut(&[usize]) -> bool,
) {
    let mut x = vec![0usize; walkers];
    loop {
        if !f(&x) {
            return;
        }
        let mut k = walkers;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            x[k] += 1;
            if x[k] < vertices {
                break;
            }
            x[k] = 0;
        }
    }
}

/// Uniform lower bound c̃ on the Hessian spectral gap over the
/// phase-cohesive set Δ(γ).
///
/// Enumerates every `x ∈ V^N` whose interaction graph is connected and
/// returns `cos γ · min_x λ₂(a(x))`. Fails instead of subsampling when
/// `|V|^N` exceeds `cap`.
pub fn uniform_spectral_gap(
    g: &SkeletonGraph,
    walkers: usize,
    gamma: f64,
    cap: u64,
) -> Result<f64> {
    check_gamma(gamma)?;
    if walkers == 0 {
        return Err(Error::param("walkers", "need at least one walker"));
    }
    let required = configuration_count(g.vertex_count(), walkers);
    if required > cap as u128 {
        return Err(Error::EnumerationBudget { required, cap });
    }
    let mut best = f64::INFINITY;
    let mut failure = None;
    for_each_configuration(g.vertex_count(), walkers, |x| {
        let w = interaction_matrix(g, x);
        if is_connected(&w) {
            match laplacian_spectral_gap(&w) {
                Ok(gap) => best = best.min(gap),
                Err(e) => {
                    failure = Some(e);
                    return false;
                }
            }
        }
        true
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if !best.is_finite() {
        return Err(Error::Consistency(
            "no walker configuration has a connected interaction graph".into(),
        ));
    }
    Ok(gamma.cos() * best)
}

/// Counterpart of [`uniform_spectral_gap`] for switching-edge dynamics: the
/// minimum over connected edge subsets of the skeleton.
pub fn uniform_spectral_gap_edges(g: &SkeletonGraph, gamma: f64, cap: u64) -> Result<f64> {
    check_gamma(gamma)?;
    let edges = g.edge_set();
    let required = 1u128.checked_shl(edges.len() as u32).unwrap_or(u128::MAX);
    if required > cap as u128 {
        return Err(Error::EnumerationBudget { required, cap });
    }
    let n = g.vertex_count();
    let mut best = f64::INFINITY;
    for mask in 0..required as u64 {
        let config = EdgeConfiguration::from_mask(edges.len(), mask);
        if !is_subgraph_connected(g, &edges, &config) {
            continue;
        }
        let mut w = DMatrix::zeros(n, n);
        for (idx, (u, v)) in edges.iter().enumerate() {
            if config.is_on(idx) {
                w[(u, v)] = g.weight(u, v);
                w[(v, u)] = g.weight(u, v);
            }
        }
        best = best.min(laplacian_spectral_gap(&w)?);
    }
    Ok(gamma.cos() * best)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < std::f64::consts::FRAC_PI_2) {
        return Err(Error::param(
            "gamma",
            format!("must lie in (0, π/2), got {gamma}"),
        ));
    }
    Ok(())
}
