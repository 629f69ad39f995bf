//! Right-hand sides of the three phase equations, plus the energy whose
//! gradient flow they are.
//!
//! All three systems share the form
//!
//! ```text
//! dθ_i/dt = ω_i + gain · Σ_j a_ij sin(θ_j − θ_i)
//! ```
//!
//! with a symmetric coefficient matrix that is frozen between jumps:
//!
//! | model    | a_ij                    | gain  |
//! |----------|-------------------------|-------|
//! | walkers  | π(x_i, x_j)             | K/N   |
//! | edges    | 1{(u,v) on} · π(u, v)   | K/|V| |
//! | averaged | ā                       | K/N   |
//!
//! [`Coupling`] is that frozen matrix; the integrator evaluates it in its
//! inner loop.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeSet, SkeletonGraph};
use crate::jump::{EdgeConfiguration, WalkerState};

/// Coupling constant and natural frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub coupling: f64,
    pub frequencies: Vec<f64>,
}

impl ModelParams {
    pub fn new(coupling: f64, frequencies: Vec<f64>) -> Result<Self> {
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::param(
                "coupling",
                format!("must be finite and positive, got {coupling}"),
            ));
        }
        if let Some(w) = frequencies.iter().find(|w| !w.is_finite()) {
            return Err(Error::param(
                "frequencies",
                format!("non-finite frequency {w}"),
            ));
        }
        Ok(ModelParams {
            coupling,
            frequencies,
        })
    }

    /// Identical oscillators with zero natural frequency.
    pub fn homogeneous(coupling: f64, population: usize) -> Result<Self> {
        Self::new(coupling, vec![0.0; population])
    }

    pub fn population(&self) -> usize {
        self.frequencies.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().fold(0.0, |m, w| m.max(w.abs()))
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.frequencies.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.frequencies.len(),
            });
        }
        Ok(())
    }
}

/// Frozen symmetric coefficient matrix `a_ij` and the gain in front of the
/// interaction sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n: usize,
    a: Vec<f64>,
    gain: f64,
}

impl Coupling {
    /// `a_ij = π(x_i, x_j)`, gain `K/N`.
    pub fn walkers(g: &SkeletonGraph, x: &WalkerState, coupling: f64) -> Result<Self> {
        x.validate(g)?;
        let mut c = Coupling::zeros(x.len(), coupling / x.len() as f64);
        c.set_walkers(g, x.positions());
        Ok(c)
    }

    /// `a_uv = 1{(u,v) on} π(u, v)`, gain `K/|V|`.
    pub fn edges(
        g: &SkeletonGraph,
        edges: &EdgeSet,
        config: &EdgeConfiguration,
        coupling: f64,
    ) -> Result<Self> {
        if config.len() != edges.len() {
            return Err(Error::DimensionMismatch {
                expected: edges.len(),
                got: config.len(),
            });
        }
        let n = g.vertex_count();
        let mut c = Coupling::zeros(n, coupling / n as f64);
        c.set_edges(g, edges, config);
        Ok(c)
    }

    /// `a_ij = ā` for all pairs, gain `K/N`.
    pub fn averaged(n: usize, a_bar: f64, coupling: f64) -> Self {
        Coupling {
            n,
            a: vec![a_bar; n * n],
            gain: coupling / n as f64,
        }
    }

    pub(crate) fn zeros(n: usize, gain: f64) -> Self {
        Coupling {
            n,
            a: vec![0.0; n * n],
            gain,
        }
    }

    pub(crate) fn set_walkers(&mut self, g: &SkeletonGraph, x: &[usize]) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i * self.n + j] = g.weight(x[i], x[j]);
            }
        }
    }

    pub(crate) fn set_edges(
        &mut self,
        g: &SkeletonGraph,
        edges: &EdgeSet,
        config: &EdgeConfiguration,
    ) {
        self.a.iter_mut().for_each(|w| *w = 0.0);
        for (idx, (u, v)) in edges.iter().enumerate() {
            if config.is_on(idx) {
                let w = g.weight(u, v);
                self.a[u * self.n + v] = w;
                self.a[v * self.n + u] = w;
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    #[inline]
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }

    /// Writes `ω_i + gain Σ_j a_ij sin(θ_j − θ_i)` into `out`. Each pair is
    /// evaluated once and applied with opposite signs, so the components sum
    /// to `Σ ω_i` up to rounding.
    #[inline]
    pub fn rhs_into(&self, theta: &[f64], omega: &[f64], out: &mut [f64]) {
        let n = self.n;
        out[..n].copy_from_slice(&omega[..n]);
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            for j in (i + 1)..n {
                let w = row[j];
                if w != 0.0 {
                    let s = self.gain * w * (theta[j] - theta[i]).sin();
                    out[i] += s;
                    out[j] -= s;
                }
            }
        }
    }

    pub fn rhs(&self, theta: &[f64], omega: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.rhs_into(theta, omega, &mut out);
        out
    }

    /// `½ Σ_{i,j} a_ij (1 − cos(θ_j − θ_i))`.
    pub fn energy(&self, theta: &[f64]) -> f64 {
        let n = self.n;
        let mut u = 0.0;
        for i in 0..n {
            for j in 0..n {
                u += self.a[i * n + j] * (1.0 - (theta[j] - theta[i]).cos());
            }
        }
        0.5 * u
    }

    /// `∂U/∂θ_i = Σ_j a_ij sin(θ_i − θ_j)`.
    pub fn energy_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.a[i * n + j] * (theta[i] - theta[j]).sin())
                    .sum()
            })
            .collect()
    }

    /// Off-diagonal `−a_ij cos(θ_j − θ_i)`, diagonal `Σ_{k≠i} a_ik cos(θ_k − θ_i)`.
    pub fn energy_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let c = self.a[i * n + j] * (theta[j] - theta[i]).cos();
                    h[(i, j)] = -c;
                    diag += c;
                }
            }
            h[(i, i)] = diag;
        }
        h
    }
}

fn check_len(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    Ok(())
}

/// Random-walker drift `b_i(θ, x)`.
pub fn krw_rhs(
    theta: &[f64],
    x: &WalkerState,
    g: &SkeletonGraph,
    p: &ModelParams,
) -> Result<Vec<f64>> {
    check_len(theta, x.len())?;
    p.check(x.len())?;
    Ok(Coupling::walkers(g, x, p.coupling)?.rhs(theta, &p.frequencies))
}

/// Switching-edge drift `b_u(θ, E)`; note the `K/|V|` normalisation.
pub fn drc_rhs(
    theta: &[f64],
    e: &EdgeConfiguration,
    g: &SkeletonGraph,
    p: &ModelParams,
) -> Result<Vec<f64>> {
    let n = g.vertex_count();
    check_len(theta, n)?;
    p.check(n)?;
    Ok(Coupling::edges(g, &g.edge_set(), e, p.coupling)?.rhs(theta, &p.frequencies))
}

/// Drift of the averaged complete-graph system with coupling `ā`.
pub fn averaged_rhs(theta: &[f64], a_bar: f64, p: &ModelParams) -> Result<Vec<f64>> {
    p.check(theta.len())?;
    Ok(Coupling::averaged(theta.len(), a_bar, p.coupling).rhs(theta, &p.frequencies))
}

pub fn energy(theta: &[f64], x: &WalkerState, g: &SkeletonGraph) -> Result<f64> {
    check_len(theta, x.len())?;
    Ok(Coupling::walkers(g, x, 1.0)?.energy(theta))
}

pub fn energy_gradient(theta: &[f64], x: &WalkerState, g: &SkeletonGraph) -> Result<Vec<f64>> {
    check_len(theta, x.len())?;
    Ok(Coupling::walkers(g, x, 1.0)?.energy_gradient(theta))
}

pub fn energy_hessian(theta: &[f64], x: &WalkerState, g: &SkeletonGraph) -> Result<DMatrix<f64>> {
    check_len(theta, x.len())?;
    Ok(Coupling::walkers(g, x, 1.0)?.energy_hessian(theta))
}

/// Uniform drift bound `K·A + ‖ω‖∞`.
pub fn drift_bound(g: &SkeletonGraph, p: &ModelParams) -> f64 {
    p.coupling * g.max_degree() + p.max_frequency()
}

/// Lipschitz constant of `θ ↦ b(θ, ·)` in ℓ², uniform over graph states:
/// the Jacobian is symmetric with absolute row sums at most
/// `2 (K/N)(N − 1) A`, which bounds its spectral norm.
pub fn lipschitz_constant(coupling: f64, population: usize, max_degree: f64) -> f64 {
    if population <= 1 {
        return 0.0;
    }
    let n = population as f64;
    2.0 * coupling * max_degree * (n - 1.0) / n
}
