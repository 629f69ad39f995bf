use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::energy_hessian;
use crate::error::{Error, Result};
use crate::graph::{configuration_count, for_each_configuration, SkeletonGraph};
use crate::jump::{EdgeConfiguration, WalkerState};
use crate::phase::{geodesic_distance, PhaseVector};

/// Residual below which a drift component counts as zero.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// Largest `n` for which the `2^(n−1)` classes of `S` are listed.
pub const MAX_CANDIDATE_DIMENSION: usize = 20;

const IN_SET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "state", rename_all = "snake_case")]
pub enum GraphState {
    Walkers(WalkerState),
    Edges(EdgeConfiguration),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub state: GraphState,
    pub component: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub candidate: Vec<f64>,
    pub is_fixed_point: bool,
    /// Largest `|b_i|` over the checked graph states, with `ω = 0` and the
    /// coupling gain (`K/N` or `K/|V|`) set to 1; whether a point is fixed
    /// does not depend on the gain.
    pub max_residual: f64,
    pub violation: Option<Violation>,
    pub states_checked: u64,
    /// Only single-edge subsets were checked (edge model).
    pub single_edge_reduction: bool,
}

/// The set `S`: vectors with entries in `{0, π}` and `θ_0 = 0`, one per
/// class modulo global translation.
pub fn enumerate_candidate_equilibria(n: usize) -> Result<Vec<PhaseVector>> {
    if n == 0 || n > MAX_CANDIDATE_DIMENSION {
        return Err(Error::param(
            "n",
            format!("must lie in 1..={MAX_CANDIDATE_DIMENSION}, got {n}"),
        ));
    }
    Ok((0u32..1 << (n - 1))
        .map(|mask| {
            PhaseVector::new((0..n).map(|i| {
                if i > 0 && mask >> (i - 1) & 1 == 1 {
                    PI
                } else {
                    0.0
                }
            }))
        })
        .collect())
}

/// Whether every entry is (within 1e-12) 0 or π modulo 2π.
pub fn in_equilibrium_set(theta: &[f64]) -> bool {
    theta
        .iter()
        .all(|&t| geodesic_distance(t, 0.0) < IN_SET_TOL || geodesic_distance(t, PI) < IN_SET_TOL)
}

fn worst_component(residuals: &[f64]) -> (usize, f64) {
    residuals.iter().enumerate().fold(
        (0, 0.0),
        |(bi, bv), (i, &r)| if r.abs() > bv { (i, r.abs()) } else { (bi, bv) },
    )
}

/// Checks `b_i(θ*, x) = 0` for every walker configuration `x ∈ V^N`.
///
/// When the check fails on a non-complete skeleton the reported witness is
/// `x_i = x_j = u*`, all other walkers at `v*`, where `π(u*, v*) = 0` and
/// `(i, j)` is the pair with the largest `|sin(θ_j − θ_i)|`; otherwise the
/// configuration with the largest residual.
pub fn verify_fixed_point_krw(
    theta: &[f64],
    g: &SkeletonGraph,
    walkers: usize,
    cap: u64,
) -> Result<EquilibriumReport> {
    g.require_self_loops()?;
    if theta.len() != walkers {
        return Err(Error::DimensionMismatch {
            expected: walkers,
            got: theta.len(),
        });
    }
    let required = configuration_count(g.vertex_count(), walkers);
    if required > cap as u128 {
        return Err(Error::EnumerationBudget { required, cap });
    }
    let mut residuals = vec![0.0; walkers];
    let mut worst: Option<Violation> = None;
    let mut max_residual = 0.0_f64;
    let mut checked = 0u64;
    for_each_configuration(g.vertex_count(), walkers, |x| {
        krw_residuals(theta, g, x, &mut residuals);
        checked += 1;
        let (i, r) = worst_component(&residuals);
        if r > max_residual {
            max_residual = r;
            worst = Some(Violation {
                state: GraphState::Walkers(WalkerState::new(x.to_vec())),
                component: i,
                residual: r,
            });
        }
        true
    });
    let is_fixed_point = max_residual < FIXED_POINT_TOL;
    let violation = if is_fixed_point {
        None
    } else {
        proof_witness(theta, g).or(worst)
    };
    Ok(EquilibriumReport {
        candidate: theta.to_vec(),
        is_fixed_point,
        max_residual,
        violation,
        states_checked: checked,
        single_edge_reduction: false,
    })
}

fn krw_residuals(theta: &[f64], g: &SkeletonGraph, x: &[usize], out: &mut [f64]) {
    for (i, r) in out.iter_mut().enumerate() {
        *r = x
            .iter()
            .zip(theta)
            .map(|(&xj, &tj)| g.weight(x[i], xj) * (tj - theta[i]).sin())
            .sum();
    }
}

fn proof_witness(theta: &[f64], g: &SkeletonGraph) -> Option<Violation> {
    let (u, v) = g.missing_pair()?;
    let n = theta.len();
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let s = (theta[j] - theta[i]).sin().abs();
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
    }
    let (i, j, _) = best?;
    let x: Vec<usize> = (0..n)
        .map(|k| if k == i || k == j { u } else { v })
        .collect();
    let mut residuals = vec![0.0; n];
    krw_residuals(theta, g, &x, &mut residuals);
    let r = residuals[i].abs();
    (r >= FIXED_POINT_TOL).then(|| Violation {
        state: GraphState::Walkers(WalkerState::new(x)),
        component: i,
        residual: r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DrcCheck {
    /// All `2^|E|` edge subsets.
    Exhaustive { cap: u64 },
    /// Subsets with exactly one edge, which is sufficient.
    SingleEdge,
}

/// Checks `b_u(θ*, E') = 0` for edge subsets `E'` of the skeleton.
pub fn verify_fixed_point_drc(
    theta: &[f64],
    g: &SkeletonGraph,
    mode: DrcCheck,
) -> Result<EquilibriumReport> {
    let n = g.vertex_count();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    let edges = g.edge_set();
    let m = edges.len();
    // Torque each edge exerts on its lower endpoint; the upper endpoint
    // receives the negative.
    let torque: Vec<f64> = edges
        .iter()
        .map(|(u, v)| g.weight(u, v) * (theta[v] - theta[u]).sin())
        .collect();

    let mut max_residual = 0.0_f64;
    let mut violation = None;
    let mut checked = 0u64;
    let mut residuals = vec![0.0; n];
    let mut record =
        |max_residual: &mut f64, config: &dyn Fn() -> EdgeConfiguration, residuals: &[f64]| {
            let (c, r) = worst_component(residuals);
            if r > *max_residual {
                *max_residual = r;
                violation = Some(Violation {
                    state: GraphState::Edges(config()),
                    component: c,
                    residual: r,
                });
            }
        };
    match mode {
        DrcCheck::SingleEdge => {
            for (e, (u, v)) in edges.iter().enumerate() {
                residuals.iter_mut().for_each(|r| *r = 0.0);
                residuals[u] += torque[e];
                residuals[v] -= torque[e];
                checked += 1;
                let config = || {
                    let mut c = EdgeConfiguration::all_off(m);
                    c.set(e, true);
                    c
                };
                record(&mut max_residual, &config, &residuals);
            }
        }
        DrcCheck::Exhaustive { cap } => {
            let required = 1u128.checked_shl(m as u32).unwrap_or(u128::MAX);
            if m >= 64 || required > cap as u128 {
                return Err(Error::EnumerationBudget { required, cap });
            }
            for mask in 0..1u64 << m {
                residuals.iter_mut().for_each(|r| *r = 0.0);
                for (e, (u, v)) in edges.iter().enumerate() {
                    if mask >> e & 1 == 1 {
                        residuals[u] += torque[e];
                        residuals[v] -= torque[e];
                    }
                }
                checked += 1;
                record(
                    &mut max_residual,
                    &|| EdgeConfiguration::from_mask(m, mask),
                    &residuals,
                );
            }
        }
    }
    let is_fixed_point = max_residual < FIXED_POINT_TOL;
    Ok(EquilibriumReport {
        candidate: theta.to_vec(),
        is_fixed_point,
        max_residual,
        violation: if is_fixed_point { None } else { violation },
        states_checked: checked,
        single_edge_reduction: matches!(mode, DrcCheck::SingleEdge),
    })
}

/// `v_i = +1` where `θ*_i = 0` and `−1` where `θ*_i = π`.
pub fn instability_direction(theta: &[f64]) -> Result<Vec<f64>> {
    theta
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if geodesic_distance(value, 0.0) < IN_SET_TOL {
                Ok(1.0)
            } else if geodesic_distance(value, PI) < IN_SET_TOL {
                Ok(-1.0)
            } else {
                Err(Error::NotInEquilibriumSet { index, value })
            }
        })
        .collect()
}

/// `vᵀ H(θ*, x) v` for the instability direction `v` of `θ*` (or its
/// negative), computed from the energy Hessian and cross-checked against
/// `−2 Σ_{i,j} π(x_i, x_j) 1{θ*_i ≠ θ*_j}`.
pub fn quadratic_form(theta: &[f64], x: &WalkerState, g: &SkeletonGraph, v: &[f64]) -> Result<f64> {
    let dir = instability_direction(theta)?;
    if v.len() != dir.len() {
        return Err(Error::DimensionMismatch {
            expected: dir.len(),
            got: v.len(),
        });
    }
    let plus = v.iter().zip(&dir).all(|(a, b)| a == b);
    let minus = v.iter().zip(&dir).all(|(a, b)| *a == -b);
    if !(plus || minus) {
        return Err(Error::param(
            "v",
            "must be ± the instability direction of θ*",
        ));
    }
    let h = energy_hessian(theta, x, g)?;
    let n = v.len();
    let mut via_hessian = 0.0;
    let mut closed = 0.0;
    for i in 0..n {
        for j in 0..n {
            via_hessian += v[i] * h[(i, j)] * v[j];
            if dir[i] != dir[j] {
                closed += g.weight(x.positions()[i], x.positions()[j]);
            }
        }
    }
    closed *= -2.0;
    if (via_hessian - closed).abs() > 1e-10 {
        return Err(Error::Consistency(format!(
            "Hessian quadratic form {via_hessian} disagrees with closed form {closed}"
        )));
    }
    Ok(via_hessian)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DEFAULT_ENUMERATION_CAP;
    use std::f64::consts::TAU;

    fn p3_loops() -> SkeletonGraph {
        SkeletonGraph::path(3)
            .unwrap()
            .with_self_loops(1.0)
            .unwrap()
    }

    #[test]
    fn candidate_counts() {
        let one = enumerate_candidate_equilibria(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].as_slice(), &[0.0]);
        let two = enumerate_candidate_equilibria(2).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[1].as_slice(), &[0.0, PI]);
        assert_eq!(enumerate_candidate_equilibria(3).unwrap().len(), 4);
        assert!(enumerate_candidate_equilibria(21).is_err());
        assert!(enumerate_candidate_equilibria(0).is_err());
    }

    #[test]
    fn zero_is_fixed_everywhere() {
        for g in [
            p3_loops(),
            SkeletonGraph::complete(3)
                .unwrap()
                .with_self_loops(1.0)
                .unwrap(),
        ] {
            let r = verify_fixed_point_krw(&[0.0; 3], &g, 3, DEFAULT_ENUMERATION_CAP).unwrap();
            assert!(r.is_fixed_point && r.violation.is_none());
            assert_eq!(r.states_checked, 27);
        }
        let r = verify_fixed_point_drc(
            &[0.0; 3],
            &SkeletonGraph::path(3).unwrap(),
            DrcCheck::Exhaustive { cap: 64 },
        )
        .unwrap();
        assert!(r.is_fixed_point);
    }

    #[test]
    fn krw_witness_has_proof_shape() {
        let g = p3_loops();
        let theta = [0.0, 1.0, 0.0];
        let r = verify_fixed_point_krw(&theta, &g, 3, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(!r.is_fixed_point);
        let v = r.violation.unwrap();
        let GraphState::Walkers(x) = v.state else {
            panic!()
        };
        // Missing pair of P3 is (0, 2); oscillators 0 and 1 share vertex 0.
        let pos = x.positions();
        assert_eq!(pos.iter().filter(|&&p| p == 0).count(), 2);
        assert_eq!(pos.iter().filter(|&&p| p == 2).count(), 1);
        assert!((v.residual - 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn antipodal_pair_is_fixed_for_walkers() {
        let r =
            verify_fixed_point_krw(&[0.0, PI], &p3_loops(), 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(r.is_fixed_point);
    }

    #[test]
    fn twisted_state_fails_with_single_edge_witness() {
        let g = SkeletonGraph::wsg(10, 1).unwrap();
        let theta: Vec<f64> = (0..10).map(|u| TAU * u as f64 / 10.0).collect();
        let r = verify_fixed_point_drc(&theta, &g, DrcCheck::SingleEdge).unwrap();
        assert!(!r.is_fixed_point && r.single_edge_reduction);
        let GraphState::Edges(e) = r.violation.unwrap().state else {
            panic!()
        };
        assert_eq!(e.count_on(), 1);
        assert!((r.max_residual - (TAU / 10.0).sin()).abs() < 1e-14);

        let full =
            verify_fixed_point_drc(&theta, &g, DrcCheck::Exhaustive { cap: 1 << 10 }).unwrap();
        assert!(!full.is_fixed_point && !full.single_edge_reduction);
        assert!(verify_fixed_point_drc(&theta, &g, DrcCheck::Exhaustive { cap: 100 }).is_err());
    }

    #[test]
    fn instability_directions() {
        assert_eq!(instability_direction(&[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(instability_direction(&[0.0, PI]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(
            instability_direction(&[0.0, PI, 0.0]).unwrap(),
            vec![1.0, -1.0, 1.0]
        );
        assert_eq!(instability_direction(&[TAU, -PI]).unwrap(), vec![1.0, -1.0]);
        assert!(matches!(
            instability_direction(&[0.0, 1.0]),
            Err(Error::NotInEquilibriumSet { index: 1, .. })
        ));
    }

    #[test]
    fn quadratic_form_examples() {
        let g = p3_loops();
        let x = WalkerState::new(vec![0, 1]);
        assert_eq!(
            quadratic_form(&[0.0, 0.0], &x, &g, &[1.0, 1.0])
                .unwrap()
                .abs(),
            0.0
        );
        let q = quadratic_form(&[0.0, PI], &x, &g, &[1.0, -1.0]).unwrap();
        assert!((q + 4.0).abs() < 1e-12);
        let apart = WalkerState::new(vec![0, 2, 0]);
        let q = quadratic_form(&[0.0, PI, 0.0], &apart, &g, &[1.0, -1.0, 1.0]).unwrap();
        assert!(q.abs() < 1e-12);
        assert!(quadratic_form(&[0.0, PI], &x, &g, &[1.0, 1.0]).is_err());
    }
}
