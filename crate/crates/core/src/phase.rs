//! Torus arithmetic for phase vectors.
//!
//! Integration runs on lifted real coordinates; everything here treats the
//! entries as angles modulo 2π, so callers may pass either lifts or
//! canonical representatives.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Canonical representative of `a` in `[0, 2π)`.
#[inline]
pub fn canonical(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Representative of `a` in `(−π, π]`.
#[inline]
pub fn wrap_to_pi(a: f64) -> f64 {
    let r = canonical(a);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A point on the N-torus, stored as canonical representatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        PhaseVector(phases.into_iter().map(canonical).collect())
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PhaseVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Arc-length distance on the circle, in `[0, π]`.
#[inline]
pub fn geodesic_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Largest pairwise geodesic distance. `θ ∈ Δ(γ)` iff this is `≤ γ`.
pub fn phase_spread(theta: &[f64]) -> f64 {
    let mut spread = 0.0_f64;
    for (i, &a) in theta.iter().enumerate() {
        for &b in &theta[i + 1..] {
            spread = spread.max(geodesic_distance(a, b));
        }
    }
    spread
}

pub fn in_cohesive_set(theta: &[f64], gamma: f64) -> bool {
    phase_spread(theta) <= gamma
}

/// Gauge-fixes a phase vector: picks the lift closest (in ℓ²) to a constant
/// vector and subtracts its mean, so the result sums to zero.
///
/// Candidate lifts cut the circle just below one of the sorted phases;
/// ties in variance go to the lift with the smallest mean.
pub fn center_phases(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    if n == 0 {
        return Vec::new();
    }
    let canon: Vec<f64> = theta.iter().map(|&a| canonical(a)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| canon[i].total_cmp(&canon[j]));

    // Cut k lifts the k smallest phases by 2π.
    let nf = n as f64;
    let mut sum: f64 = canon.iter().sum();
    let mut sumsq: f64 = canon.iter().map(|c| c * c).sum();
    let mut best_k = 0;
    let mut best_var = sumsq / nf - (sum / nf).powi(2);
    for k in 1..n {
        let c = canon[order[k - 1]];
        sum += TAU;
        sumsq += (c + TAU).powi(2) - c * c;
        let var = sumsq / nf - (sum / nf).powi(2);
        if var < best_var - 1e-12 {
            best_var = var;
            best_k = k;
        }
    }
    let mut lifted = canon;
    for &i in &order[..best_k] {
        lifted[i] += TAU;
    }
    let mean = lifted.iter().sum::<f64>() / nf;
    lifted.iter().map(|l| l - mean).collect()
}

/// ℓ∞ distance of the centered phases to the all-in-phase state.
pub fn distance_to_sync(theta: &[f64]) -> f64 {
    center_phases(theta).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Distance between two phase vectors up to a global rotation: the
/// per-coordinate differences, wrapped to `(−π, π]`, are centered and their
/// ℓ∞ norm returned.
pub fn gauge_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| wrap_to_pi(x - y)).collect();
    distance_to_sync(&diff)
}

/// ℓ∞ geodesic distance without gauge fixing.
pub fn geodesic_sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (&x, &y)| m.max(geodesic_distance(x, y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn geodesic_examples() {
        assert_eq!(geodesic_distance(0.0, 0.0), 0.0);
        assert!((geodesic_distance(0.0, 1.5 * PI) - PI / 2.0).abs() < 1e-15);
        assert!((geodesic_distance(FRAC_PI_4, 7.0 * FRAC_PI_4) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn spread_examples() {
        assert_eq!(phase_spread(&[1.3, 1.3, 1.3]), 0.0);
        assert!((phase_spread(&[0.0, FRAC_PI_4, -FRAC_PI_4]) - PI / 2.0).abs() < 1e-15);
        assert!((phase_spread(&[0.0, PI]) - PI).abs() < 1e-15);
    }

    #[test]
    fn centering_examples() {
        let c = center_phases(&[-0.2, 0.2]);
        assert!((c[0] + 0.2).abs() < 1e-15 && (c[1] - 0.2).abs() < 1e-15);
        assert!(center_phases(&[2.5; 4]).iter().all(|v| v.abs() < 1e-15));
        let c = center_phases(&[0.0, PI / 2.0]);
        assert!((c[0] + FRAC_PI_4).abs() < 1e-15 && (c[1] - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn centering_uses_the_short_arc() {
        // Cluster straddling 0: lifts must not split it.
        let c = center_phases(&[0.1, TAU - 0.1, 0.05]);
        assert!(c.iter().all(|v| v.abs() < 0.2));
        assert!(c.iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn canonical_range() {
        assert_eq!(canonical(-1e-18), 0.0);
        assert!((canonical(-PI) - PI).abs() < 1e-15);
        assert!((canonical(TAU + 1.0) - 1.0).abs() < 1e-14);
        let v = PhaseVector::new([-1.0, 7.0]);
        assert!(v.as_slice().iter().all(|&a| (0.0..TAU).contains(&a)));
    }

    proptest! {
        #[test]
        fn geodesic_in_range(a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let d = geodesic_distance(a, b);
            prop_assert!((0.0..=PI + 1e-15).contains(&d));
            prop_assert!((d - geodesic_distance(b, a)).abs() < 1e-12);
        }

        #[test]
        fn centering_is_gauge_invariant(theta in prop::collection::vec(0.0f64..TAU, 1..8), shift in -10.0f64..10.0) {
            let shifted: Vec<f64> = theta.iter().map(|t| t + shift).collect();
            prop_assert!(gauge_distance(&theta, &shifted) < 1e-9);
            let c = center_phases(&theta);
            prop_assert!(c.iter().sum::<f64>().abs() < 1e-9);
            // Centering preserves the point on the torus up to rotation.
            prop_assert!((phase_spread(&c) - phase_spread(&theta)).abs() < 1e-9);
        }
    }
}
