//! Orthogonality witnesses: states `ψ` with `⟨ψ|U_t|ψ⟩ = 0`.
//!
//! `⟨ψ|e^{−itH}|ψ⟩ = Σ_k |c_k|² e^{−itE_k}`, so such a state exists exactly
//! when the origin lies in the convex hull of the phase points
//! `e^{−itE_k}`; by Carathéodory at most three of them are needed.

use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::{trace_norm, HermitianMatrix, C64};

pub const HULL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    pub time: f64,
    pub in_hull: bool,
    /// Weights `p_k` over the spectrum (support ≤ 3; zero when not in hull).
    pub probabilities: Vec<f64>,
    /// `Σ √p_k |k⟩`.
    pub witness_state: Vec<C64>,
    /// `|⟨ψ|U_t|ψ⟩|`.
    pub overlap: f64,
    /// `‖U_t ψ U_t† − ψ‖₁`, computed from the matrices.
    pub trace_distance: f64,
    /// `⟨ψ|H|ψ⟩`.
    pub energy: f64,
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Convex weights on `points` (indices into them) representing the origin,
/// preferring the most interior triangle.
fn hull_weights(points: &[C64]) -> Option<Vec<(usize, f64)>> {
    let n = points.len();
    let residual = |w: &[(usize, f64)]| w.iter().map(|&(k, p)| points[k] * p).sum::<C64>().norm();

    let mut best: Option<(f64, Vec<(usize, f64)>)> = None;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let d = cross(b, c) + cross(c, a) + cross(a, b);
                if d.abs() <= HULL_TOL {
                    continue;
                }
                let l = [cross(b, c) / d, cross(c, a) / d, cross(a, b) / d];
                let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
                if worst < -HULL_TOL {
                    continue;
                }
                if best.as_ref().is_none_or(|(w, _)| worst > *w) {
                    let clamped: Vec<f64> = l.iter().map(|x| x.max(0.0)).collect();
                    let s: f64 = clamped.iter().sum();
                    best = Some((worst, vec![(i, clamped[0] / s), (j, clamped[1] / s), (k, clamped[2] / s)]));
                }
            }
        }
    }
    if let Some((_, w)) = best {
        if residual(&w) <= HULL_TOL {
            return Some(w);
        }
    }

    // collinear case: origin inside a segment between opposite points
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i], points[j]);
            if cross(a, b).abs() <= HULL_TOL && (a.re * b.re + a.im * b.im) < 0.0 {
                let pa = b.norm() / (a.norm() + b.norm());
                let w = vec![(i, pa), (j, 1.0 - pa)];
                if residual(&w) <= HULL_TOL {
                    return Some(w);
                }
            }
        }
    }
    None
}

/// Searches for a state orthogonal to its own evolution under
/// `H = diag(spectrum)` at time `t`. Not finding one is a valid answer.
pub fn orthogonality_witness(spectrum: &[f64], t: f64) -> Result<WitnessResult> {
    if spectrum.is_empty() || spectrum.iter().any(|e| !e.is_finite()) {
        return Err(EcdError::Domain("spectrum must be non-empty and finite".into()));
    }
    let d = spectrum.len();
    let phases: Vec<C64> = spectrum.iter().map(|&e| C64::from_polar(1.0, -t * e)).collect();

    // one representative per distinct phase point
    let mut reps: Vec<usize> = Vec::new();
    for (k, z) in phases.iter().enumerate() {
        if reps.iter().all(|&r| (phases[r] - z).norm() > HULL_TOL) {
            reps.push(k);
        }
    }
    let points: Vec<C64> = reps.iter().map(|&k| phases[k]).collect();

    let mut probabilities = vec![0.0; d];
    let in_hull = match hull_weights(&points) {
        Some(w) => {
            for (idx, p) in w {
                probabilities[reps[idx]] = p;
            }
            true
        }
        None => {
            probabilities[0] = 1.0;
            false
        }
    };

    let witness_state: Vec<C64> = probabilities.iter().map(|&p| C64::new(p.sqrt(), 0.0)).collect();
    let evolved: Vec<C64> = witness_state.iter().zip(&phases).map(|(c, z)| c * z).collect();
    let overlap = witness_state.iter().zip(&evolved).map(|(a, b)| a.conj() * b).sum::<C64>().norm();
    let diff = &HermitianMatrix::projector(&evolved) - &HermitianMatrix::projector(&witness_state);
    let trace_distance = trace_norm(diff.matrix())?;
    let energy = probabilities.iter().zip(spectrum).map(|(p, e)| p * e).sum();

    if !in_hull {
        probabilities[0] = 0.0;
    }
    Ok(WitnessResult { time: t, in_hull, probabilities, witness_state, overlap, trace_distance, energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn qubit_at_pi() {
        let w = orthogonality_witness(&[0.0, 1.0], PI).unwrap();
        assert!(w.in_hull);
        assert!((w.probabilities[0] - 0.5).abs() < 1e-12 && (w.probabilities[1] - 0.5).abs() < 1e-12);
        assert!(w.overlap <= 1e-10);
        assert!((w.trace_distance - 2.0).abs() <= 1e-8);
        assert!((w.energy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn integer_spectrum_is_periodic() {
        let spec: Vec<f64> = (0..8).map(f64::from).collect();
        let w = orthogonality_witness(&spec, 2.0 * PI).unwrap();
        assert!(!w.in_hull);
        assert!(w.trace_distance < 1e-12);
        assert!(w.probabilities.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn qubit_away_from_pi_has_no_witness() {
        assert!(!orthogonality_witness(&[0.0, 1.0], 3.0).unwrap().in_hull);
    }

    #[test]
    fn three_levels_at_random_times() {
        let spec = [0.0, 1.0, 3.0];
        let mut found = 0;
        for k in 1..200 {
            let t = 0.0317 * k as f64;
            let w = orthogonality_witness(&spec, t).unwrap();
            if w.in_hull {
                found += 1;
                assert!(w.overlap <= HULL_TOL);
                assert!((w.trace_distance - 2.0).abs() <= 1e-8);
                assert!(w.probabilities.iter().filter(|&&p| p > 0.0).count() <= 3);
                assert!((w.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                let e: f64 = w.probabilities.iter().zip(&spec).map(|(p, e)| p * e).sum();
                assert!((w.energy - e).abs() < 1e-12);
                assert!(2.0 * (1.0 - w.overlap * w.overlap).sqrt() >= 2.0 - 1e-6);
            }
        }
        assert!(found > 0);
    }
}
