//! Brute-force lower bound on `‖Δ‖⋄E` by direct search over pure probes.
//!
//! Shares nothing with the SDP path except the map itself: probes
//! `ψ = Σ_k √λ_k U|k⟩ ⊗ |k⟩` are enumerated over a simplex grid of Schmidt
//! coefficients `λ` times a set of local unitaries `U = exp(−iG)`, energy
//! violations are repaired by mixing the marginal with the ground state, and
//! the best grid points are refined with Nelder–Mead.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::{trace_norm, ComplexMatrix, HermitianMatrix, C64};
use crate::quantum::families::exp_i_hermitian;
use crate::quantum::{DensityMatrix, Hamiltonian, HermitianPreservingMap};

/// Largest `d_A` and `d_B` accepted by [`brute_force_oracle`].
pub const ORACLE_DIM_CAP: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Schmidt coefficients are multiples of `1/resolution`.
    pub resolution: usize,
    /// Number of local unitaries on the grid (the identity is always included).
    pub unitaries: usize,
    /// Grid points refined by Nelder–Mead.
    pub starts: usize,
    pub max_iters: u64,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { resolution: 8, unitaries: 48, starts: 12, max_iters: 4000, seed: 7 }
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Best `‖(Δ ⊗ id)(ψ)‖₁` found; always a valid lower bound on the norm.
    pub value: f64,
    /// Input marginal of the best probe.
    pub probe: DensityMatrix,
    pub evaluations: usize,
}

struct Search<'a> {
    delta: &'a HermitianPreservingMap,
    h: &'a Hamiltonian,
    energy: Option<f64>,
    dim: usize,
}

impl Search<'_> {
    /// Parameters: `d` Schmidt logits followed by the `d²` real coordinates of `G`.
    fn marginal(&self, x: &[f64]) -> Result<DensityMatrix> {
        let d = self.dim;
        let m = x[..d].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = x[..d].iter().map(|v| (v - m).exp()).collect();
        let z: f64 = w.iter().sum();
        let lambda: Vec<f64> = w.iter().map(|v| v / z).collect();
        let u = exp_i_hermitian(&generator(d, &x[d..]))?;
        let diag = ComplexMatrix::from_real_diagonal(&lambda);
        let rho = DensityMatrix::new((&(&u * &diag) * &u.adjoint()).hermitian_part())?;
        match self.energy {
            Some(e) => self.h.enforce_energy(&rho, e),
            None => Ok(rho),
        }
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let rho = self.marginal(x)?;
        let psi = rho.purification()?;
        let out = self.delta.apply_to_pure(&psi, self.dim);
        trace_norm(out.matrix())
    }
}

impl CostFunction for Search<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        Ok(-self.value(x).unwrap_or(0.0))
    }
}

fn generator(d: usize, g: &[f64]) -> HermitianMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for (k, &gk) in g.iter().enumerate().take(d) {
        m.set(k, k, C64::new(gk, 0.0));
    }
    let mut idx = d;
    for k in 0..d {
        for l in k + 1..d {
            let v = C64::new(g[idx], g[idx + 1]);
            m.set(k, l, v);
            m.set(l, k, v.conj());
            idx += 2;
        }
    }
    m.hermitian_part()
}

/// All `λ` on the simplex with entries in `{0, 1/r, …, 1}`.
fn simplex_grid(d: usize, r: usize) -> Vec<Vec<f64>> {
    fn rec(d: usize, left: usize, r: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == d - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / r as f64).collect());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(d, left - k, r, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, r, r, &mut Vec::new(), &mut out);
    out
}

/// Searches pure probes on `A ⊗ A′` for the largest `‖(Δ ⊗ id)(ψ)‖₁` with
/// `tr ψ^A H ≤ e` (`e = None` drops the energy filter).
pub fn brute_force_oracle(
    delta: &HermitianPreservingMap,
    h: &Hamiltonian,
    energy: Option<f64>,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let d = delta.dim_in();
    if d > ORACLE_DIM_CAP || delta.dim_out() > ORACLE_DIM_CAP {
        return Err(EcdError::Capacity { dim: d.max(delta.dim_out()), budget: ORACLE_DIM_CAP });
    }
    if h.dim() != d {
        return Err(EcdError::DimensionMismatch(format!(
            "Hamiltonian of dimension {} for input dimension {d}",
            h.dim()
        )));
    }
    if let Some(e) = energy {
        if !(e > 0.0) {
            return Err(EcdError::Domain(format!("energy bound must be positive, got {e}")));
        }
    }
    let search = Search { delta, h, energy, dim: d };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut generators = vec![vec![0.0; d * d]];
    for _ in 0..opts.unitaries {
        generators.push((0..d * d).map(|_| std::f64::consts::PI * rng.sample::<f64, _>(StandardNormal)).collect());
    }
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    for lambda in simplex_grid(d, opts.resolution.max(1)) {
        let logits: Vec<f64> = lambda.iter().map(|&l| l.max(1e-6).ln()).collect();
        for g in &generators {
            let x: Vec<f64> = logits.iter().chain(g).copied().collect();
            scored.push((search.value(&x)?, x));
        }
    }
    let mut evaluations = scored.len();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let refined = scored
        .par_iter()
        .take(opts.starts.max(1))
        .map(|(_, start)| -> Result<(f64, Vec<f64>, usize)> {
            let mut x = start.clone();
            let mut evals = 0;
            // restarted simplices of shrinking size
            for round in 0..4 {
                let step = 0.5 * 0.3f64.powi(round);
                let mut simplex = vec![x.clone()];
                for k in 0..x.len() {
                    let mut v = x.clone();
                    v[k] += step;
                    simplex.push(v);
                }
                let solver =
                    NelderMead::new(simplex).with_sd_tolerance(1e-12).map_err(|e| EcdError::Domain(e.to_string()))?;
                let res = Executor::new(Search { delta, h, energy, dim: d }, solver)
                    .configure(|s| s.max_iters(opts.max_iters))
                    .run()
                    .map_err(|e| EcdError::Domain(e.to_string()))?;
                let state = res.state();
                evals += state.get_iter() as usize;
                if let Some(p) = state.get_best_param() {
                    x = p.clone();
                }
            }
            Ok((search.value(&x)?, x, evals))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = scored[0].clone();
    for (v, x, evals) in refined {
        evaluations += evals;
        if v > best.0 {
            best = (v, x);
        }
    }

    let probe = search.marginal(&best.1)?;
    Ok(OracleResult { value: best.0, probe, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{phase_flip, unitary_evolution, Channel};

    fn qubit() -> Hamiltonian {
        Hamiltonian::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(2, 4).len(), 5);
        assert_eq!(simplex_grid(3, 8).len(), 45);
        assert!(simplex_grid(3, 8).iter().all(|l| (l.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn zero_map() {
        let id = Channel::identity(2);
        let delta = HermitianPreservingMap::difference(&id, &id).unwrap();
        let r = brute_force_oracle(&delta, &qubit(), Some(0.5), &OracleOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn phase_flip_values() {
        let delta = HermitianPreservingMap::difference(&phase_flip(), &Channel::identity(2)).unwrap();
        let r = brute_force_oracle(&delta, &qubit(), Some(0.5), &OracleOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-6);
        let r = brute_force_oracle(&delta, &qubit(), Some(0.25), &OracleOptions::default()).unwrap();
        assert!((r.value - 4.0 * (0.1875f64).sqrt()).abs() < 1e-6);
        assert!(r.probe.matrix().inner_product(&qubit().matrix()) <= 0.25 + 1e-12);
    }

    #[test]
    fn large_energy_matches_unconstrained() {
        let h = qubit();
        let delta = HermitianPreservingMap::difference(&unitary_evolution(&h, 1.3), &Channel::identity(2)).unwrap();
        let a = brute_force_oracle(&delta, &h, Some(5.0), &OracleOptions::default()).unwrap();
        let b = brute_force_oracle(&delta, &h, None, &OracleOptions::default()).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);
        assert!((b.value - 2.0 * (0.65f64).sin()).abs() < 1e-6);
    }

    #[test]
    fn rejects_large_dims() {
        let id = Channel::identity(4);
        let delta = HermitianPreservingMap::difference(&id, &id).unwrap();
        assert!(
            brute_force_oracle(&delta, &Hamiltonian::number_operator(4), Some(1.0), &OracleOptions::default()).is_err()
        );
    }
}
