use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::{
    c, eig_hermitian, partial_trace_hermitian, tensor, ComplexMatrix, HermitianMatrix, Subsystem, C64,
};

/// Tolerance on the smallest eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-9;
/// Tolerance on `|tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-9;
/// Largest acceptable tail mass of a truncated coherent state.
pub const COHERENT_TAIL_TOL: f64 = 1e-6;

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(mat: HermitianMatrix) -> Result<Self> {
        let tr = mat.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(EcdError::Domain(format!("density matrix trace {tr} differs from 1")));
        }
        let min = mat.min_eigenvalue()?;
        if min < -PSD_TOL {
            return Err(EcdError::Domain(format!("density matrix has negative eigenvalue {min:.3e}")));
        }
        Ok(Self { mat })
    }

    /// Normalizes `psi` and returns its projector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EcdError::Domain("state vector has zero or non-finite norm".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self { mat: HermitianMatrix::projector(&v) })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![C64::default(); dim];
        v[k] = c(1.0, 0.0);
        Self { mat: HermitianMatrix::projector(&v) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { mat: HermitianMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(probs))
    }

    pub(crate) fn from_hermitian_unchecked(mat: HermitianMatrix) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.mat
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.mat
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(&self.mat)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(Self { mat: tensor(self.mat.matrix(), other.mat.matrix())?.hermitian_part() })
    }

    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<DensityMatrix> {
        Ok(Self { mat: partial_trace_hermitian(&self.mat, dims, keep)? })
    }

    pub fn transpose(&self) -> DensityMatrix {
        Self { mat: self.mat.matrix().transpose().hermitian_part() }
    }

    /// Canonical purification `(√ρ ⊗ 1)|Φ⟩` on `A ⊗ A′`.
    pub fn purification(&self) -> Result<Vec<C64>> {
        let d = self.dim();
        let sqrt = eig_hermitian(&self.mat)?.reconstruct_with(|v| v.max(0.0).sqrt());
        let mut psi = vec![C64::default(); d * d];
        for i in 0..d {
            for k in 0..d {
                psi[i * d + k] = sqrt.get(i, k);
            }
        }
        Ok(psi)
    }
}

fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Von Neumann entropy `−tr ρ log₂ ρ` with `0 log 0 = 0`. Negative
/// eigenvalues from round-off are clipped.
pub fn von_neumann_entropy(rho: &HermitianMatrix) -> Result<f64> {
    let e = eig_hermitian(rho)?;
    Ok(entropy_of_spectrum(&e.values))
}

/// Shannon entropy of a probability vector in bits.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    entropy_of_spectrum(probs)
}

/// `S(B|C) = S(BC) − S(C)` in bits for a state on `B ⊗ C`.
pub fn conditional_entropy(omega: &DensityMatrix, dims: (usize, usize)) -> Result<f64> {
    let (db, dc) = dims;
    if omega.dim() != db * dc {
        return Err(EcdError::DimensionMismatch(format!(
            "state of dimension {} is not on a {db}x{dc} system",
            omega.dim()
        )));
    }
    let s_bc = omega.entropy()?;
    let s_c = omega.partial_trace(dims, Subsystem::Second)?.entropy()?;
    Ok(s_bc - s_c)
}

/// Truncated coherent state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoherentState {
    pub amplitudes: Vec<C64>,
    /// `1 − Σ_{n<d} |⟨n|α⟩|²` before renormalization.
    pub tail_mass: f64,
    /// Set when `tail_mass` exceeds [`COHERENT_TAIL_TOL`].
    pub tail_warning: bool,
}

impl CoherentState {
    pub fn state(&self) -> DensityMatrix {
        DensityMatrix { mat: HermitianMatrix::projector(&self.amplitudes) }
    }
}

/// Coherent state `|α⟩` on the first `dim` Fock levels, renormalized.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<CoherentState> {
    if dim == 0 {
        return Err(EcdError::Domain("coherent state needs dim >= 1".into()));
    }
    let mut amps = Vec::with_capacity(dim);
    let mut a = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            a = a * alpha / (n as f64).sqrt();
        }
        amps.push(a);
    }
    let mass: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let tail_mass = (1.0 - mass).max(0.0);
    let norm = mass.sqrt();
    let amplitudes = amps.into_iter().map(|z| z / norm).collect();
    Ok(CoherentState { amplitudes, tail_mass, tail_warning: tail_mass > COHERENT_TAIL_TOL })
}

/// Samples a Haar-random pure state vector.
pub fn random_pure_vector(dim: usize, rng: &mut impl rand::Rng) -> Vec<C64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut v: Vec<C64> = (0..dim).map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Samples a random mixed state of the given rank (Hilbert–Schmidt measure for
/// full rank).
pub fn random_density(dim: usize, rank: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let g = ComplexMatrix::from_fn(dim, rank.max(1), |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let m = (&g * &g.adjoint()).hermitian_part();
    let tr = m.trace();
    DensityMatrix { mat: m.scale(1.0 / tr) }
}
