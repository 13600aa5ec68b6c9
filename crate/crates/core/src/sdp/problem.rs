use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::HermitianMatrix;
use crate::quantum::{Hamiltonian, HermitianPreservingMap, CPTP_TOL};
use crate::sdp::blocks::{choi_blocks, split_dense, BlockHermitian};

/// Which semidefinite program is solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `max tr JV  s.t. −1⊗ρ ⪯ V ⪯ 1⊗ρ`; the objective is the norm itself.
    General,
    /// `max tr JW  s.t. 0 ⪯ W ⪯ 1⊗ρ` for trace-annihilating maps; the
    /// objective is half the norm.
    CptpDifference,
}

impl Mode {
    /// Factor converting SDP objective values to norm values.
    pub fn norm_factor(self) -> f64 {
        match self {
            Mode::General => 1.0,
            Mode::CptpDifference => 2.0,
        }
    }
}

/// Energy-constrained diamond norm instance.
///
/// `choi` is the Choi matrix on `B ⊗ A`. The Hamiltonian is diagonal, so the
/// computational basis is already its eigenbasis. `energy = None` drops the
/// energy constraint (plain diamond norm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcdProblem {
    pub choi: BlockHermitian,
    /// The Choi matrix commutes with the sector charge, so a diagonal probe
    /// marginal is optimal.
    pub structured: bool,
    pub hamiltonian: Hamiltonian,
    pub energy: Option<f64>,
    pub mode: Mode,
    /// `(d_A, d_B)`.
    pub dims: (usize, usize),
}

impl EcdProblem {
    pub fn dim_in(&self) -> usize {
        self.dims.0
    }

    pub fn dim_out(&self) -> usize {
        self.dims.1
    }

    /// Whether `energy` actually restricts the probe.
    pub fn energy_binding(&self) -> bool {
        match self.energy {
            Some(e) => e < self.hamiltonian.max_energy(),
            None => false,
        }
    }

    /// Same problem with the sector structure forgotten, so the solver
    /// optimizes over all reference marginals.
    pub fn densified(&self) -> Self {
        Self { choi: BlockHermitian::dense(self.choi.to_dense()), structured: false, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn finish(
    choi: BlockHermitian,
    structured: bool,
    h: &Hamiltonian,
    energy: Option<f64>,
    dims: (usize, usize),
) -> Result<EcdProblem> {
    let (di, _) = dims;
    if h.dim() != di {
        return Err(EcdError::DimensionMismatch(format!(
            "Hamiltonian of dimension {} for a map with input dimension {di}",
            h.dim()
        )));
    }
    if let Some(e) = energy {
        if !(e > 0.0) || !e.is_finite() {
            return Err(EcdError::Domain(format!("energy bound must be positive and finite, got {e}")));
        }
    }
    let residual = choi.partial_trace_output(di).matrix().max_abs();
    let mode = if residual <= CPTP_TOL { Mode::CptpDifference } else { Mode::General };
    Ok(EcdProblem { choi, structured, hamiltonian: h.clone(), energy, mode, dims })
}

/// Builds the SDP for `‖Δ‖⋄E` with respect to `h` on the input.
pub fn assemble(delta: &HermitianPreservingMap, h: &Hamiltonian, e: f64) -> Result<EcdProblem> {
    let (choi, structured) = choi_blocks(delta)?;
    finish(choi, structured, h, Some(e), (delta.dim_in(), delta.dim_out()))
}

/// Builds the SDP for the unconstrained diamond norm `‖Δ‖⋄`.
pub fn assemble_unconstrained(delta: &HermitianPreservingMap, h: &Hamiltonian) -> Result<EcdProblem> {
    let (choi, structured) = choi_blocks(delta)?;
    finish(choi, structured, h, None, (delta.dim_in(), delta.dim_out()))
}

/// Builds the SDP from a Choi matrix on `B ⊗ A`.
pub fn assemble_from_choi(
    choi: &HermitianMatrix,
    dims: (usize, usize),
    h: &Hamiltonian,
    energy: Option<f64>,
) -> Result<EcdProblem> {
    if choi.dim() != dims.0 * dims.1 {
        return Err(EcdError::DimensionMismatch(format!(
            "Choi matrix of dimension {} for dims {:?}",
            choi.dim(),
            dims
        )));
    }
    let (blocks, structured) = split_dense(choi, dims.0);
    finish(blocks, structured, h, energy, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{phase_flip, random_hermitian_preserving, unitary_evolution, Channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modes_are_detected() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let id = Channel::identity(2);
        let zero = HermitianPreservingMap::difference(&id, &id).unwrap();
        assert_eq!(assemble(&zero, &h, 1.0).unwrap().mode, Mode::CptpDifference);

        let u = unitary_evolution(&h, 0.7);
        let p = assemble(&HermitianPreservingMap::difference(&u, &id).unwrap(), &h, 0.5).unwrap();
        assert_eq!(p.mode, Mode::CptpDifference);
        assert!(p.structured);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = assemble(&random_hermitian_preserving(2, 2, &mut rng), &h, 0.5).unwrap();
        assert_eq!(r.mode, Mode::General);

        let weighted = HermitianPreservingMap::weighted_difference(0.7, &phase_flip(), 0.3, &id).unwrap();
        assert_eq!(assemble(&weighted, &h, 0.5).unwrap().mode, Mode::General);
    }

    #[test]
    fn rejects_bad_energy_and_dims() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let id = Channel::identity(2);
        let zero = HermitianPreservingMap::difference(&id, &id).unwrap();
        assert!(assemble(&zero, &h, 0.0).is_err());
        assert!(assemble(&zero, &h, -1.0).is_err());
        assert!(assemble(&zero, &Hamiltonian::number_operator(3), 1.0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let p = assemble(&HermitianPreservingMap::difference(&phase_flip(), &Channel::identity(2)).unwrap(), &h, 0.5)
            .unwrap();
        let back = EcdProblem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
