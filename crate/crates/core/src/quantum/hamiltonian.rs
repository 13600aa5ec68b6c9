use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::HermitianMatrix;
use crate::quantum::state::{shannon_entropy, DensityMatrix};

/// Tolerance on the mean energy of a Gibbs state.
pub const GIBBS_TOL: f64 = 1e-10;

const GROUND_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 400;

/// Grounded Hamiltonian, diagonal in the computational basis.
///
/// `spectrum[k]` is the energy of basis vector `|k⟩`. The smallest entry is
/// zero. Entries need not be sorted, so sums `H_A ⊗ 1 + 1 ⊗ H_C` keep the
/// tensor-product basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Hamiltonian {
    spectrum: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Hamiltonian {
    type Error = EcdError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Hamiltonian::new(v)
    }
}

impl From<Hamiltonian> for Vec<f64> {
    fn from(h: Hamiltonian) -> Vec<f64> {
        h.spectrum
    }
}

impl Hamiltonian {
    pub fn new(spectrum: Vec<f64>) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(EcdError::Domain("empty spectrum".into()));
        }
        if spectrum.iter().any(|e| !e.is_finite()) {
            return Err(EcdError::Domain("spectrum has non-finite entries".into()));
        }
        let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        if min.abs() > GROUND_TOL {
            return Err(EcdError::Domain(format!("Hamiltonian is not grounded (minimum energy {min})")));
        }
        Ok(Self { spectrum })
    }

    /// Shifts an arbitrary real spectrum so its minimum is zero.
    pub fn grounded(spectrum: Vec<f64>) -> Result<Self> {
        let min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        Self::new(spectrum.into_iter().map(|e| e - min).collect())
    }

    /// `Σ n |n⟩⟨n|` on `dim` levels.
    pub fn number_operator(dim: usize) -> Self {
        Self { spectrum: (0..dim).map(|n| n as f64).collect() }
    }

    /// `Σ cⁿ |n⟩⟨n|` shifted to be grounded (ground energy `c⁰ − 1 = 0`).
    pub fn geometric(base: f64, dim: usize) -> Result<Self> {
        Self::grounded((0..dim).map(|n| base.powi(n as i32)).collect())
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn max_energy(&self) -> f64 {
        self.spectrum.iter().copied().fold(0.0, f64::max)
    }

    /// Mean energy of the maximally mixed state, the largest mean energy a
    /// Gibbs state with `β ≥ 0` reaches.
    pub fn average_energy(&self) -> f64 {
        self.spectrum.iter().sum::<f64>() / self.dim() as f64
    }

    pub fn matrix(&self) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&self.spectrum)
    }

    /// `H ⊗ 1 + 1 ⊗ other`.
    pub fn sum(&self, other: &Hamiltonian) -> Hamiltonian {
        let spectrum = self.spectrum.iter().flat_map(|&a| other.spectrum.iter().map(move |&b| a + b)).collect();
        Hamiltonian { spectrum }
    }

    /// Spectral projector `{H ≤ e}` as a 0/1 diagonal.
    pub fn projector_below(&self, e: f64) -> HermitianMatrix {
        let d: Vec<f64> = self.spectrum.iter().map(|&x| if x <= e { 1.0 } else { 0.0 }).collect();
        HermitianMatrix::from_real_diagonal(&d)
    }

    /// Dimension of the ground eigenspace.
    pub fn ground_degeneracy(&self) -> usize {
        self.spectrum.iter().filter(|&&x| x.abs() <= GROUND_TOL).count()
    }

    /// Uniform mixture over the ground eigenspace, as probabilities.
    pub fn ground_populations(&self) -> Vec<f64> {
        let n = self.ground_degeneracy() as f64;
        self.spectrum.iter().map(|&x| if x.abs() <= GROUND_TOL { 1.0 / n } else { 0.0 }).collect()
    }

    pub fn ground_state(&self) -> DensityMatrix {
        DensityMatrix::diagonal(&self.ground_populations()).expect("ground populations are normalized")
    }

    /// Mixes `rho` with the ground state just enough to bring its mean energy
    /// down to `e`; states already within budget are returned unchanged.
    pub fn enforce_energy(&self, rho: &DensityMatrix, e: f64) -> Result<DensityMatrix> {
        let current = mean_energy(rho, self)?;
        if current <= e {
            return Ok(rho.clone());
        }
        let t = (current - e) / current;
        DensityMatrix::new(&rho.matrix().scale(1.0 - t) + &self.ground_state().matrix().scale(t))
    }

    fn boltzmann(&self, beta: f64) -> Vec<f64> {
        let w: Vec<f64> = self.spectrum.iter().map(|&x| (-beta * x).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    fn mean_at(&self, beta: f64) -> f64 {
        self.boltzmann(beta).iter().zip(&self.spectrum).map(|(p, x)| p * x).sum()
    }
}

/// `tr(ρH)`.
pub fn mean_energy(rho: &DensityMatrix, h: &Hamiltonian) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(EcdError::DimensionMismatch(format!(
            "state dimension {} vs Hamiltonian dimension {}",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(rho.matrix().diagonal().iter().zip(h.spectrum()).map(|(r, x)| r * x).sum())
}

/// Gibbs state `γ(E) ∝ exp(−βH)`.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub energy: f64,
    pub beta: f64,
    /// Diagonal of the state in the computational basis.
    pub populations: Vec<f64>,
    /// Entropy in bits.
    pub entropy: f64,
}

impl GibbsState {
    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::from_hermitian_unchecked(HermitianMatrix::from_real_diagonal(&self.populations))
    }
}

/// Gibbs state of mean energy `e`, with `β ≥ 0` found by bisection.
///
/// `e = 0` yields the maximally mixed state on the ground eigenspace
/// (`β = ∞`). Energies above [`Hamiltonian::average_energy`] need negative
/// temperature and are rejected.
pub fn gibbs_state(h: &Hamiltonian, e: f64) -> Result<GibbsState> {
    let avg = h.average_energy();
    if !(e >= 0.0) || e > avg + GIBBS_TOL {
        return Err(EcdError::Domain(format!("energy {e} outside the attainable range [0, {avg}]")));
    }
    if e == 0.0 {
        let g = h.ground_degeneracy();
        let populations: Vec<f64> =
            h.spectrum().iter().map(|&x| if x.abs() <= GROUND_TOL { 1.0 / g as f64 } else { 0.0 }).collect();
        return Ok(GibbsState { energy: 0.0, beta: f64::INFINITY, populations, entropy: (g as f64).log2() });
    }
    if e >= avg - GIBBS_TOL {
        let populations = vec![1.0 / h.dim() as f64; h.dim()];
        let entropy = (h.dim() as f64).log2();
        return Ok(GibbsState { energy: avg, beta: 0.0, populations, entropy });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    while h.mean_at(hi) > e {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(EcdError::SolverFailure { residual: h.mean_at(hi) - e });
        }
    }
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        beta = 0.5 * (lo + hi);
        let m = h.mean_at(beta);
        if (m - e).abs() <= GIBBS_TOL || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if m > e {
            lo = beta;
        } else {
            hi = beta;
        }
    }
    let populations = h.boltzmann(beta);
    let entropy = shannon_entropy(&populations);
    Ok(GibbsState { energy: e, beta, populations, entropy })
}

/// Largest entropy (bits) of a state with `tr ρH ≤ e`: the Gibbs entropy below
/// the average energy and `log₂ d` above it.
pub fn max_entropy_at_energy(h: &Hamiltonian, e: f64) -> Result<f64> {
    if !(e >= 0.0) {
        return Err(EcdError::Domain(format!("energy {e} is negative")));
    }
    if e >= h.average_energy() {
        return Ok((h.dim() as f64).log2());
    }
    Ok(gibbs_state(h, e)?.entropy)
}

/// `g(x) = (1+x) log₂(1+x) − x log₂ x`, the entropy in bits of the oscillator
/// Gibbs state with mean photon number `x`.
pub fn g_function(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(EcdError::Domain(format!("g(x) needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // (1+x)ln(1+x) − x ln x = ln(1+x) + x ln(1 + 1/x)
    Ok((x.ln_1p() + x * (1.0 / x).ln_1p()) / std::f64::consts::LN_2)
}

/// Entropy ceiling `S(γ_B(e))` used by the continuity bounds: either a
/// truncated Hamiltonian or the untruncated oscillator (`g`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EntropyModel {
    Truncated { hamiltonian: Hamiltonian },
    AnalyticOscillator,
}

impl EntropyModel {
    pub fn gibbs_entropy(&self, e: f64) -> Result<f64> {
        match self {
            EntropyModel::Truncated { hamiltonian } => max_entropy_at_energy(hamiltonian, e),
            EntropyModel::AnalyticOscillator => g_function(e),
        }
    }
}
