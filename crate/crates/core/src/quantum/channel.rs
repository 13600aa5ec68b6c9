//! Completely positive maps in Kraus form, channels, and Hermitian-preserving
//! maps represented as real-weighted sums of cp maps.
//!
//! The Choi matrix of a map `N: A → B` is
//! `J = Σ_{k,l} N(|k⟩⟨l|) ⊗ |k⟩⟨l|` on `B ⊗ A` (output first).

use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::{c, eig_hermitian, partial_trace, tensor, ComplexMatrix, HermitianMatrix, Subsystem, C64};
use crate::quantum::hamiltonian::Hamiltonian;
use crate::quantum::state::DensityMatrix;

/// Tolerance on `‖Σ K†K − 1‖_∞`.
pub const CPTP_TOL: f64 = 1e-9;
/// Tolerance on the smallest eigenvalue in operator inequalities.
pub const OPERATOR_PSD_TOL: f64 = 1e-9;

/// Completely positive map `X ↦ Σ K X K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    kraus: Vec<ComplexMatrix>,
    dim_in: usize,
    dim_out: usize,
}

impl CpMap {
    pub fn new(kraus: Vec<ComplexMatrix>, dim_in: usize, dim_out: usize) -> Result<Self> {
        for (i, k) in kraus.iter().enumerate() {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(EcdError::DimensionMismatch(format!(
                    "Kraus operator {i} is {}x{}, expected {dim_out}x{dim_in}",
                    k.rows(),
                    k.cols()
                )));
            }
        }
        Ok(Self { kraus, dim_in, dim_out })
    }

    /// Infers dimensions from the first operator.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| EcdError::InvalidChannel("empty Kraus family".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        Self::new(kraus, dim_in, dim_out)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> HermitianMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc = &acc + &(&k.adjoint() * k);
        }
        acc.hermitian_part()
    }

    pub fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            acc = &acc + &(&(k * x) * &k.adjoint());
        }
        acc
    }

    /// Heisenberg picture `N*(Y) = Σ K† Y K`.
    pub fn adjoint_apply(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc = &acc + &(&(&k.adjoint() * y) * k);
        }
        acc
    }

    /// `(N ⊗ id_C)(|ψ⟩⟨ψ|)` for `ψ` on `A ⊗ C`, as the list of vectors
    /// `(K ⊗ 1)ψ`.
    pub fn apply_to_vector(&self, psi: &[C64], dim_ref: usize) -> Vec<Vec<C64>> {
        self.kraus
            .iter()
            .map(|k| {
                let mut out = vec![C64::default(); self.dim_out * dim_ref];
                for b in 0..self.dim_out {
                    for a in 0..self.dim_in {
                        let kba = k.get(b, a);
                        if kba == C64::default() {
                            continue;
                        }
                        for r in 0..dim_ref {
                            out[b * dim_ref + r] += kba * psi[a * dim_ref + r];
                        }
                    }
                }
                out
            })
            .collect()
    }

    pub fn choi(&self) -> HermitianMatrix {
        let n = self.dim_out * self.dim_in;
        let mut acc = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let v = k.to_row_major();
            acc = &acc + &ComplexMatrix::outer(&v, &v);
        }
        acc.hermitian_part()
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &CpMap) -> Result<CpMap> {
        if first.dim_out != self.dim_in {
            return Err(EcdError::DimensionMismatch(format!(
                "cannot compose {}→{} after {}→{}",
                self.dim_in, self.dim_out, first.dim_in, first.dim_out
            )));
        }
        let kraus = self.kraus.iter().flat_map(|a| first.kraus.iter().map(move |b| a * b)).collect();
        CpMap::new(kraus, first.dim_in, self.dim_out)
    }

    pub fn tensor(&self, other: &CpMap) -> Result<CpMap> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(tensor(a, b)?);
            }
        }
        CpMap::new(kraus, self.dim_in * other.dim_in, self.dim_out * other.dim_out)
    }

    /// Kraus family of a positive semidefinite Choi matrix on `B ⊗ A`.
    pub fn from_psd_choi(choi: &HermitianMatrix, dim_in: usize, dim_out: usize) -> Result<CpMap> {
        let e = eig_hermitian(choi)?;
        let scale = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut kraus = Vec::new();
        for (k, &lam) in e.values.iter().enumerate() {
            if lam <= 1e-14 * scale.max(1e-300) {
                continue;
            }
            let v = e.vector(k);
            let s = lam.sqrt();
            kraus.push(ComplexMatrix::from_fn(dim_out, dim_in, |b, a| v[b * dim_in + a] * s));
        }
        CpMap::new(kraus, dim_in, dim_out)
    }
}

/// Affine output-energy bound `N*(H_B) ⪯ α H_A + E₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLimit {
    pub alpha: f64,
    pub e0: f64,
}

/// Quantum channel: a trace-preserving (or, when flagged, trace
/// non-increasing) cp map.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    map: CpMap,
    energy_limit: Option<EnergyLimit>,
    trace_nonincreasing: bool,
}

impl Channel {
    /// Requires `Σ K†K = 1` to [`CPTP_TOL`].
    pub fn new(map: CpMap) -> Result<Self> {
        let residual = completeness_residual(&map);
        if residual > CPTP_TOL {
            return Err(EcdError::InvalidChannel(format!("Kraus completeness residual {residual:.3e}")));
        }
        Ok(Self { map, energy_limit: None, trace_nonincreasing: false })
    }

    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(CpMap::from_kraus(kraus)?)
    }

    /// Requires `Σ K†K ⪯ 1` only.
    pub fn trace_nonincreasing(map: CpMap) -> Result<Self> {
        let defect = &HermitianMatrix::identity(map.dim_in()) - &map.completeness();
        let min = defect.min_eigenvalue()?;
        if min < -CPTP_TOL {
            return Err(EcdError::InvalidChannel(format!("Σ K†K exceeds identity by {:.3e}", -min)));
        }
        Ok(Self { map, energy_limit: None, trace_nonincreasing: true })
    }

    pub fn with_energy_limit(mut self, limit: EnergyLimit) -> Self {
        self.energy_limit = Some(limit);
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::unitary(ComplexMatrix::identity(dim)).expect("identity is unitary")
    }

    /// `ρ ↦ UρU†`.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::from_kraus(vec![u])
    }

    /// `ρ ↦ tr(ρ) σ`.
    pub fn constant(sigma: &DensityMatrix, dim_in: usize) -> Result<Self> {
        let e = eig_hermitian(sigma.matrix())?;
        let dim_out = sigma.dim();
        let mut kraus = Vec::new();
        for (k, &lam) in e.values.iter().enumerate() {
            if lam <= 1e-15 {
                continue;
            }
            let v = e.vector(k);
            for a in 0..dim_in {
                kraus.push(ComplexMatrix::from_fn(dim_out, dim_in, |b, j| {
                    if j == a {
                        v[b] * lam.sqrt()
                    } else {
                        C64::default()
                    }
                }));
            }
        }
        Self::from_kraus(kraus)
    }

    pub fn map(&self) -> &CpMap {
        &self.map
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        self.map.kraus()
    }

    pub fn dim_in(&self) -> usize {
        self.map.dim_in()
    }

    pub fn dim_out(&self) -> usize {
        self.map.dim_out()
    }

    pub fn energy_limit(&self) -> Option<EnergyLimit> {
        self.energy_limit
    }

    pub fn is_trace_nonincreasing(&self) -> bool {
        self.trace_nonincreasing
    }

    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(&self.map)
    }

    pub fn choi(&self) -> HermitianMatrix {
        self.map.choi()
    }

    /// Output operator for an input operator (no normalization).
    pub fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.map.apply_operator(x)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in() {
            return Err(EcdError::DimensionMismatch(format!(
                "state dimension {} vs channel input {}",
                rho.dim(),
                self.dim_in()
            )));
        }
        DensityMatrix::new(self.map.apply_operator(rho.matrix().matrix()).hermitian_part())
    }

    /// `(N ⊗ id_C)ρ` for `ρ` on `A ⊗ C`.
    pub fn apply_extended(&self, rho: &DensityMatrix, dim_ref: usize) -> Result<DensityMatrix> {
        if rho.dim() != self.dim_in() * dim_ref {
            return Err(EcdError::DimensionMismatch(format!(
                "state dimension {} vs {}x{dim_ref}",
                rho.dim(),
                self.dim_in()
            )));
        }
        let ext = self.map.tensor(&CpMap::new(vec![ComplexMatrix::identity(dim_ref)], dim_ref, dim_ref)?)?;
        DensityMatrix::new(ext.apply_operator(rho.matrix().matrix()).hermitian_part())
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &Channel) -> Result<Channel> {
        let map = self.map.compose(&first.map)?;
        if self.trace_nonincreasing || first.trace_nonincreasing {
            Channel::trace_nonincreasing(map)
        } else {
            Channel::new(map)
        }
    }

    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        let map = self.map.tensor(&other.map)?;
        if self.trace_nonincreasing || other.trace_nonincreasing {
            Channel::trace_nonincreasing(map)
        } else {
            Channel::new(map)
        }
    }
}

fn completeness_residual(map: &CpMap) -> f64 {
    (map.completeness().matrix() - &ComplexMatrix::identity(map.dim_in())).max_abs()
}

/// Hermitian-preserving map `Δ = Σ_i w_i N_i` with real weights and cp terms.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianPreservingMap {
    terms: Vec<(f64, CpMap)>,
    dim_in: usize,
    dim_out: usize,
}

impl HermitianPreservingMap {
    pub fn new(terms: Vec<(f64, CpMap)>, dim_in: usize, dim_out: usize) -> Result<Self> {
        for (_, m) in &terms {
            if m.dim_in() != dim_in || m.dim_out() != dim_out {
                return Err(EcdError::DimensionMismatch(format!(
                    "term {}→{} in a {dim_in}→{dim_out} map",
                    m.dim_in(),
                    m.dim_out()
                )));
            }
        }
        Ok(Self { terms, dim_in, dim_out })
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self { terms: vec![], dim_in, dim_out }
    }

    /// `plus − minus`.
    pub fn from_cp_difference(plus: CpMap, minus: CpMap) -> Result<Self> {
        let (di, dout) = (plus.dim_in(), plus.dim_out());
        Self::new(vec![(1.0, plus), (-1.0, minus)], di, dout)
    }

    /// `N₁ − N₂`.
    pub fn difference(n1: &Channel, n2: &Channel) -> Result<Self> {
        Self::weighted_difference(1.0, n1, 1.0, n2)
    }

    /// `p N₁ − q N₂`.
    pub fn weighted_difference(p: f64, n1: &Channel, q: f64, n2: &Channel) -> Result<Self> {
        if n1.dim_in() != n2.dim_in() || n1.dim_out() != n2.dim_out() {
            return Err(EcdError::DimensionMismatch("channels act on different spaces".into()));
        }
        Self::new(vec![(p, n1.map().clone()), (-q, n2.map().clone())], n1.dim_in(), n1.dim_out())
    }

    /// Splits a Hermitian Choi matrix into its positive and negative parts.
    pub fn from_choi(choi: &HermitianMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if choi.dim() != dim_in * dim_out {
            return Err(EcdError::DimensionMismatch(format!(
                "Choi matrix of dimension {} for a {dim_in}→{dim_out} map",
                choi.dim()
            )));
        }
        let e = eig_hermitian(choi)?;
        let pos = e.reconstruct_with(|v| v.max(0.0));
        let neg = e.reconstruct_with(|v| (-v).max(0.0));
        Self::from_cp_difference(
            CpMap::from_psd_choi(&pos, dim_in, dim_out)?,
            CpMap::from_psd_choi(&neg, dim_in, dim_out)?,
        )
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn terms(&self) -> &[(f64, CpMap)] {
        &self.terms
    }

    pub fn scale(&self, k: f64) -> Self {
        let terms = self.terms.iter().map(|(w, m)| (w * k, m.clone())).collect();
        Self { terms, dim_in: self.dim_in, dim_out: self.dim_out }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms, self.dim_in, self.dim_out)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut terms = Vec::new();
        for (w1, m1) in &self.terms {
            for (w2, m2) in &other.terms {
                terms.push((w1 * w2, m1.tensor(m2)?));
            }
        }
        Self::new(terms, self.dim_in * other.dim_in, self.dim_out * other.dim_out)
    }

    /// `Δ ⊗ T` for a channel `T`.
    pub fn tensor_channel(&self, t: &Channel) -> Result<Self> {
        self.tensor(&Self::new(vec![(1.0, t.map().clone())], t.dim_in(), t.dim_out())?)
    }

    pub fn choi(&self) -> HermitianMatrix {
        let n = self.dim_in * self.dim_out;
        let mut acc = HermitianMatrix::zeros(n);
        for (w, m) in &self.terms {
            acc = &acc + &m.choi().scale(*w);
        }
        acc
    }

    pub fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for (w, m) in &self.terms {
            acc = &acc + &m.apply_operator(x).scale(*w);
        }
        acc
    }

    /// `(Δ ⊗ id_C)(|ψ⟩⟨ψ|)` for `ψ` on `A ⊗ C`, evaluated from Kraus operators.
    pub fn apply_to_pure(&self, psi: &[C64], dim_ref: usize) -> HermitianMatrix {
        let n = self.dim_out * dim_ref;
        let mut acc = ComplexMatrix::zeros(n, n);
        for (w, m) in &self.terms {
            for v in m.apply_to_vector(psi, dim_ref) {
                let scaled: Vec<C64> = v.iter().map(|z| z * w.abs().sqrt()).collect();
                let p = ComplexMatrix::outer(&scaled, &scaled);
                acc = if *w >= 0.0 { &acc + &p } else { &acc - &p };
            }
        }
        acc.hermitian_part()
    }

    /// Largest entry of `tr_B J`; zero for differences of trace-preserving maps.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let j = self.choi();
        partial_trace(j.matrix(), (self.dim_out, self.dim_in), Subsystem::Second)
            .map(|r| r.max_abs())
            .unwrap_or(f64::INFINITY)
    }
}

/// Action through the Choi matrix, `N(X) = tr_A[(1 ⊗ Xᵀ) J]`.
pub fn apply_via_choi(choi: &HermitianMatrix, dims: (usize, usize), x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (dim_in, dim_out) = dims;
    let lifted = tensor(&ComplexMatrix::identity(dim_out), &x.transpose())?;
    partial_trace(&(&lifted * choi.matrix()), (dim_out, dim_in), Subsystem::First)
}

/// Smallest eigenvalue of `α H_A + E₀ − N*(H_B)`.
pub fn energy_limit_margin(n: &Channel, h_a: &Hamiltonian, h_b: &Hamiltonian, limit: EnergyLimit) -> Result<f64> {
    check_dims(n, h_a, h_b)?;
    let g = n.map().adjoint_apply(h_b.matrix().matrix()).hermitian_part();
    let m = &(&h_a.matrix().scale(limit.alpha) + &HermitianMatrix::identity(n.dim_in()).scale(limit.e0)) - &g;
    m.min_eigenvalue()
}

fn check_dims(n: &Channel, h_a: &Hamiltonian, h_b: &Hamiltonian) -> Result<()> {
    if h_a.dim() != n.dim_in() || h_b.dim() != n.dim_out() {
        return Err(EcdError::DimensionMismatch(format!(
            "channel {}→{} with Hamiltonians of dimension {} and {}",
            n.dim_in(),
            n.dim_out(),
            h_a.dim(),
            h_b.dim()
        )));
    }
    Ok(())
}

/// Finds `(α, E₀)` with `N*(H_B) ⪯ α H_A + E₀`, certified by a minimum
/// eigenvalue check.
///
/// Candidate slopes, tried in order: the largest diagonal ratio
/// `⟨k|N*(H_B)|k⟩ / ⟨k|H_A|k⟩`, then `1`, then `λ_max(N*(H_B)) / E_min` with
/// `E_min` the smallest positive energy of `H_A`. For each slope the offset
/// runs over `0` and a logarithmic grid up to `λ_max(N*(H_B))`.
pub fn verify_energy_limited(n: &Channel, h_a: &Hamiltonian, h_b: &Hamiltonian) -> Result<EnergyLimit> {
    check_dims(n, h_a, h_b)?;
    let g = n.map().adjoint_apply(h_b.matrix().matrix()).hermitian_part();
    let g_max = eig_hermitian(&g)?.values.last().copied().unwrap_or(0.0).max(0.0);
    let gd = g.diagonal();

    let mut ratio: f64 = 0.0;
    for (k, &e) in h_a.spectrum().iter().enumerate() {
        if e > 0.0 {
            ratio = ratio.max(gd[k] / e);
        }
    }
    let e_min = h_a.spectrum().iter().copied().filter(|&e| e > 0.0).fold(f64::INFINITY, f64::min);
    let mut alphas = vec![ratio, 1.0];
    if e_min.is_finite() {
        alphas.push(g_max / e_min);
    }

    let mut offsets = vec![0.0];
    if g_max > 0.0 {
        let steps = 60;
        for s in 0..=steps {
            offsets.push(g_max * 10f64.powf(-12.0 * (steps - s) as f64 / steps as f64));
        }
    }

    for &alpha in &alphas {
        for &e0 in &offsets {
            let limit = EnergyLimit { alpha, e0 };
            if energy_limit_margin(n, h_a, h_b, limit)? >= -OPERATOR_PSD_TOL {
                return Ok(limit);
            }
        }
    }
    // α = 0, E₀ = λ_max always works; reaching here means λ_max was unstable.
    Err(EcdError::SolverFailure { residual: g_max })
}

/// JSON description of a channel.
///
/// Each Kraus operator is a flat row-major list of `[re, im]` pairs of length
/// `dim_out · dim_in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_limit: Option<EnergyLimit>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub trace_nonincreasing: bool,
}

impl ChannelSpec {
    pub fn from_channel(ch: &Channel) -> Self {
        let kraus = ch.kraus().iter().map(|k| k.to_row_major().iter().map(|z| [z.re, z.im]).collect()).collect();
        Self {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kraus,
            energy_limit: ch.energy_limit(),
            trace_nonincreasing: ch.is_trace_nonincreasing(),
        }
    }

    /// Kraus operators without completeness checks.
    pub fn cp_map(&self) -> Result<CpMap> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| {
                ComplexMatrix::from_row_major(self.dim_out, self.dim_in, k.iter().map(|p| c(p[0], p[1])).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        CpMap::new(kraus, self.dim_in, self.dim_out)
    }

    pub fn to_channel(&self) -> Result<Channel> {
        let map = self.cp_map()?;
        let ch = if self.trace_nonincreasing { Channel::trace_nonincreasing(map)? } else { Channel::new(map)? };
        Ok(match self.energy_limit {
            Some(l) => ch.with_energy_limit(l),
            None => ch,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::state::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn identity_choi_is_unnormalized_bell_projector() {
        let j = Channel::identity(2).choi();
        let phi = [c(1.0, 0.0), C64::default(), C64::default(), c(1.0, 0.0)];
        assert!((j.matrix() - &ComplexMatrix::outer(&phi, &phi)).max_abs() < 1e-15);
        let r = partial_trace(j.matrix(), (2, 2), Subsystem::Second).unwrap();
        assert!((&r - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn depolarizing_choi() {
        // complete depolarization: N(|k⟩⟨l|) = δ_kl 1/2, so J = 1/2 ⊗ 1
        let ch = Channel::constant(&DensityMatrix::maximally_mixed(2), 2).unwrap();
        let expected = tensor(&ComplexMatrix::identity(2).scale(0.5), &ComplexMatrix::identity(2)).unwrap();
        assert!((ch.choi().matrix() - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn self_difference_has_zero_choi() {
        let ch = Channel::unitary(pauli_z()).unwrap();
        let d = HermitianPreservingMap::difference(&ch, &ch).unwrap();
        assert!(d.choi().matrix().max_abs() < 1e-15);
        assert!(d.trace_annihilation_residual() < 1e-15);
    }

    #[test]
    fn kraus_and_choi_actions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = crate::quantum::families::random_channel(3, 2, 3, &mut rng);
        for _ in 0..5 {
            let rho = random_density(3, 3, &mut rng);
            let a = ch.apply(&rho).unwrap();
            let b = apply_via_choi(&ch.choi(), (3, 2), rho.matrix().matrix()).unwrap();
            assert!((a.matrix().matrix() - &b).max_abs() < 1e-12);
        }
    }

    #[test]
    fn from_choi_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n1 = crate::quantum::families::random_channel(2, 2, 2, &mut rng);
        let n2 = crate::quantum::families::random_channel(2, 2, 2, &mut rng);
        let d = HermitianPreservingMap::difference(&n1, &n2).unwrap();
        let back = HermitianPreservingMap::from_choi(&d.choi(), 2, 2).unwrap();
        assert!((back.choi().matrix() - d.choi().matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn apply_to_pure_matches_choi_congruence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n1 = crate::quantum::families::random_channel(2, 3, 2, &mut rng);
        let n2 = crate::quantum::families::random_channel(2, 3, 3, &mut rng);
        let d = HermitianPreservingMap::difference(&n1, &n2).unwrap();
        let rho = random_density(2, 2, &mut rng);
        // (√ρ ⊗ 1)|Φ⟩ gives (1 ⊗ √ρᵀ) J (1 ⊗ √ρᵀ)
        let psi = rho.purification().unwrap();
        let out = d.apply_to_pure(&psi, 2);
        let sqrt_t =
            crate::matrix::eig_hermitian(rho.transpose().matrix()).unwrap().reconstruct_with(|v| v.max(0.0).sqrt());
        let s = tensor(&ComplexMatrix::identity(3), sqrt_t.matrix()).unwrap();
        let expected = d.choi().congruence(&s);
        assert!((out.matrix() - expected.matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn channel_rejects_incomplete_kraus() {
        let k = ComplexMatrix::identity(2).scale(0.9);
        assert!(Channel::from_kraus(vec![k.clone()]).is_err());
        let ch = Channel::trace_nonincreasing(CpMap::from_kraus(vec![k]).unwrap()).unwrap();
        assert!(ch.is_trace_nonincreasing());
        assert!(Channel::trace_nonincreasing(CpMap::from_kraus(vec![ComplexMatrix::identity(2).scale(1.1)]).unwrap())
            .is_err());
    }

    #[test]
    fn energy_limit_examples() {
        let h = Hamiltonian::number_operator(4);
        let id = Channel::identity(4);
        assert_eq!(verify_energy_limited(&id, &h, &h).unwrap(), EnergyLimit { alpha: 1.0, e0: 0.0 });
        let vac = Channel::constant(&DensityMatrix::basis(4, 0), 4).unwrap();
        assert_eq!(verify_energy_limited(&vac, &h, &h).unwrap(), EnergyLimit { alpha: 0.0, e0: 0.0 });
        // a bit flip on a qubit needs an offset
        let x = ComplexMatrix::from_row_major(2, 2, vec![C64::default(), c(1.0, 0.0), c(1.0, 0.0), C64::default()])
            .unwrap();
        let flip = Channel::unitary(x).unwrap();
        let hq = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let lim = verify_energy_limited(&flip, &hq, &hq).unwrap();
        assert!(energy_limit_margin(&flip, &hq, &hq, lim).unwrap() >= -OPERATOR_PSD_TOL);
        assert!(lim.e0 > 0.0);
    }

    #[test]
    fn spec_json_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let ch = crate::quantum::families::random_channel(2, 3, 2, &mut rng)
            .with_energy_limit(EnergyLimit { alpha: 0.1 + 0.2, e0: 1.0 / 3.0 });
        let spec = ChannelSpec::from_channel(&ch);
        let text = spec.to_json().unwrap();
        let back = ChannelSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.to_channel().unwrap(), ch);
    }

    #[test]
    fn spec_json_layout() {
        let spec = ChannelSpec::from_channel(&Channel::identity(1));
        let v: serde_json::Value = serde_json::from_str(&spec.to_json().unwrap()).unwrap();
        assert_eq!(v, serde_json::json!({"dim_in": 1, "dim_out": 1, "kraus": [[[1.0, 0.0]]]}));
    }
}
