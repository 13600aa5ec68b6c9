//! Concrete channel families on truncated Fock spaces and random maps.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{EcdError, Result};
use crate::matrix::{c, eig_hermitian, ComplexMatrix, HermitianMatrix, C64};
use crate::quantum::channel::{Channel, CpMap, EnergyLimit, HermitianPreservingMap};
use crate::quantum::hamiltonian::Hamiltonian;
use crate::quantum::state::coherent_state;

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Quantum-limited attenuator with amplitude transmission `eta` on the first
/// `dim` Fock levels.
///
/// Kraus operators `K_k = Σ_n √C(n,k) η^{n−k} (1−η²)^{k/2} |n−k⟩⟨n|`. The
/// map never raises photon number, so the truncated family is exactly
/// trace preserving. The channel carries its energy limit `(η², 0)` for the
/// number Hamiltonian.
pub fn attenuator(eta: f64, dim: usize) -> Result<Channel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(EcdError::Domain(format!("attenuator needs eta in [0, 1], got {eta}")));
    }
    if dim == 0 {
        return Err(EcdError::Domain("attenuator needs dim >= 1".into()));
    }
    let lf = ln_factorials(dim);
    let loss = 1.0 - eta * eta;
    let mut kraus = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut m = ComplexMatrix::zeros(dim, dim);
        let mut nonzero = false;
        for n in k..dim {
            let binom = (0.5 * (lf[n] - lf[k] - lf[n - k])).exp();
            let amp = binom * eta.powi((n - k) as i32) * loss.powf(k as f64 / 2.0);
            if amp != 0.0 {
                m.set(n - k, n, c(amp, 0.0));
                nonzero = true;
            }
        }
        if nonzero {
            kraus.push(m);
        }
    }
    Ok(Channel::from_kraus(kraus)?.with_energy_limit(EnergyLimit { alpha: eta * eta, e0: 0.0 }))
}

/// `U_t = exp(−itH)`, diagonal in the Hamiltonian's basis.
pub fn evolution_operator(h: &Hamiltonian, t: f64) -> ComplexMatrix {
    let phases: Vec<C64> = h.spectrum().iter().map(|&e| C64::from_polar(1.0, -t * e)).collect();
    let n = phases.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { phases[i] } else { C64::default() })
}

/// Unitary evolution channel `ρ ↦ U_t ρ U_t†`.
pub fn unitary_evolution(h: &Hamiltonian, t: f64) -> Channel {
    Channel::unitary(evolution_operator(h, t)).expect("diagonal phases are unitary")
}

/// `exp(−iG)` for Hermitian `G`.
pub fn exp_i_hermitian(g: &HermitianMatrix) -> Result<ComplexMatrix> {
    let e = eig_hermitian(g)?;
    let v = e.vectors.as_dmatrix();
    let n = v.nrows();
    let mut scaled = v.clone();
    for (k, &lam) in e.values.iter().enumerate() {
        let ph = C64::from_polar(1.0, -lam);
        for i in 0..n {
            scaled[(i, k)] *= ph;
        }
    }
    Ok(ComplexMatrix::from_dmatrix(scaled * v.adjoint()))
}

/// Annihilation operator on `dim` levels.
pub fn annihilation(dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { C64::default() })
}

/// Truncated unitary together with a measure of its truncation error.
#[derive(Clone, Debug)]
pub struct TruncatedUnitary {
    pub channel: Channel,
    /// Norm of the difference between the truncated operator applied to the
    /// vacuum and the exact (truncated, renormalized) target state.
    pub truncation_error: f64,
}

/// Displacement `exp(α a† − ᾱ a)` with the truncated ladder operators.
pub fn displacement(alpha: C64, dim: usize) -> Result<TruncatedUnitary> {
    let a = annihilation(dim);
    // α a† − ᾱ a = −i G with G = i(α a† − ᾱ a)
    let gen = &a.adjoint().scale_complex(alpha) - &a.scale_complex(alpha.conj());
    let g = gen.scale_complex(c(0.0, 1.0)).hermitian_part();
    let u = exp_i_hermitian(&g)?;
    let target = coherent_state(alpha, dim)?;
    let col: Vec<C64> = (0..dim).map(|i| u.get(i, 0)).collect();
    let err = col.iter().zip(&target.amplitudes).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    Ok(TruncatedUnitary { channel: Channel::unitary(u)?, truncation_error: err })
}

/// Single-mode squeezer `exp(½(r a² − r a†²))` with real `r`.
pub fn squeezing(r: f64, dim: usize) -> Result<TruncatedUnitary> {
    let a = annihilation(dim);
    let a2 = &a * &a;
    let gen = &a2.scale(0.5 * r) - &a2.adjoint().scale(0.5 * r);
    let g = gen.scale_complex(c(0.0, 1.0)).hermitian_part();
    let u = exp_i_hermitian(&g)?;
    // exact squeezed vacuum: c_{2m} = (−tanh r)^m √((2m)!)/(2^m m!) / √cosh r
    let lf = ln_factorials(dim);
    let th = r.tanh();
    let mut target = vec![C64::default(); dim];
    for m in 0..dim.div_ceil(2) {
        let n = 2 * m;
        if n >= dim {
            break;
        }
        let mag = (0.5 * lf[n] - m as f64 * 2f64.ln() - lf[m]).exp() * th.abs().powi(m as i32) / r.cosh().sqrt();
        let sign = if th > 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        target[n] = c(sign * mag, 0.0);
    }
    let norm = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let err = (0..dim).map(|i| (u.get(i, 0) - target[i] / norm).norm_sqr()).sum::<f64>().sqrt();
    Ok(TruncatedUnitary { channel: Channel::unitary(u)?, truncation_error: err })
}

/// Qubit phase flip `ρ ↦ ZρZ`.
pub fn phase_flip() -> Channel {
    Channel::unitary(ComplexMatrix::from_real_diagonal(&[1.0, -1.0])).expect("Z is unitary")
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
}

/// Random channel with `kraus_count` Kraus operators: a Gaussian isometry
/// `A → B ⊗ E` orthonormalized through `(G†G)^{-1/2}`.
pub fn random_channel(dim_in: usize, dim_out: usize, kraus_count: usize, rng: &mut impl Rng) -> Channel {
    let g = gaussian_matrix(dim_out * kraus_count, dim_in, rng);
    let gram = (&g.adjoint() * &g).hermitian_part();
    let inv_sqrt = eig_hermitian(&gram).expect("Gram matrix is Hermitian").reconstruct_with(|v| 1.0 / v.sqrt());
    let v = &g * inv_sqrt.matrix();
    let kraus =
        (0..kraus_count).map(|e| ComplexMatrix::from_fn(dim_out, dim_in, |b, a| v.get(e * dim_out + b, a))).collect();
    Channel::from_kraus(kraus).expect("isometry gives a complete Kraus family")
}

/// Random cp map with Gaussian Kraus operators scaled by `1/√(d_in·count)`.
pub fn random_cp_map(dim_in: usize, dim_out: usize, kraus_count: usize, rng: &mut impl Rng) -> CpMap {
    let s = 1.0 / ((dim_in * kraus_count) as f64).sqrt();
    let kraus = (0..kraus_count).map(|_| gaussian_matrix(dim_out, dim_in, rng).scale(s)).collect();
    CpMap::new(kraus, dim_in, dim_out).expect("shapes match")
}

/// Random Hermitian-preserving map: difference of two random cp maps.
pub fn random_hermitian_preserving(dim_in: usize, dim_out: usize, rng: &mut impl Rng) -> HermitianPreservingMap {
    let plus = random_cp_map(dim_in, dim_out, 2, rng);
    let minus = random_cp_map(dim_in, dim_out, 2, rng);
    HermitianPreservingMap::from_cp_difference(plus, minus).expect("shapes match")
}

/// Random trace-annihilating map `N₁ − N₂` of two random channels.
pub fn random_channel_difference(dim_in: usize, dim_out: usize, rng: &mut impl Rng) -> HermitianPreservingMap {
    let n1 = random_channel(dim_in, dim_out, 2, rng);
    let n2 = random_channel(dim_in, dim_out, 2, rng);
    HermitianPreservingMap::difference(&n1, &n2).expect("shapes match")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::channel::{verify_energy_limited, CPTP_TOL};
    use crate::quantum::state::DensityMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn attenuator_is_exactly_trace_preserving() {
        for &eta in &[0.0, 0.3, 0.6, 0.9, 1.0] {
            for &d in &[1, 2, 8, 32] {
                let ch = attenuator(eta, d).unwrap();
                assert!(ch.completeness_residual() <= CPTP_TOL, "eta={eta} d={d}");
            }
        }
        assert!(attenuator(1.2, 4).is_err());
        assert!(attenuator(-0.1, 4).is_err());
    }

    #[test]
    fn attenuator_endpoints() {
        let d = 6;
        let id = attenuator(1.0, d).unwrap();
        assert!((id.choi().matrix() - Channel::identity(d).choi().matrix()).max_abs() < 1e-14);
        let vac = attenuator(0.0, d).unwrap();
        for k in 0..d {
            let out = vac.apply(&DensityMatrix::basis(d, k)).unwrap();
            assert!((out.matrix().get(0, 0).re - 1.0).abs() < 1e-14);
        }
        let mid = attenuator(0.7, d).unwrap();
        let out = mid.apply(&DensityMatrix::basis(d, 0)).unwrap();
        assert!((out.matrix().get(0, 0).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn attenuator_maps_coherent_states() {
        let d = 50;
        let eta = 0.6;
        let alpha = c(1.5, -0.8);
        let input = coherent_state(alpha, d).unwrap();
        assert!(input.tail_mass < 1e-12);
        let out = attenuator(eta, d).unwrap().apply(&input.state()).unwrap();
        let expected = coherent_state(alpha * eta, d).unwrap().state();
        assert!((out.matrix().matrix() - expected.matrix().matrix()).max_abs() < 1e-10);
    }

    #[test]
    fn attenuator_semigroup() {
        let d = 12;
        let a = attenuator(0.8, d).unwrap();
        let b = attenuator(0.5, d).unwrap();
        let ab = a.compose(&b).unwrap();
        let direct = attenuator(0.4, d).unwrap();
        assert!((ab.choi().matrix() - direct.choi().matrix()).max_abs() < 1e-10);
    }

    #[test]
    fn attenuator_energy_limit() {
        let h = Hamiltonian::number_operator(10);
        let lim = verify_energy_limited(&attenuator(0.7, 10).unwrap(), &h, &h).unwrap();
        assert!((lim.alpha - 0.49).abs() < 1e-12);
        assert_eq!(lim.e0, 0.0);
    }

    #[test]
    fn unitary_evolution_examples() {
        let h = Hamiltonian::number_operator(8);
        let u0 = evolution_operator(&h, 0.0);
        assert!((&u0 - &ComplexMatrix::identity(8)).max_abs() < 1e-15);
        let u = evolution_operator(&h, 2.0 * std::f64::consts::PI);
        assert!((&u - &ComplexMatrix::identity(8)).max_abs() < 1e-13);
    }

    #[test]
    fn geometric_hamiltonian_exceptional_times() {
        // H = Σ cⁿ|n⟩⟨n| at τ_k = 2π c^{−k}: up to a global phase U differs from
        // 1 only on the k lowest levels
        let cbase = 3.0;
        let d = 6;
        let h = Hamiltonian::geometric(cbase, d).unwrap();
        for k in 1..4 {
            let tau = 2.0 * std::f64::consts::PI * cbase.powi(-(k as i32));
            let u = evolution_operator(&h, tau);
            let ref_phase = u.get(d - 1, d - 1);
            for n in 0..d {
                let rel = u.get(n, n) / ref_phase;
                if n >= k {
                    assert!((rel - c(1.0, 0.0)).norm() < 1e-9, "k={k} n={n}");
                } else {
                    assert!((rel - c(1.0, 0.0)).norm() > 1e-3, "k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn truncated_displacement_and_squeezing() {
        let dsp = displacement(c(0.8, 0.3), 40).unwrap();
        assert!(dsp.truncation_error < 1e-6, "{}", dsp.truncation_error);
        assert!(dsp.channel.completeness_residual() < 1e-10);
        let sq = squeezing(0.3, 40).unwrap();
        assert!(sq.truncation_error < 1e-6, "{}", sq.truncation_error);
        let coarse = displacement(c(2.5, 0.0), 6).unwrap();
        assert!(coarse.truncation_error > 1e-3);
    }

    #[test]
    fn random_constructors_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let ch = random_channel(3, 2, 4, &mut rng);
            assert!(ch.completeness_residual() <= CPTP_TOL);
        }
        let d = random_channel_difference(2, 2, &mut rng);
        assert!(d.trace_annihilation_residual() < 1e-12);
        let h = random_hermitian_preserving(2, 2, &mut rng);
        assert!(h.trace_annihilation_residual() > 1e-6);
    }
}
