//! Operational check: binary channel discrimination with energy-limited
//! probes and the Helstrom measurement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::matrix::{eig_hermitian, trace_norm};
use crate::quantum::{random_density, Channel, DensityMatrix, Hamiltonian};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationResult {
    /// Exact Helstrom success probability of the best probe found.
    pub helstrom_success: f64,
    /// Monte Carlo success rate of the Helstrom measurement on that probe.
    pub empirical_success: f64,
    pub shots: usize,
    pub probes_tried: usize,
}

impl DiscriminationResult {
    /// Two-sided Hoeffding radius of the empirical rate at confidence `1 − δ`.
    pub fn tolerance(&self, delta: f64) -> f64 {
        ((2.0 / delta).ln() / (2.0 * self.shots.max(1) as f64)).sqrt()
    }
}

/// `½(1 + ‖p ω₁ − (1−p) ω₂‖₁)` together with the Helstrom projector's
/// per-hypothesis success probabilities `(tr Πω₁, 1 − tr Πω₂)`.
fn helstrom(omega1: &DensityMatrix, omega2: &DensityMatrix, p: f64) -> Result<(f64, f64, f64)> {
    let m = &omega1.matrix().scale(p) - &omega2.matrix().scale(1.0 - p);
    let success = 0.5 * (1.0 + trace_norm(m.matrix())?);
    let e = eig_hermitian(&m)?;
    let proj = e.reconstruct_with(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let hit1 = proj.inner_product(omega1.matrix()).clamp(0.0, 1.0);
    let hit2 = (1.0 - proj.inner_product(omega2.matrix())).clamp(0.0, 1.0);
    Ok((success, hit1, hit2))
}

/// Samples `samples` energy-feasible probes (plus `extra_probe`, given as an
/// input marginal and purified), keeps the one with the best Helstrom
/// success, and measures it `shots` times.
///
/// The result must satisfy `success ≤ ½(1 + ‖pN₁ − (1−p)N₂‖⋄E)`.
#[allow(clippy::too_many_arguments)]
pub fn discrimination_check(
    n1: &Channel,
    n2: &Channel,
    p: f64,
    h: &Hamiltonian,
    e: f64,
    samples: usize,
    shots: usize,
    extra_probe: Option<&DensityMatrix>,
    rng: &mut impl Rng,
) -> Result<DiscriminationResult> {
    let d = n1.dim_in();
    if n2.dim_in() != d || n1.dim_out() != n2.dim_out() || h.dim() != d {
        return Err(EcdError::DimensionMismatch("channels and Hamiltonian must share dimensions".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(EcdError::Domain(format!("prior must lie in [0, 1], got {p}")));
    }

    let mut candidates = Vec::with_capacity(samples + 1);
    if let Some(rho) = extra_probe {
        candidates.push(h.enforce_energy(rho, e)?);
    }
    for _ in 0..samples {
        let rank = rng.random_range(1..=d);
        candidates.push(h.enforce_energy(&random_density(d, rank, rng), e)?);
    }

    let mut best: Option<(f64, f64, f64)> = None;
    for rho in &candidates {
        let psi = DensityMatrix::pure(&rho.purification()?)?;
        let omega1 = n1.apply_extended(&psi, d)?;
        let omega2 = n2.apply_extended(&psi, d)?;
        let r = helstrom(&omega1, &omega2, p)?;
        if best.is_none_or(|b| r.0 > b.0) {
            best = Some(r);
        }
    }
    let (success, hit1, hit2) = best.unwrap_or((p.max(1.0 - p), 0.0, 0.0));

    let mut correct = 0usize;
    for _ in 0..shots {
        let first = rng.random_bool(p);
        let ok = if first { rng.random_bool(hit1) } else { rng.random_bool(hit2) };
        correct += ok as usize;
    }
    Ok(DiscriminationResult {
        helstrom_success: success,
        empirical_success: if shots == 0 { success } else { correct as f64 / shots as f64 },
        shots,
        probes_tried: candidates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{phase_flip, HermitianPreservingMap};
    use crate::sdp::{assemble, solve, SolverOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit() -> Hamiltonian {
        Hamiltonian::new(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn identical_channels_give_the_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let id = Channel::identity(2);
        let r = discrimination_check(&id, &id, 0.7, &qubit(), 0.5, 20, 1000, None, &mut rng).unwrap();
        assert!((r.helstrom_success - 0.7).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_constant_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Channel::constant(&DensityMatrix::basis(2, 0), 2).unwrap();
        let b = Channel::constant(&DensityMatrix::basis(2, 1), 2).unwrap();
        let r = discrimination_check(&a, &b, 0.5, &qubit(), 0.3, 5, 2000, None, &mut rng).unwrap();
        assert!((r.helstrom_success - 1.0).abs() < 1e-9);
        assert_eq!(r.empirical_success, 1.0);
    }

    #[test]
    fn optimal_probe_reaches_the_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n1, n2) = (Channel::identity(2), phase_flip());
        let e = 0.3;
        let cert = solve(
            &assemble(&HermitianPreservingMap::difference(&n1, &n2).unwrap(), &qubit(), e).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        let probe = DensityMatrix::new(cert.probe.clone()).unwrap();
        let r = discrimination_check(&n1, &n2, 0.5, &qubit(), e, 50, 20_000, Some(&probe), &mut rng).unwrap();
        let bound = 0.5 * (1.0 + 0.5 * cert.norm_upper);
        assert!(r.helstrom_success <= bound + 1e-9);
        assert!((r.helstrom_success - bound).abs() < 1e-5);
        assert!((r.empirical_success - r.helstrom_success).abs() <= r.tolerance(1e-6));
    }
}
