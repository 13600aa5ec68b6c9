//! Randomized checks of the norm axioms and the energy-dependence
//! inequalities, each phrased as `lhs ≤ rhs` on certified values.
//!
//! Every check pits the certified lower value of one side against the
//! certified upper value of the other, so a violation beyond `tol` is a real
//! violation and not solver slack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{BoundReport, VERIFY_TOL};
use crate::error::Result;
use crate::quantum::{random_channel, random_hermitian_preserving, Hamiltonian, HermitianPreservingMap};
use crate::sdp::{assemble, solve, SolverOptions, SolverStatus};

/// Slack for the tensor-with-channel invariance check.
pub const TENSOR_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug)]
struct Bracket {
    lo: f64,
    hi: f64,
    optimal: bool,
}

fn norm(delta: &HermitianPreservingMap, h: &Hamiltonian, e: f64, opts: &SolverOptions) -> Result<Bracket> {
    let cert = solve(&assemble(delta, h, e)?, opts)?;
    Ok(Bracket { lo: cert.norm_lower, hi: cert.norm_upper, optimal: cert.status == SolverStatus::Optimal })
}

fn random_qubit_hamiltonian(rng: &mut impl Rng) -> Hamiltonian {
    Hamiltonian::new(vec![0.0, rng.random_range(0.5..2.0)]).expect("grounded")
}

#[derive(Clone, Debug)]
pub struct PropertyTrial {
    pub reports: Vec<BoundReport>,
    /// All underlying solves reached certified optimality.
    pub all_optimal: bool,
}

impl PropertyTrial {
    pub fn violations(&self) -> usize {
        self.reports.iter().filter(|r| r.violated()).count()
    }
}

/// One seeded trial on random qubit maps: triangle inequality, homogeneity,
/// monotonicity and `(E′/E)` scaling in the energy, invariance under
/// tensoring with a channel, and super-multiplicativity over energy splits.
pub fn norm_property_trial(seed: u64, opts: &SolverOptions) -> Result<PropertyTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_qubit_hamiltonian(&mut rng);
    let d1 = random_hermitian_preserving(2, 2, &mut rng);
    let d2 = random_hermitian_preserving(2, 2, &mut rng);
    let e = rng.random_range(0.1..1.5) * h.max_energy();
    let c = rng.random_range(-3.0..3.0);
    let e_big = e * rng.random_range(1.05..3.0);

    let mut reports = Vec::new();
    let mut all_optimal = true;
    let mut eval = |delta: &HermitianPreservingMap, h: &Hamiltonian, e: f64| -> Result<Bracket> {
        let b = norm(delta, h, e, opts)?;
        all_optimal &= b.optimal;
        Ok(b)
    };
    let seed_f = seed as f64;
    let check = |name: &str, lhs: f64, rhs: f64, tol: f64, extra: &[(&str, f64)]| {
        let mut inputs = vec![("seed", seed_f)];
        inputs.extend_from_slice(extra);
        BoundReport::new(name, &inputs, rhs).with_measurement(lhs, lhs, tol)
    };

    let n1 = eval(&d1, &h, e)?;
    let n2 = eval(&d2, &h, e)?;
    let sum = eval(&d1.add(&d2)?, &h, e)?;
    reports.push(check("triangle", sum.lo, n1.hi + n2.hi, VERIFY_TOL, &[("energy", e)]));

    let scaled = eval(&d1.scale(c), &h, e)?;
    reports.push(check("homogeneity-upper", scaled.lo, c.abs() * n1.hi, VERIFY_TOL, &[("c", c)]));
    reports.push(check("homogeneity-lower", c.abs() * n1.lo, scaled.hi, VERIFY_TOL, &[("c", c)]));

    let big = eval(&d1, &h, e_big)?;
    reports.push(check("energy-monotone", n1.lo, big.hi, VERIFY_TOL, &[("energy", e), ("energy_prime", e_big)]));
    reports.push(check(
        "energy-scaling",
        big.lo,
        e_big / e * n1.hi,
        VERIFY_TOL,
        &[("energy", e), ("energy_prime", e_big)],
    ));

    let t = random_channel(2, 2, 2, &mut rng);
    let h_c = random_qubit_hamiltonian(&mut rng);
    let ext = eval(&d1.tensor_channel(&t)?, &h.sum(&h_c), e)?;
    reports.push(check("tensor-channel-upper", ext.lo, n1.hi, TENSOR_TOL, &[("energy", e)]));
    reports.push(check("tensor-channel-lower", n1.lo, ext.hi, TENSOR_TOL, &[("energy", e)]));

    let h2 = random_qubit_hamiltonian(&mut rng);
    let joint = eval(&d1.tensor(&d2)?, &h.sum(&h2), e)?;
    for f in [0.25, 0.5, 0.75] {
        let a = eval(&d1, &h, f * e)?;
        let b = eval(&d2, &h2, (1.0 - f) * e)?;
        reports.push(check("super-multiplicative", a.lo * b.lo, joint.hi, VERIFY_TOL, &[("energy", e), ("split", f)]));
    }
    Ok(PropertyTrial { reports, all_optimal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_few_trials_hold() {
        for seed in 0..3 {
            let trial = norm_property_trial(seed, &SolverOptions::default()).unwrap();
            assert_eq!(trial.violations(), 0, "{:?}", trial.reports);
            assert!(trial.all_optimal);
            assert_eq!(trial.reports.len(), 10);
        }
    }
}
