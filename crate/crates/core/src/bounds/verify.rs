//! Numerical checks of the bounds against certified norm values and exact
//! entropies.

use rayon::prelude::*;

use crate::bounds::formulas::{entropy_trivial_bound, optimized_entropy_continuity_bound, speed_limit_bound};
use crate::bounds::report::{BoundReport, VERIFY_TOL};
use crate::error::{EcdError, Result};
use crate::matrix::Subsystem;
use crate::quantum::{
    conditional_entropy, mean_energy, random_density, unitary_evolution, Channel, DensityMatrix, EntropyModel,
    Hamiltonian, HermitianPreservingMap,
};
use crate::sdp::{assemble, solve, EcdCertificate, SolverOptions, SolverStatus};

/// `½‖N₁ − N₂‖⋄E` as a certified `(lower, upper)` pair.
pub fn half_norm(
    n1: &Channel,
    n2: &Channel,
    h: &Hamiltonian,
    e: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64, EcdCertificate)> {
    let cert = solve(&assemble(&HermitianPreservingMap::difference(n1, n2)?, h, e)?, opts)?;
    Ok((0.5 * cert.norm_lower, 0.5 * cert.norm_upper, cert))
}

/// Checks `|S(B|C)_{ω₁} − S(B|C)_{ω₂}|` for `ω_i = (N_i ⊗ id_C)(ρ_AC)`
/// against `min(optimized continuity bound, trivial bound)`.
///
/// `ε` is the SDP's certified upper value of `½‖N₁ − N₂‖⋄E`; `Ẽ` is the
/// larger of the two output energies. For `ε ≥ 1` only the trivial bound
/// applies.
pub fn verify_entropy_bound(
    n1: &Channel,
    n2: &Channel,
    rho_ac: &DensityMatrix,
    h_a: &Hamiltonian,
    h_b: &Hamiltonian,
    e: f64,
    opts: &SolverOptions,
) -> Result<BoundReport> {
    let (da, db) = (n1.dim_in(), n1.dim_out());
    if !rho_ac.dim().is_multiple_of(da) {
        return Err(EcdError::DimensionMismatch(format!(
            "state of dimension {} is not on A ⊗ C with d_A = {da}",
            rho_ac.dim()
        )));
    }
    let dc = rho_ac.dim() / da;
    let rho_a = rho_ac.partial_trace((da, dc), Subsystem::First)?;
    let input_energy = mean_energy(&rho_a, h_a)?;
    if input_energy > e + VERIFY_TOL {
        return Err(EcdError::Domain(format!("probe energy {input_energy} exceeds the budget {e}")));
    }

    let (_, eps, cert) = half_norm(n1, n2, h_a, e, opts)?;
    let eps = eps.clamp(0.0, 1.0);

    let omega1 = n1.apply_extended(rho_ac, dc)?;
    let omega2 = n2.apply_extended(rho_ac, dc)?;
    let gap = (conditional_entropy(&omega1, (db, dc))? - conditional_entropy(&omega2, (db, dc))?).abs();
    let out_energy =
        |w: &DensityMatrix| -> Result<f64> { mean_energy(&w.partial_trace((db, dc), Subsystem::First)?, h_b) };
    let e_tilde = out_energy(&omega1)?.max(out_energy(&omega2)?).max(0.0);

    let model = EntropyModel::Truncated { hamiltonian: h_b.clone() };
    let trivial = entropy_trivial_bound(e_tilde, &model)?;
    let (lemma, eps_prime) = if eps < 1.0 {
        let b = optimized_entropy_continuity_bound(eps, e_tilde, &model)?;
        (b.value, b.epsilon_prime)
    } else {
        (f64::INFINITY, f64::NAN)
    };
    let mut report = BoundReport::new(
        "entropy-continuity",
        &[("epsilon", eps), ("energy", e), ("e_tilde", e_tilde), ("dim_ref", dc as f64)],
        lemma.min(trivial),
    )
    .with_measurement(gap, gap, VERIFY_TOL)
    .with_provenance(&[
        ("d_a", da as f64),
        ("d_b", db as f64),
        ("iterations", cert.iterations as f64),
        ("gap_tol", opts.gap_tol),
    ]);
    if eps_prime.is_finite() {
        report.inputs.insert("epsilon_prime".into(), eps_prime);
    }
    Ok(report)
}

/// Random state on `A ⊗ C` whose `A` marginal has energy at most `e`:
/// a random full-rank state, mixed with `|0⟩⟨0| ⊗ ρ_C` when its marginal is
/// too energetic (`|0⟩` a ground state of `h`).
pub fn random_energy_probe(h: &Hamiltonian, e: f64, dim_ref: usize, rng: &mut impl rand::Rng) -> Result<DensityMatrix> {
    let da = h.dim();
    let rho = random_density(da * dim_ref, da * dim_ref, rng);
    let cur = mean_energy(&rho.partial_trace((da, dim_ref), Subsystem::First)?, h)?;
    if cur <= e {
        return Ok(rho);
    }
    let rho_c = rho.partial_trace((da, dim_ref), Subsystem::Second)?;
    let ground = h.ground_state().tensor(&rho_c)?;
    let t = (cur - e) / cur;
    DensityMatrix::new(&rho.matrix().scale(1.0 - t) + &ground.matrix().scale(t))
}

#[derive(Clone, Debug)]
pub struct CampaignPoint {
    pub report: BoundReport,
    pub status: SolverStatus,
}

/// Evaluates `½‖U_t − id‖⋄E` on the grid `t_grid × e_grid` (row-major in
/// `t`) and compares the certified lower value with `min(1, (4tE)^{1/3})`.
pub fn speed_limit_campaign(
    h: &Hamiltonian,
    t_grid: &[f64],
    e_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<CampaignPoint>> {
    let id = Channel::identity(h.dim());
    let points: Vec<(f64, f64)> = t_grid.iter().flat_map(|&t| e_grid.iter().map(move |&e| (t, e))).collect();
    points
        .par_iter()
        .map(|&(t, e)| {
            let bound = speed_limit_bound(t, e)?;
            let (lo, hi, cert) = half_norm(&unitary_evolution(h, t), &id, h, e, opts)?;
            let report = BoundReport::new("speed-limit", &[("t", t), ("energy", e)], bound)
                .with_measurement(lo, hi, VERIFY_TOL)
                .with_provenance(&[
                    ("dim", h.dim() as f64),
                    ("iterations", cert.iterations as f64),
                    ("gap_tol", opts.gap_tol),
                ]);
            Ok(CampaignPoint { report, status: cert.status })
        })
        .collect()
}
