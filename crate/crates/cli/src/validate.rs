use std::path::Path;

use serde::Serialize;

use ecd_core::matrix::{ComplexMatrix, HermitianMatrix};
use ecd_core::quantum::{
    energy_limit_margin, verify_energy_limited, Channel, ChannelSpec, EnergyLimit, Hamiltonian, CPTP_TOL,
};

use crate::config::read_spec;
use crate::error::CliError;
use crate::output::write_json;

const ENERGY_LIMIT_TOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus_count: usize,
    /// `max |Σ K†K − 1|`, or the excess of `λ_max(Σ K†K)` over 1 for trace
    /// non-increasing specs.
    pub completeness_residual: f64,
    /// Entrywise `‖M − M†‖` of `M = Σ K†K`.
    pub hermiticity_residual: f64,
    pub claimed_energy_limit: Option<EnergyLimit>,
    /// Smallest eigenvalue of `αH_A + E₀ − N*(H_B)` for the claimed limit.
    pub energy_limit_margin: Option<f64>,
    /// A certified limit found by search when none is claimed.
    pub found_energy_limit: Option<EnergyLimit>,
    pub problems: Vec<String>,
}

pub fn validate_spec(spec: &ChannelSpec, spectrum: Option<&[f64]>) -> Result<ValidationReport, CliError> {
    let mut problems = Vec::new();
    let map = spec.cp_map().map_err(|e| CliError::Config(format!("malformed Kraus operators: {e}")))?;
    if spec.kraus.iter().flatten().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        problems.push("non-finite Kraus entry".into());
    }
    let mut raw = ComplexMatrix::zeros(spec.dim_in, spec.dim_in);
    for k in map.kraus() {
        raw = &raw + &(&k.adjoint() * k);
    }
    let hermiticity_residual = raw.hermiticity_residual();
    if hermiticity_residual > CPTP_TOL {
        problems.push(format!("Σ K†K is not Hermitian (residual {hermiticity_residual:.3e})"));
    }
    let completeness = map.completeness();
    let completeness_residual = if spec.trace_nonincreasing {
        let defect = &HermitianMatrix::identity(spec.dim_in) - &completeness;
        (-defect.min_eigenvalue()?).max(0.0)
    } else {
        (completeness.matrix() - &ComplexMatrix::identity(spec.dim_in)).max_abs()
    };
    if completeness_residual > CPTP_TOL {
        problems.push(format!("Kraus completeness violated (residual {completeness_residual:.3e})"));
    }

    let mut energy_limit_margin_value = None;
    let mut found = None;
    if problems.is_empty() {
        let channel = spec.to_channel().map_err(|e| CliError::Config(e.to_string()))?;
        let (h_a, h_b) = hamiltonians(&channel, spectrum)?;
        match spec.energy_limit {
            Some(limit) => {
                let m = energy_limit_margin(&channel, &h_a, &h_b, limit)?;
                energy_limit_margin_value = Some(m);
                if m < -ENERGY_LIMIT_TOL {
                    problems.push(format!(
                        "claimed energy limit (α = {}, E₀ = {}) fails: αH_A + E₀ − N*(H_B) has eigenvalue {m:.3e}",
                        limit.alpha, limit.e0
                    ));
                }
            }
            None => found = verify_energy_limited(&channel, &h_a, &h_b).ok(),
        }
    }

    Ok(ValidationReport {
        valid: problems.is_empty(),
        dim_in: spec.dim_in,
        dim_out: spec.dim_out,
        kraus_count: spec.kraus.len(),
        completeness_residual,
        hermiticity_residual,
        claimed_energy_limit: spec.energy_limit,
        energy_limit_margin: energy_limit_margin_value,
        found_energy_limit: found,
        problems,
    })
}

fn hamiltonians(ch: &Channel, spectrum: Option<&[f64]>) -> Result<(Hamiltonian, Hamiltonian), CliError> {
    let make = |d: usize| -> Result<Hamiltonian, CliError> {
        match spectrum {
            None => Ok(Hamiltonian::number_operator(d)),
            Some(s) if s.len() == d => Hamiltonian::new(s.to_vec()).map_err(|e| CliError::Config(e.to_string())),
            Some(s) => Err(CliError::Config(format!("--spectrum has {} entries for dimension {d}", s.len()))),
        }
    };
    Ok((make(ch.dim_in())?, make(ch.dim_out())?))
}

pub fn run_validate(path: &Path, spectrum: Option<&[f64]>) -> Result<(), CliError> {
    let spec = read_spec(path)?;
    let report = validate_spec(&spec, spectrum)?;
    write_json(&report, None, true)?;
    if report.valid {
        Ok(())
    } else {
        Err(CliError::Config(format!("{} is invalid: {}", path.display(), report.problems.join("; "))))
    }
}
