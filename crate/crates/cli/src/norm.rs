use std::path::Path;

use log::info;
use serde::Serialize;

use ecd_core::quantum::HermitianPreservingMap;
use ecd_core::sdp::{assemble, solve, EcdCertificate, EcdProblem, SolverOptions, SolverStatus};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::write_json;

#[derive(Serialize)]
struct NormRecord<'a> {
    #[serde(flatten)]
    certificate: &'a EcdCertificate,
    gap: f64,
    dims: (usize, usize),
    energy: Option<f64>,
    gap_tol: f64,
}

/// Either `problem_ref`, or the first two channels (files then recipes) with
/// the `energy` parameter.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<EcdProblem, CliError> {
    if let Some(p) = &cfg.problem_ref {
        let text = std::fs::read_to_string(p)?;
        let mut problem =
            EcdProblem::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
        if cfg.parameters.contains_key("energy") {
            problem.energy = Some(cfg.number("energy", None)?);
        }
        return Ok(problem);
    }
    let h = cfg.hamiltonian()?;
    let channels = cfg.load_channels(&h)?;
    if channels.len() != 2 {
        return Err(CliError::Config(format!("norm needs exactly two channels, got {}", channels.len())));
    }
    let e = cfg.number("energy", None)?;
    let delta =
        HermitianPreservingMap::difference(&channels[0], &channels[1]).map_err(|e| CliError::Config(e.to_string()))?;
    assemble(&delta, &h, e).map_err(|e| CliError::Config(e.to_string()))
}

pub fn run_norm(cfg: &ExperimentConfig, opts: &SolverOptions, emit_problem: Option<&Path>) -> Result<(), CliError> {
    let problem = build_problem(cfg)?;
    if let Some(p) = emit_problem {
        write_json(&problem, Some(p), false)?;
    }
    let cert = solve(&problem, opts)?;
    info!("norm in [{:.9}, {:.9}] after {} iterations", cert.norm_lower, cert.norm_upper, cert.iterations);
    let record = NormRecord {
        certificate: &cert,
        gap: cert.gap(),
        dims: problem.dims,
        energy: problem.energy,
        gap_tol: opts.gap_tol,
    };
    write_json(&record, cfg.output.as_deref(), false)?;
    if cfg.output.is_some() {
        println!(
            "norm in [{:.9}, {:.9}], status {:?}, {} iterations",
            cert.norm_lower, cert.norm_upper, cert.status, cert.iterations
        );
    }
    if cert.status != SolverStatus::Optimal {
        return Err(CliError::NonOptimal(format!("status {:?}, gap {:.3e}", cert.status, cert.gap())));
    }
    Ok(())
}
