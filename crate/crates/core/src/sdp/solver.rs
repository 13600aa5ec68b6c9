//! Interior-point solver with primal and dual certificates.
//!
//! Both SDPs reduce to maximizing a concave function of the reference
//! marginal `σ` alone: with `S = 1 ⊗ √σ` and `X = S J S`, the optimal value is
//! `tr X₊` (trace-annihilating maps) or `‖X‖₁` (general maps). The solver
//! follows the log-barrier central path of this reduced problem over
//! `{σ ⪰ 0, tr σ = 1, tr Hσ ≤ E}` with Newton steps, and reads off after each
//! centering phase
//!
//! * a feasible primal point `W = S P₊ S` (resp. `V = S (P₊ − P₋) S`), and
//! * a feasible dual point built from the supergradient `Z = S⁻¹ X₊ S⁻¹`,
//!   repaired to `Z + (J − Z)₊` and completed by the best `(x, y)`.
//!
//! The reported gap is therefore a rigorous bracket on the optimum, not an
//! estimate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{EcdError, Result};
use crate::matrix::{eig_hermitian, ComplexMatrix, Eigh, HermitianMatrix, C64};
use crate::quantum::Hamiltonian;
use crate::sdp::blocks::{hermitian_json, Block, BlockHermitian};
use crate::sdp::problem::{EcdProblem, Mode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target duality gap, relative to `max(1, |dual|)`.
    pub gap_tol: f64,
    /// Largest accepted constraint violation of the certificates.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Progress is logged at debug level every `log_every` iterations.
    pub log_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-6, feas_tol: 1e-7, max_iter: 50_000, log_every: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    /// No ascent step could be found before the gap closed.
    Stalled,
    InfeasibleNumerics,
}

/// Constraint violations of the returned certificates (all `≥ 0`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|tr σ − 1|`.
    pub primal_trace: f64,
    /// `max(0, tr Hσ − E)`.
    pub primal_energy: f64,
    /// Most negative eigenvalue of the primal cone constraints.
    pub primal_cone: f64,
    /// Most negative eigenvalue of `Z` and `Z − J`.
    pub dual_cone: f64,
    /// Most negative eigenvalue of `x 1 + y H − R`.
    pub dual_affine: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.primal_trace, self.primal_energy, self.primal_cone, self.dual_cone, self.dual_affine]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Solution of an [`EcdProblem`] with both certificates.
///
/// `primal_value ≤ optimum ≤ dual_value` in SDP units; `norm_lower` and
/// `norm_upper` are the same bracket in norm units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcdCertificate {
    pub mode: Mode,
    pub primal_value: f64,
    pub dual_value: f64,
    pub norm_lower: f64,
    pub norm_upper: f64,
    /// Reduced state of the optimal probe on the input system.
    #[serde(rename = "probe_marginal", with = "hermitian_json")]
    pub probe: HermitianMatrix,
    /// `W` (or `V` in general mode) on `B ⊗ A`.
    pub primal_variable: BlockHermitian,
    pub z: BlockHermitian,
    pub x: f64,
    pub y: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    pub residuals: Residuals,
}

impl EcdCertificate {
    pub fn gap(&self) -> f64 {
        self.dual_value - self.primal_value
    }

    pub fn norm_midpoint(&self) -> f64 {
        0.5 * (self.norm_lower + self.norm_upper)
    }
}

/// Coordinates of the reference marginal: the diagonal of `σ`, or an
/// orthonormal basis of all Hermitian matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Space {
    Diagonal(usize),
    Dense(usize),
}

impl Space {
    fn len(self) -> usize {
        match self {
            Space::Diagonal(d) => d,
            Space::Dense(d) => d * d,
        }
    }

    fn to_sigma(self, z: &[f64]) -> HermitianMatrix {
        match self {
            Space::Diagonal(_) => HermitianMatrix::from_real_diagonal(z),
            Space::Dense(d) => {
                let mut m = DMatrix::<C64>::zeros(d, d);
                for k in 0..d {
                    m[(k, k)] = C64::new(z[k], 0.0);
                }
                let mut idx = d;
                for k in 0..d {
                    for l in k + 1..d {
                        let v = C64::new(z[idx], z[idx + 1]) * FRAC_1_SQRT_2;
                        m[(k, l)] = v;
                        m[(l, k)] = v.conj();
                        idx += 2;
                    }
                }
                ComplexMatrix::from_dmatrix(m).hermitian_part()
            }
        }
    }

    /// `⟨M, B_k⟩` for every basis element.
    fn coords(self, m: &HermitianMatrix) -> Vec<f64> {
        match self {
            Space::Diagonal(_) => m.diagonal(),
            Space::Dense(d) => {
                let mut out = m.diagonal();
                for k in 0..d {
                    for l in k + 1..d {
                        let v = m.get(k, l) * SQRT_2;
                        out.push(v.re);
                        out.push(v.im);
                    }
                }
                out
            }
        }
    }
}

struct BlockEval {
    /// Restriction of `1 ⊗ √σ` to the block.
    s: ComplexMatrix,
    /// Diagonal of `s` when the probe is diagonal.
    sd: Option<Vec<f64>>,
    eig: Eigh,
    threshold: f64,
}

struct Evaluation {
    value: f64,
    sigma: HermitianMatrix,
    grad: HermitianMatrix,
    blocks: Vec<BlockEval>,
}

struct Certified {
    primal_value: f64,
    primal_variable: BlockHermitian,
    sigma: HermitianMatrix,
    dual_value: f64,
    z: BlockHermitian,
    x: f64,
    y: f64,
    r: HermitianMatrix,
}

/// Barrier weight reduction per outer iteration.
const TAU_SHRINK: f64 = 0.2;
const MAX_CENTERING: usize = 40;
const MAX_BACKTRACK: usize = 60;

/// Solves `problem` to the requested gap.
///
/// Path-following on `max f(σ) + τ (log det σ + log(E − tr Hσ))` subject to
/// `tr σ = 1`, with Newton steps and a certificate check after each
/// centering phase.
pub fn solve(problem: &EcdProblem, opts: &SolverOptions) -> Result<EcdCertificate> {
    let di = problem.dim_in();
    let energy = problem.energy.filter(|_| problem.energy_binding());
    let space = if problem.structured { Space::Diagonal(di) } else { Space::Dense(di) };

    if problem.choi.blocks.is_empty() || problem.choi.max_abs() == 0.0 {
        return zero_certificate(problem);
    }

    let h_coords = space.coords(&problem.hamiltonian.matrix());
    let trace_coords = space.coords(&HermitianMatrix::identity(di));
    let n = space.len();

    let mut z = space.coords(&interior_start(&problem.hamiltonian, energy));
    let mut current = evaluate(problem, space, space.to_sigma(&z))?;

    let first = certify(problem, &current, energy)?;
    let mut tau =
        ((first.dual_value - first.primal_value) / (n + 1) as f64).max(1e-12 * first.dual_value.abs().max(1.0));
    let mut best_primal = clone_certified(&first);
    let mut best_dual = first;
    let mut status = SolverStatus::Stalled;
    let mut iterations = 0;

    'outer: loop {
        for _ in 0..MAX_CENTERING {
            if iterations >= opts.max_iter {
                status = SolverStatus::MaxIterations;
                break 'outer;
            }
            let barrier = match barrier_terms(space, &current.sigma, &h_coords, energy)? {
                Some(b) => b,
                None => return Err(EcdError::SolverFailure { residual: f64::NAN }),
            };
            let grad_f = space.coords(&current.grad);
            let hess_f = hessian(problem, space, &current)?;
            let g: Vec<f64> = (0..n).map(|k| grad_f[k] + tau * barrier.grad[k]).collect();
            let hphi = &hess_f + &barrier.hess * tau;
            let scale = match space {
                Space::Diagonal(_) => z.clone(),
                Space::Dense(_) => vec![1.0; n],
            };
            let Some((dz, decrement)) = newton_direction(&hphi, &g, &trace_coords, &scale) else {
                break;
            };
            if decrement <= 1e-3 * tau {
                break;
            }
            let phi0 = current.value + tau * barrier.value;
            let mut t = match space {
                Space::Diagonal(_) => max_step(&z, &dz, &h_coords, energy),
                Space::Dense(_) => 1.0,
            };
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACK {
                let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + t * b).collect();
                let sigma = space.to_sigma(&trial);
                if let Some(b) = barrier_terms(space, &sigma, &h_coords, energy)? {
                    let ev = evaluate(problem, space, sigma)?;
                    if ev.value + tau * b.value >= phi0 + 1e-4 * t * decrement {
                        accepted = Some((trial, ev));
                        break;
                    }
                }
                t *= 0.5;
            }
            iterations += 1;
            match accepted {
                Some((trial, ev)) => {
                    z = trial;
                    current = ev;
                }
                None => break,
            }
            if opts.log_every > 0 && iterations % opts.log_every == 0 {
                log::debug!("iter {iterations}: f {:.12} tau {tau:.3e} step {t:.3e}", current.value);
            }
        }

        let cert = certify(problem, &current, energy)?;
        if cert.primal_value > best_primal.primal_value {
            best_primal = clone_certified(&cert);
        }
        if cert.dual_value < best_dual.dual_value {
            best_dual = cert;
        }
        let (lo, hi) = (best_primal.primal_value, best_dual.dual_value);
        log::debug!("iter {iterations}: primal {lo:.12} dual {hi:.12} gap {:.3e} tau {tau:.3e}", hi - lo);
        if hi - lo <= opts.gap_tol * hi.abs().max(1.0) {
            status = SolverStatus::Optimal;
            break;
        }
        if tau < 1e-15 * hi.abs().max(1.0) {
            break;
        }
        tau *= TAU_SHRINK;
    }

    let residuals = residuals(problem, &best_primal, &best_dual, energy)?;
    if residuals.max() > opts.feas_tol {
        status = SolverStatus::InfeasibleNumerics;
    }
    let factor = problem.mode.norm_factor();
    log::info!(
        "solver finished: {:?} after {iterations} iterations, norm in [{:.10}, {:.10}]",
        status,
        factor * best_primal.primal_value,
        factor * best_dual.dual_value
    );
    Ok(EcdCertificate {
        mode: problem.mode,
        primal_value: best_primal.primal_value,
        dual_value: best_dual.dual_value,
        norm_lower: factor * best_primal.primal_value,
        norm_upper: factor * best_dual.dual_value,
        probe: best_primal.sigma.matrix().transpose().hermitian_part(),
        primal_variable: best_primal.primal_variable,
        z: best_dual.z,
        x: best_dual.x,
        y: best_dual.y,
        iterations,
        status,
        residuals,
    })
}

fn clone_certified(c: &Certified) -> Certified {
    Certified {
        primal_value: c.primal_value,
        primal_variable: c.primal_variable.clone(),
        sigma: c.sigma.clone(),
        dual_value: c.dual_value,
        z: c.z.clone(),
        x: c.x,
        y: c.y,
        r: c.r.clone(),
    }
}

fn zero_certificate(problem: &EcdProblem) -> Result<EcdCertificate> {
    let sigma = problem.hamiltonian.ground_populations();
    let empty = BlockHermitian { dim: problem.choi.dim, blocks: vec![] };
    Ok(EcdCertificate {
        mode: problem.mode,
        primal_value: 0.0,
        dual_value: 0.0,
        norm_lower: 0.0,
        norm_upper: 0.0,
        probe: HermitianMatrix::from_real_diagonal(&sigma),
        primal_variable: empty.clone(),
        z: empty,
        x: 0.0,
        y: 0.0,
        iterations: 0,
        status: SolverStatus::Optimal,
        residuals: Residuals::default(),
    })
}

/// Strictly feasible start: full rank, energy at most `E/2`.
fn interior_start(h: &Hamiltonian, energy: Option<f64>) -> HermitianMatrix {
    let d = h.dim();
    let avg = h.average_energy();
    let w = match energy {
        Some(e) if avg > 0.0 => (0.5 * e / avg).min(1.0),
        _ => 1.0,
    };
    let p: Vec<f64> = h.ground_populations().iter().map(|g| w / d as f64 + (1.0 - w) * g).collect();
    HermitianMatrix::from_real_diagonal(&p)
}

struct Barrier {
    value: f64,
    grad: Vec<f64>,
    hess: DMatrix<f64>,
}

/// `log det σ + log(E − tr Hσ)` with derivatives, or `None` outside the
/// domain.
fn barrier_terms(space: Space, sigma: &HermitianMatrix, h: &[f64], energy: Option<f64>) -> Result<Option<Barrier>> {
    let n = space.len();
    let (mut value, mut grad, mut hess) = match space {
        Space::Diagonal(_) => {
            let p = sigma.diagonal();
            if p.iter().any(|&v| !(v > 0.0)) {
                return Ok(None);
            }
            let value = p.iter().map(|v| v.ln()).sum();
            let grad = p.iter().map(|v| 1.0 / v).collect();
            let hess = DMatrix::from_diagonal(&DVector::from_iterator(n, p.iter().map(|v| -1.0 / (v * v))));
            (value, grad, hess)
        }
        Space::Dense(_) => {
            let e = eig_hermitian(sigma)?;
            if e.values.iter().any(|&v| !(v > 0.0)) {
                return Ok(None);
            }
            let value = e.values.iter().map(|v| v.ln()).sum();
            let inv = e.reconstruct_with(|v| 1.0 / v);
            let grad = space.coords(&inv);
            let mut hess = DMatrix::zeros(n, n);
            for k in 0..n {
                let mut unit = vec![0.0; n];
                unit[k] = 1.0;
                let bk = space.to_sigma(&unit);
                let col = space.coords(&(&(inv.matrix() * bk.matrix()) * inv.matrix()).hermitian_part());
                for l in 0..n {
                    hess[(l, k)] = -col[l];
                }
            }
            (value, grad, hess)
        }
    };
    if let Some(e) = energy {
        let slack = e - space.coords(sigma).iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        if !(slack > 0.0) {
            return Ok(None);
        }
        value += slack.ln();
        for k in 0..n {
            grad[k] -= h[k] / slack;
            for l in 0..n {
                hess[(k, l)] -= h[k] * h[l] / (slack * slack);
            }
        }
    }
    Ok(Some(Barrier { value, grad, hess }))
}

/// Newton direction for maximizing with Hessian `hess` and gradient `g` on
/// `{⟨a, Δ⟩ = 0}`, computed in the variables `Δ / scale`. Returns the
/// direction and the Newton decrement `gᵀΔ`.
fn newton_direction(hess: &DMatrix<f64>, g: &[f64], a: &[f64], scale: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = g.len();
    let hs = DMatrix::from_fn(n, n, |i, j| scale[i] * hess[(i, j)] * scale[j]);
    let magnitude = hs.amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = hs[(i, j)];
            }
            kkt[(i, i)] -= reg;
            kkt[(i, n)] = scale[i] * a[i];
            kkt[(n, i)] = scale[i] * a[i];
        }
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            rhs[i] = -scale[i] * g[i];
        }
        if let Some(sol) = kkt.lu().solve(&rhs) {
            let dz: Vec<f64> = (0..n).map(|i| scale[i] * sol[i]).collect();
            let dec: f64 = dz.iter().zip(g).map(|(a, b)| a * b).sum();
            if dz.iter().all(|v| v.is_finite()) && dec >= 0.0 {
                return Some((dz, dec));
            }
        }
        reg = if reg == 0.0 { 1e-12 * magnitude } else { reg * 100.0 };
    }
    None
}

/// Largest step (with a margin) keeping a diagonal probe strictly feasible.
fn max_step(z: &[f64], dz: &[f64], h: &[f64], energy: Option<f64>) -> f64 {
    let mut t: f64 = 1.0;
    for (p, d) in z.iter().zip(dz) {
        if *d < 0.0 {
            t = t.min(0.99 * -p / d);
        }
    }
    if let Some(e) = energy {
        let slack = e - z.iter().zip(h).map(|(a, b)| a * b).sum::<f64>();
        let rate: f64 = dz.iter().zip(h).map(|(a, b)| a * b).sum();
        if rate > 0.0 {
            t = t.min(0.99 * slack / rate);
        }
    }
    t
}

/// `f(σ)` and its gradient `R = tr_B(S⁻¹ X₊ S⁻¹)` (with `|X|` in general mode).
fn evaluate(problem: &EcdProblem, space: Space, sigma: HermitianMatrix) -> Result<Evaluation> {
    let di = problem.dim_in();
    let general = problem.mode == Mode::General;
    let sqrt_sigma = match space {
        Space::Diagonal(_) => None,
        Space::Dense(_) => Some(eig_hermitian(&sigma)?.reconstruct_with(|v| v.max(0.0).sqrt())),
    };
    let sqrt_p: Vec<f64> = sigma.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();

    let mut blocks = problem
        .choi
        .blocks
        .par_iter()
        .map(|b| -> Result<BlockEval> {
            let j = b.matrix.matrix().as_dmatrix();
            let (s, sd, x) = match &sqrt_sigma {
                None => {
                    let sd: Vec<f64> = b.indices.iter().map(|&g| sqrt_p[g % di]).collect();
                    let x = DMatrix::from_fn(j.nrows(), j.ncols(), |r, c| j[(r, c)] * (sd[r] * sd[c]));
                    let s = ComplexMatrix::from_real_diagonal(&sd);
                    (s, Some(sd), x)
                }
                Some(root) => {
                    let s = restrict_reference(&b.indices, root, di);
                    let x = s.as_dmatrix() * j * s.as_dmatrix();
                    (s, None, x)
                }
            };
            let eig = eig_hermitian(&ComplexMatrix::from_dmatrix(x).hermitian_part())?;
            Ok(BlockEval { s, sd, eig, threshold: 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = blocks.iter().flat_map(|b| b.eig.values.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = EIGEN_FLOOR * scale;
    let parts = blocks
        .par_iter_mut()
        .zip(&problem.choi.blocks)
        .map(|(be, b)| {
            be.threshold = threshold;
            let signs = signs(&be.eig.values, threshold, general);
            let value: f64 = be.eig.values.iter().zip(&signs).map(|(l, s)| l * s).sum();
            let j = b.matrix.matrix().as_dmatrix();
            let v = be.eig.vectors.as_dmatrix();
            let mut grad = DMatrix::<C64>::zeros(di, di);
            match &be.sd {
                Some(sd) => {
                    // R_i = Re(P D J)_ii / s_i with P the sign projector
                    let dj = DMatrix::from_fn(j.nrows(), j.ncols(), |r, c| j[(r, c)] * sd[r]);
                    let g = v.adjoint() * dj;
                    for (i, &gi) in b.indices.iter().enumerate() {
                        if sd[i] == 0.0 {
                            continue;
                        }
                        let mut acc = 0.0;
                        for (k, &sg) in signs.iter().enumerate() {
                            if sg != 0.0 {
                                acc += sg * (v[(i, k)] * g[(k, i)]).re;
                            }
                        }
                        let a = gi % di;
                        grad[(a, a)] += C64::new(acc / sd[i], 0.0);
                    }
                }
                None => {
                    let js = j * be.s.as_dmatrix();
                    let kept: Vec<usize> = (0..signs.len()).filter(|&k| signs[k] != 0.0).collect();
                    let mut u = DMatrix::<C64>::zeros(j.nrows(), kept.len());
                    for (c, &k) in kept.iter().enumerate() {
                        let w = 1.0 / be.eig.values[k].abs().sqrt();
                        let col = &js * v.column(k);
                        for r in 0..j.nrows() {
                            u[(r, c)] = col[r] * w;
                        }
                    }
                    let zmat = ComplexMatrix::from_dmatrix(&u * u.adjoint());
                    let mut out = ComplexMatrix::zeros(di, di);
                    accumulate_partial_trace(&b.indices, &zmat, di, &mut out);
                    grad = out.into_dmatrix();
                }
            }
            (value, grad)
        })
        .collect::<Vec<_>>();

    let mut value = 0.0;
    let mut grad = DMatrix::<C64>::zeros(di, di);
    for (v, g) in parts {
        value += v;
        grad += g;
    }
    Ok(Evaluation { value, sigma, grad: ComplexMatrix::from_dmatrix(grad).hermitian_part(), blocks })
}

/// Relative size below which an eigenvalue of `X` counts as zero.
const EIGEN_FLOOR: f64 = 1e-13;

/// Weight of each eigenvalue in `f`: `1` for positive, `−1` for negative
/// (general mode only), `0` otherwise.
fn signs(values: &[f64], threshold: f64, general: bool) -> Vec<f64> {
    values
        .iter()
        .map(|&l| {
            if l > threshold {
                1.0
            } else if general && l < -threshold {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Hessian of `f` in the coordinates of `space`.
fn hessian(problem: &EcdProblem, space: Space, ev: &Evaluation) -> Result<DMatrix<f64>> {
    match space {
        Space::Diagonal(d) => Ok(diagonal_hessian(problem, d, ev)),
        Space::Dense(_) => {
            // central differences of the analytic gradient
            let n = space.len();
            let z = space.coords(&ev.sigma);
            let floor = eig_hermitian(&ev.sigma)?.values[0];
            let step = 1e-4 * floor;
            let columns = (0..n)
                .into_par_iter()
                .map(|k| -> Result<Vec<f64>> {
                    let mut plus = z.clone();
                    let mut minus = z.clone();
                    plus[k] += step;
                    minus[k] -= step;
                    let gp = space.coords(&evaluate(problem, space, space.to_sigma(&plus))?.grad);
                    let gm = space.coords(&evaluate(problem, space, space.to_sigma(&minus))?.grad);
                    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut hess = DMatrix::from_fn(n, n, |i, k| columns[k][i]);
            hess = (&hess + hess.transpose()) * 0.5;
            Ok(hess)
        }
    }
}

/// Exact Hessian of `f(p)` for a diagonal probe, from second-order
/// eigenvalue perturbation of `X = D J D`, `D = diag(√p)`.
fn diagonal_hessian(problem: &EcdProblem, d: usize, ev: &Evaluation) -> DMatrix<f64> {
    let general = problem.mode == Mode::General;
    problem
        .choi
        .blocks
        .par_iter()
        .zip(&ev.blocks)
        .map(|(b, be)| {
            let sd = be.sd.as_ref().expect("diagonal evaluation");
            let m = b.indices.len();
            let j = b.matrix.matrix().as_dmatrix();
            let v = be.eig.vectors.as_dmatrix();
            let lam = &be.eig.values;
            let sg = signs(lam, be.threshold, general);
            let dj = DMatrix::from_fn(m, m, |r, c| j[(r, c)] * sd[r]);
            let g = v.adjoint() * dj;

            // derivatives in s = √p
            let mut p_sign = DMatrix::<C64>::zeros(m, m);
            for (k, &s) in sg.iter().enumerate() {
                if s != 0.0 {
                    let col = v.column(k);
                    p_sign += (col * col.adjoint()) * C64::new(s, 0.0);
                }
            }
            let first: Vec<f64> =
                (0..m).map(|i| 2.0 * (0..m).map(|k| sg[k] * (v[(i, k)] * g[(k, i)]).re).sum::<f64>()).collect();
            let mut hs = DMatrix::from_fn(m, m, |i, jx| 2.0 * (p_sign[(jx, i)] * j[(i, jx)]).re);

            let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
            for k in 0..m {
                for l in 0..m {
                    let w = match (sg[k] as i32, sg[l] as i32, general) {
                        (1, 0, false) | (1, -1, false) => 2.0 / (lam[k] - lam[l]),
                        (1, -1, true) => 4.0 / (lam[k] - lam[l]),
                        (1, 0, true) => 2.0 / lam[k],
                        (-1, 0, true) => 2.0 / lam[k].abs(),
                        _ => 0.0,
                    };
                    if w > 0.0 && w.is_finite() {
                        pairs.push((k, l, w.sqrt()));
                    }
                }
            }
            if !pairs.is_empty() {
                let a = DMatrix::from_fn(m, pairs.len(), |i, c| {
                    let (k, l, w) = pairs[c];
                    (g[(k, i)] * v[(i, l)] + (v[(i, k)] * g[(l, i)]).conj()) * w
                });
                let gram = &a * a.adjoint();
                hs += gram.map(|z| z.re);
            }

            // change of variables to p
            let mut hp = DMatrix::<f64>::zeros(d, d);
            for i in 0..m {
                if sd[i] == 0.0 {
                    continue;
                }
                let ai = b.indices[i] % d;
                for jx in 0..m {
                    if sd[jx] == 0.0 {
                        continue;
                    }
                    let aj = b.indices[jx] % d;
                    hp[(ai, aj)] += hs[(i, jx)] / (4.0 * sd[i] * sd[jx]);
                }
                hp[(ai, ai)] -= first[i] / (4.0 * sd[i].powi(3));
            }
            hp
        })
        .reduce(|| DMatrix::zeros(d, d), |a, b| a + b)
}

/// Builds both certificates from an evaluation.
fn certify(problem: &EcdProblem, ev: &Evaluation, energy: Option<f64>) -> Result<Certified> {
    let di = problem.dim_in();
    let general = problem.mode == Mode::General;
    let mut primal_blocks = Vec::with_capacity(ev.blocks.len());
    let mut z_blocks = Vec::with_capacity(ev.blocks.len());
    let mut primal_value = 0.0;
    let mut r = ComplexMatrix::zeros(di, di);

    for (be, b) in ev.blocks.iter().zip(&problem.choi.blocks) {
        let m = b.indices.len();
        let j = b.matrix.matrix();

        let mut p = ComplexMatrix::zeros(m, m);
        let mut zp = ComplexMatrix::zeros(m, m);
        let js = j * &be.s;
        for (k, &lam) in be.eig.values.iter().enumerate() {
            let v = be.eig.vector(k);
            if lam > be.threshold {
                add_outer(&mut p, &v, 1.0);
                add_outer(&mut zp, &js.apply(&v), 1.0 / lam);
            } else if general && lam < -be.threshold {
                add_outer(&mut p, &v, -1.0);
            }
        }
        let w = conjugate(&be.s, &p);
        primal_value += (j * w.matrix()).trace().re;
        primal_blocks.push(Block { indices: b.indices.clone(), matrix: w });

        // Z ⪰ 0 and Z ⪰ J
        let zp = zp.hermitian_part();
        let gap = eig_hermitian(&(&b.matrix - &zp))?;
        let z = &zp + &gap.reconstruct_with(|v| v.max(0.0));
        let contribution = if general { (&z.scale(2.0) - &b.matrix).into_matrix() } else { z.matrix().clone() };
        accumulate_partial_trace(&b.indices, &contribution, di, &mut r);
        z_blocks.push(Block { indices: b.indices.clone(), matrix: z });
    }

    let r = r.hermitian_part();
    let (dual_value, x, y) = best_affine(&r, &problem.hamiltonian, energy)?;

    let dim = problem.choi.dim;
    Ok(Certified {
        primal_value,
        primal_variable: BlockHermitian { dim, blocks: primal_blocks },
        sigma: ev.sigma.clone(),
        dual_value,
        z: BlockHermitian { dim, blocks: z_blocks },
        x,
        y,
        r,
    })
}

/// `min_{y ≥ 0} λ_max(R − yH) + yE`, returning `(value, x, y)`.
fn best_affine(r: &HermitianMatrix, h: &Hamiltonian, energy: Option<f64>) -> Result<(f64, f64, f64)> {
    let lmax = |y: f64| -> Result<f64> {
        if r.is_diagonal(0.0) {
            Ok(r.diagonal().iter().zip(h.spectrum()).map(|(a, e)| a - y * e).fold(f64::NEG_INFINITY, f64::max))
        } else {
            let e = eig_hermitian(&(r - &h.matrix().scale(y)))?;
            Ok(*e.values.last().unwrap())
        }
    };
    let Some(e) = energy else {
        let x = lmax(0.0)?;
        return Ok((x, x, 0.0));
    };
    if r.is_diagonal(0.0) {
        let rd = r.diagonal();
        let spec = h.spectrum();
        let mut candidates = vec![0.0];
        for k in 0..rd.len() {
            for l in 0..k {
                let dh = spec[k] - spec[l];
                if dh != 0.0 {
                    let y = (rd[k] - rd[l]) / dh;
                    if y > 0.0 && y.is_finite() {
                        candidates.push(y);
                    }
                }
            }
        }
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for y in candidates {
            let x = lmax(y)?;
            if x + y * e < best.0 {
                best = (x + y * e, x, y);
            }
        }
        return Ok(best);
    }
    let eig = eig_hermitian(r)?;
    let spread = eig.values.last().unwrap() - eig.values[0];
    let (mut a, mut b) = (0.0, (spread / e).max(0.0) * 1.01 + 1e-300);
    let phi = |y: f64| -> Result<f64> { Ok(lmax(y)? + y * e) };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c1 = b - g * (b - a);
    let mut c2 = a + g * (b - a);
    let (mut f1, mut f2) = (phi(c1)?, phi(c2)?);
    for _ in 0..120 {
        if f1 < f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - g * (b - a);
            f1 = phi(c1)?;
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + g * (b - a);
            f2 = phi(c2)?;
        }
    }
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for y in [0.0, a, b, 0.5 * (a + b)] {
        let x = lmax(y)?;
        if x + y * e < best.0 {
            best = (x + y * e, x, y);
        }
    }
    Ok(best)
}

fn residuals(problem: &EcdProblem, primal: &Certified, dual: &Certified, energy: Option<f64>) -> Result<Residuals> {
    let di = problem.dim_in();
    let general = problem.mode == Mode::General;
    let mut res = Residuals {
        primal_trace: (primal.sigma.trace() - 1.0).abs(),
        primal_energy: match energy {
            Some(e) => {
                (primal.sigma.diagonal().iter().zip(problem.hamiltonian.spectrum()).map(|(p, h)| p * h).sum::<f64>()
                    - e)
                    .max(0.0)
            }
            None => 0.0,
        },
        ..Residuals::default()
    };
    let neg = |m: &HermitianMatrix| -> Result<f64> { Ok((-m.min_eigenvalue()?).max(0.0)) };
    for b in &primal.primal_variable.blocks {
        let s2 = restrict_reference(&b.indices, &primal.sigma, di).hermitian_part();
        let upper = neg(&(&s2 - &b.matrix))?;
        let lower = if general { neg(&(&s2 + &b.matrix))? } else { neg(&b.matrix)? };
        res.primal_cone = res.primal_cone.max(upper).max(lower);
    }
    for (zb, jb) in dual.z.blocks.iter().zip(&problem.choi.blocks) {
        res.dual_cone = res.dual_cone.max(neg(&zb.matrix)?).max(neg(&(&zb.matrix - &jb.matrix))?);
    }
    let affine =
        &(&HermitianMatrix::identity(di).scale(dual.x) + &problem.hamiltonian.matrix().scale(dual.y)) - &dual.r;
    res.dual_affine = neg(&affine)?;
    Ok(res)
}

/// Restriction of `1_B ⊗ M` to the listed `B ⊗ A` indices.
fn restrict_reference(indices: &[usize], m: &HermitianMatrix, dim_in: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(indices.len(), indices.len(), |i, j| {
        let (gi, gj) = (indices[i], indices[j]);
        if gi / dim_in == gj / dim_in {
            m.get(gi % dim_in, gj % dim_in)
        } else {
            C64::default()
        }
    })
}

/// `S A S` for Hermitian `S` and `A`.
fn conjugate(s: &ComplexMatrix, a: &ComplexMatrix) -> HermitianMatrix {
    (&(s * a) * s).hermitian_part()
}

fn add_outer(m: &mut ComplexMatrix, u: &[C64], w: f64) {
    let n = u.len();
    for i in 0..n {
        if u[i] == C64::default() {
            continue;
        }
        let ui = u[i] * w;
        for (j, uj) in u.iter().enumerate() {
            m.set(i, j, m.get(i, j) + ui * uj.conj());
        }
    }
}

fn accumulate_partial_trace(indices: &[usize], m: &ComplexMatrix, dim_in: usize, out: &mut ComplexMatrix) {
    for (i, &gi) in indices.iter().enumerate() {
        for (j, &gj) in indices.iter().enumerate() {
            if gi / dim_in == gj / dim_in {
                let (a, a2) = (gi % dim_in, gj % dim_in);
                out.set(a, a2, out.get(a, a2) + m.get(i, j));
            }
        }
    }
}

/// Solves with default options and returns `(norm_lower, norm_upper)`.
pub fn norm_bracket(problem: &EcdProblem) -> Result<(f64, f64)> {
    let cert = solve(problem, &SolverOptions::default())?;
    if cert.status == SolverStatus::InfeasibleNumerics {
        return Err(EcdError::SolverFailure { residual: cert.residuals.max() });
    }
    Ok((cert.norm_lower, cert.norm_upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{
        attenuator, phase_flip, random_channel_difference, random_hermitian_preserving, unitary_evolution, Channel,
        HermitianPreservingMap,
    };
    use crate::sdp::{assemble, assemble_unconstrained};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit() -> Hamiltonian {
        Hamiltonian::new(vec![0.0, 1.0]).unwrap()
    }

    fn check(cert: &EcdCertificate) {
        assert_eq!(cert.status, SolverStatus::Optimal, "{cert:?}");
        assert!(cert.norm_lower <= cert.norm_upper + 1e-12);
        assert!(cert.residuals.max() < 1e-9, "{:?}", cert.residuals);
    }

    #[test]
    fn diagonal_hessian_matches_finite_differences() {
        for general in [false, true] {
            let d = 6;
            let n1 = attenuator(0.8, d).unwrap();
            let n2 = attenuator(0.3, d).unwrap();
            let delta = if general {
                HermitianPreservingMap::weighted_difference(0.7, &n1, 0.3, &n2).unwrap()
            } else {
                HermitianPreservingMap::difference(&n1, &n2).unwrap()
            };
            let problem = assemble(&delta, &Hamiltonian::number_operator(d), 1.5).unwrap();
            assert!(problem.structured);
            let space = Space::Diagonal(d);
            let p = vec![0.3, 0.25, 0.2, 0.12, 0.08, 0.05];
            let ev = evaluate(&problem, space, space.to_sigma(&p)).unwrap();
            let hess = hessian(&problem, space, &ev).unwrap();
            let step = 1e-6;
            for k in 0..d {
                let mut plus = p.clone();
                let mut minus = p.clone();
                plus[k] += step;
                minus[k] -= step;
                let gp = evaluate(&problem, space, space.to_sigma(&plus)).unwrap().grad.diagonal();
                let gm = evaluate(&problem, space, space.to_sigma(&minus)).unwrap().grad.diagonal();
                for l in 0..d {
                    let fd = (gp[l] - gm[l]) / (2.0 * step);
                    assert!(
                        (fd - hess[(l, k)]).abs() < 1e-5 * (1.0 + fd.abs()),
                        "general={general} ({l},{k}): {fd} vs {}",
                        hess[(l, k)]
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let delta = random_hermitian_preserving(2, 3, &mut rng);
        let problem = assemble(&delta, &qubit(), 0.4).unwrap();
        let space = Space::Dense(2);
        let z = vec![0.7, 0.3, 0.1, -0.05];
        let ev = evaluate(&problem, space, space.to_sigma(&z)).unwrap();
        let g = space.coords(&ev.grad);
        for k in 0..4 {
            let step = 1e-6;
            let mut plus = z.clone();
            let mut minus = z.clone();
            plus[k] += step;
            minus[k] -= step;
            let fd = (evaluate(&problem, space, space.to_sigma(&plus)).unwrap().value
                - evaluate(&problem, space, space.to_sigma(&minus)).unwrap().value)
                / (2.0 * step);
            assert!((fd - g[k]).abs() < 1e-6, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn phase_flip_closed_form() {
        let delta = HermitianPreservingMap::difference(&Channel::identity(2), &phase_flip()).unwrap();
        for (e, expected) in [(0.25, 4.0 * (0.25f64 * 0.75).sqrt()), (0.5, 2.0), (0.9, 2.0)] {
            let cert = solve(&assemble(&delta, &qubit(), e).unwrap(), &SolverOptions::default()).unwrap();
            check(&cert);
            assert!((cert.norm_midpoint() - expected).abs() < 1e-5, "E={e}: {cert:?}");
        }
        let cert = solve(&assemble_unconstrained(&delta, &qubit()).unwrap(), &SolverOptions::default()).unwrap();
        assert!((cert.norm_midpoint() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn unitary_closed_form() {
        let h = qubit();
        let t: f64 = 1.0;
        let delta = HermitianPreservingMap::difference(&unitary_evolution(&h, t), &Channel::identity(2)).unwrap();
        let cert = solve(&assemble_unconstrained(&delta, &h).unwrap(), &SolverOptions::default()).unwrap();
        check(&cert);
        assert!((cert.norm_midpoint() - 2.0 * (t / 2.0).sin()).abs() < 1e-5);
    }

    #[test]
    fn dense_and_structured_paths_agree() {
        let d = 4;
        let delta =
            HermitianPreservingMap::difference(&attenuator(0.9, d).unwrap(), &attenuator(0.5, d).unwrap()).unwrap();
        let problem = assemble(&delta, &Hamiltonian::number_operator(d), 1.0).unwrap();
        let a = solve(&problem, &SolverOptions::default()).unwrap();
        let b = solve(&problem.densified(), &SolverOptions::default()).unwrap();
        check(&a);
        check(&b);
        assert!((a.norm_midpoint() - b.norm_midpoint()).abs() < 1e-5);
    }

    #[test]
    fn random_maps_certify() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..6 {
            let delta = if k % 2 == 0 {
                random_channel_difference(2, 2, &mut rng)
            } else {
                random_hermitian_preserving(2, 3, &mut rng)
            };
            let cert = solve(&assemble(&delta, &qubit(), 0.3).unwrap(), &SolverOptions::default()).unwrap();
            check(&cert);
        }
    }

    #[test]
    fn certificate_json_roundtrip() {
        let delta = HermitianPreservingMap::difference(&Channel::identity(2), &phase_flip()).unwrap();
        let cert = solve(&assemble(&delta, &qubit(), 0.3).unwrap(), &SolverOptions::default()).unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: EcdCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
    }

    #[test]
    fn zero_map_is_zero() {
        let id = Channel::identity(3);
        let delta = HermitianPreservingMap::difference(&id, &id).unwrap();
        let cert = solve(&assemble(&delta, &Hamiltonian::number_operator(3), 1.0).unwrap(), &SolverOptions::default())
            .unwrap();
        assert_eq!(cert.norm_upper, 0.0);
    }
}
