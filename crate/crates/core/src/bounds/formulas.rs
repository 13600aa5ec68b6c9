//! Closed-form bound evaluators. Entropies are in bits.

use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use serde::{Deserialize, Serialize};

use crate::error::{EcdError, Result};
use crate::quantum::{g_function, EntropyModel};

/// `min(1, (4tE)^{1/3})`: ceiling on `½‖U_t − id‖⋄E` for any grounded `H`.
pub fn speed_limit_bound(t: f64, e: f64) -> Result<f64> {
    if !(t >= 0.0) || !(e >= 0.0) {
        return Err(EcdError::Domain(format!("speed limit needs t, E >= 0, got t={t}, E={e}")));
    }
    Ok((4.0 * t * e).cbrt().min(1.0))
}

/// Earliest time at which an evolution with mean energy `e` can reach an
/// orthogonal state, `1/(4E)`.
pub fn margolus_levitin_time(e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(EcdError::Domain(format!("energy must be positive, got {e}")));
    }
    Ok(1.0 / (4.0 * e))
}

/// `tE/(2ε) + √ε`, the trace distance estimate after cutting the spectrum
/// at `E/ε`.
pub fn truncation_step_bound(t: f64, e: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(EcdError::Domain(format!("cutoff parameter must lie in (0, 1], got {epsilon}")));
    }
    if !(t >= 0.0) || !(e >= 0.0) {
        return Err(EcdError::Domain(format!("t and E must be non-negative, got t={t}, E={e}")));
    }
    Ok(t * e / (2.0 * epsilon) + epsilon.sqrt())
}

/// The cutoff `ε = (tE/2)^{2/3}`, at which [`truncation_step_bound`] equals
/// `2(tE/2)^{1/3} = (4tE)^{1/3}`. The exact minimizer is `ε = (tE)^{2/3}`,
/// giving the slightly smaller `1.5 (tE)^{1/3}`.
pub fn speed_limit_epsilon(t: f64, e: f64) -> f64 {
    (0.5 * t * e).powf(2.0 / 3.0)
}

/// `6ε′ S(γ_B(Ẽ/δ)) + 3g(ε′)` with `δ = (ε′−ε)/(1+ε′)`: continuity of the
/// conditional entropy `S(B|C)` for channels with `½‖N₁−N₂‖⋄E ≤ ε` and
/// output energies at most `Ẽ`.
pub fn entropy_continuity_bound(epsilon: f64, epsilon_prime: f64, e_tilde: f64, h_b: &EntropyModel) -> Result<f64> {
    if !(epsilon >= 0.0) || !(epsilon_prime <= 1.0) {
        return Err(EcdError::Domain(format!("need 0 <= ε < ε' <= 1, got ε={epsilon}, ε'={epsilon_prime}")));
    }
    if epsilon_prime <= epsilon {
        return Err(EcdError::Domain(format!("ε' = {epsilon_prime} must exceed ε = {epsilon}")));
    }
    if !(e_tilde >= 0.0) {
        return Err(EcdError::Domain(format!("output energy must be non-negative, got {e_tilde}")));
    }
    let delta = (epsilon_prime - epsilon) / (1.0 + epsilon_prime);
    Ok(6.0 * epsilon_prime * h_b.gibbs_entropy(e_tilde / delta)? + 3.0 * g_function(epsilon_prime)?)
}

/// `2 S(γ_B(Ẽ))`, valid for any pair of channels.
pub fn entropy_trivial_bound(e_tilde: f64, h_b: &EntropyModel) -> Result<f64> {
    if !(e_tilde >= 0.0) {
        return Err(EcdError::Domain(format!("output energy must be non-negative, got {e_tilde}")));
    }
    Ok(2.0 * h_b.gibbs_entropy(e_tilde)?)
}

/// The conventional choice `ε′ = min(1, 2√ε)`.
pub fn fixed_epsilon_prime(epsilon: f64) -> f64 {
    (2.0 * epsilon.sqrt()).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBound {
    pub value: f64,
    pub epsilon_prime: f64,
}

struct ContinuityCost<'a> {
    epsilon: f64,
    e_tilde: f64,
    h_b: &'a EntropyModel,
}

impl ContinuityCost<'_> {
    fn at(&self, ep: f64) -> f64 {
        entropy_continuity_bound(self.epsilon, ep, self.e_tilde, self.h_b).unwrap_or(f64::INFINITY)
    }
}

impl CostFunction for ContinuityCost<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, ep: &f64) -> std::result::Result<f64, ArgminError> {
        Ok(self.at(*ep))
    }
}

const EPSILON_PRIME_GRID: usize = 64;

/// [`entropy_continuity_bound`] minimized over `ε′ ∈ (ε, 1]`: a log-spaced
/// scan of `ε′ − ε` followed by golden-section refinement around the best
/// scan point. Never worse than the fixed choice `min(1, 2√ε)`.
pub fn optimized_entropy_continuity_bound(epsilon: f64, e_tilde: f64, h_b: &EntropyModel) -> Result<EntropyBound> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(EcdError::Domain(format!("ε must lie in [0, 1), got {epsilon}")));
    }
    if epsilon == 0.0 {
        // the bound vanishes as ε′ → 0⁺
        return Ok(EntropyBound { value: 0.0, epsilon_prime: 0.0 });
    }
    let cost = ContinuityCost { epsilon, e_tilde, h_b };
    let span = 1.0 - epsilon;
    let lo_exp = -12.0f64;
    let grid: Vec<f64> = (0..=EPSILON_PRIME_GRID)
        .map(|k| epsilon + span * 10f64.powf(lo_exp * (1.0 - k as f64 / EPSILON_PRIME_GRID as f64)))
        .collect();
    let fixed = fixed_epsilon_prime(epsilon);

    let mut best = EntropyBound { value: f64::INFINITY, epsilon_prime: 1.0 };
    let mut best_k = grid.len() - 1;
    for (k, &ep) in grid.iter().enumerate() {
        let v = cost.at(ep);
        if v < best.value {
            best = EntropyBound { value: v, epsilon_prime: ep };
            best_k = k;
        }
    }
    if fixed > epsilon {
        let v = cost.at(fixed);
        if v < best.value {
            best = EntropyBound { value: v, epsilon_prime: fixed };
        }
    }

    let a = grid[best_k.saturating_sub(1)];
    let b = grid[(best_k + 1).min(grid.len() - 1)];
    if b > a {
        let solver = GoldenSectionSearch::new(a, b)
            .and_then(|s| s.with_tolerance(1e-10))
            .map_err(|e| EcdError::Domain(e.to_string()))?;
        let res = Executor::new(ContinuityCost { epsilon, e_tilde, h_b }, solver)
            .configure(|s| s.param(grid[best_k].clamp(a, b)).max_iters(200))
            .run()
            .map_err(|e| EcdError::Domain(e.to_string()))?;
        let ep = res.state.best_param.unwrap_or(best.epsilon_prime);
        let v = cost.at(ep);
        if v < best.value {
            best = EntropyBound { value: v, epsilon_prime: ep };
        }
    }
    Ok(best)
}

/// Per-letter bound from telescoping over `n` channel uses, in its
/// simplified and tighter (pre-simplification) forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelescopingBound {
    /// `28δ S(γ_B(4Ẽ/δ)) + 3g(4δ)`.
    pub simplified: f64,
    /// `14δ(1+δ) S(γ_B((1+3δ)Ẽ/δ)) + 3g(2δ(1+δ))`.
    pub tighter: f64,
}

/// `δ = √ε`, `Ẽ = αE + E₀` for channels with `N*(H_B) ⪯ αH_A + E₀`.
pub fn telescoping_bound(epsilon: f64, e: f64, alpha: f64, e0: f64, h_b: &EntropyModel) -> Result<TelescopingBound> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(EcdError::Domain(format!("ε must lie in [0, 1), got {epsilon}")));
    }
    if !(e >= 0.0) || !(alpha >= 0.0) || !(e0 >= 0.0) {
        return Err(EcdError::Domain(format!("E, α, E₀ must be non-negative, got {e}, {alpha}, {e0}")));
    }
    if epsilon == 0.0 {
        return Ok(TelescopingBound { simplified: 0.0, tighter: 0.0 });
    }
    let delta = epsilon.sqrt();
    let et = alpha * e + e0;
    let simplified = 28.0 * delta * h_b.gibbs_entropy(4.0 * et / delta)? + 3.0 * g_function(4.0 * delta)?;
    let tighter = 14.0 * delta * (1.0 + delta) * h_b.gibbs_entropy((1.0 + 3.0 * delta) * et / delta)?
        + 3.0 * g_function(2.0 * delta * (1.0 + delta))?;
    Ok(TelescopingBound { simplified, tighter })
}

/// Continuity bounds on the energy-constrained classical and quantum
/// capacities; both equal twice the simplified telescoping bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityBound {
    pub classical: f64,
    pub quantum: f64,
}

pub fn capacity_continuity_bound(
    epsilon: f64,
    e: f64,
    alpha: f64,
    e0: f64,
    h_b: &EntropyModel,
) -> Result<CapacityBound> {
    let t = telescoping_bound(epsilon, e, alpha, e0, h_b)?.simplified;
    Ok(CapacityBound { classical: 2.0 * t, quantum: 2.0 * t })
}
