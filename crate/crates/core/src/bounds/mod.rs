//! Closed-form continuity and speed-limit bounds, orthogonality witnesses,
//! and campaigns checking the bounds against certified norm values.

pub mod formulas;
pub mod report;
pub mod verify;
pub mod witness;

pub use formulas::{
    capacity_continuity_bound, entropy_continuity_bound, entropy_trivial_bound, fixed_epsilon_prime,
    margolus_levitin_time, optimized_entropy_continuity_bound, speed_limit_bound, speed_limit_epsilon,
    telescoping_bound, truncation_step_bound, CapacityBound, EntropyBound, TelescopingBound,
};
pub use report::{format_float, write_csv, write_json_lines, BoundReport, VERIFY_TOL};
pub use verify::{half_norm, random_energy_probe, speed_limit_campaign, verify_entropy_bound, CampaignPoint};
pub use witness::{orthogonality_witness, WitnessResult, HULL_TOL};
