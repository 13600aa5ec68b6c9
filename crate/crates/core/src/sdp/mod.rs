//! Energy-constrained diamond norm as a semidefinite program, its solver,
//! and two independent cross-checks.

pub mod blocks;
pub mod discrimination;
pub mod oracle;
pub mod problem;
pub mod properties;
pub mod solver;

pub use blocks::{BlockHermitian, DENSE_CHOI_CAP};
pub use discrimination::{discrimination_check, DiscriminationResult};
pub use oracle::{brute_force_oracle, OracleOptions, OracleResult, ORACLE_DIM_CAP};
pub use problem::{assemble, assemble_from_choi, assemble_unconstrained, EcdProblem, Mode};
pub use properties::{norm_property_trial, PropertyTrial, TENSOR_TOL};
pub use solver::{norm_bracket, solve, EcdCertificate, Residuals, SolverOptions, SolverStatus};
