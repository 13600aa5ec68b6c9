//! States, channels, grounded Hamiltonians and the channel families used in
//! the experiments.

pub mod channel;
pub mod families;
pub mod hamiltonian;
pub mod state;

pub use channel::{
    apply_via_choi, energy_limit_margin, verify_energy_limited, Channel, ChannelSpec, CpMap, EnergyLimit,
    HermitianPreservingMap, CPTP_TOL,
};
pub use families::{
    attenuator, displacement, evolution_operator, phase_flip, random_channel, random_channel_difference, random_cp_map,
    random_hermitian_preserving, squeezing, unitary_evolution,
};
pub use hamiltonian::{
    g_function, gibbs_state, max_entropy_at_energy, mean_energy, EntropyModel, GibbsState, Hamiltonian, GIBBS_TOL,
};
pub use state::{
    coherent_state, conditional_entropy, random_density, random_pure_vector, von_neumann_entropy, CoherentState,
    DensityMatrix,
};
