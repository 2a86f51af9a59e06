//! Clock-driven machines: the agent is a particle of constant speed whose
//! position switches a system interaction on and off.
//!
//! [`semi_analytic`] integrates over the clock wavefunction in closed form;
//! [`lattice`] places the clock on a finite ring and hands the whole machine to
//! [`crate::machine`] for exact propagation.

pub mod lattice;
pub mod profile;
pub mod semi_analytic;
pub mod wavefunction;

pub use lattice::{lattice_model, lattice_simulate, LatticeClock};
pub use profile::{
    build_vs_from_unitary, dressed_unitary, effective_unitary, InteractionProfile, RaisedCosine,
};
pub use semi_analytic::{
    check_clock_uncertainty, clock_qsl_chain, final_energy, final_system_state, mean_work,
    verify_clock, ClockMachineSpec,
};
pub use wavefunction::{
    clock_energy_variance, flat_top, optimal_wavefunction, random_admissible, truncated_gaussian,
    variational_minimize, ClockState, ClockWavefunction, GroundState,
};
