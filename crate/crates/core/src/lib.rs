//! Numerical checks of power bounds for autonomous quantum machines.
//!
//! A machine is a system coupled to an agent under a time-independent total
//! Hamiltonian. The agent's energy fluctuation caps the power it can extract
//! from the system; this crate builds machines, evolves them and measures how
//! close they come to the cap.

pub mod bounds;
pub mod clockwork;
pub mod distribution;
pub mod error;
pub mod machine;
pub mod operator;
pub mod random;
pub mod report;
pub mod scenarios;

pub use bounds::{verify, BoundReport, QslChainReport, VerifyOptions};
pub use clockwork::{ClockMachineSpec, ClockState, ClockWavefunction, InteractionProfile, LatticeClock};
pub use distribution::EnergyDistribution;
pub use error::{Error, Result};
pub use machine::{BipartiteModel, EvolutionResult};
pub use operator::{DensityMatrix, HermitianSpectrum, Matrix, Operator, UnitaryOperator, C64};
pub use report::CheckReport;
pub use scenarios::{run_scenario, ScenarioKind, ScenarioOutcome, ScenarioParams, ScenarioResult, ScenarioSpec};
