//! Open-system collective spin dynamics: OAT master equation, trotterized TAT,
//! effective TAT, and verification simulators.

mod brute;
mod engine;
mod evolve;
mod exact;
mod noise;
mod result;
mod spin_boson;

pub use brute::MAX_SPINS as BRUTE_FORCE_MAX_SPINS;
pub use engine::{Axis, Segment};
pub use evolve::{
    brute_force_oracle, evolve_effective_tat, evolve_oat_master, evolve_tat_sequence, oat_unitary_state, TatSchedule,
    POSITIVITY_FLOOR,
};
pub use noise::NoiseParams;
pub use result::{fmt17, EvolutionResult, PositivityCheck, Representation, RunDiagnostics, SolverOptions};
pub use spin_boson::{evolve_dicke_spin_boson, SpinBosonResult, TRUNCATION_TOL};
