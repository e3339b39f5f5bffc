//! Spin squeezing of nitrogen-vacancy ensembles coupled to a cavity-optomechanical
//! system.
//!
//! The crate covers the whole chain from raw device parameters to squeezing figures
//! of merit:
//!
//! * [`normal_modes`]: linearized optomechanics, Bogoliubov modes and the effective
//!   one-axis-twisting strength χ.
//! * [`modulation`]: Bessel sidebands of the frequency-modulated Dicke model and the
//!   two-axis-twisting amplitude condition.
//! * [`spin_algebra`]: collective spin operators, Dicke bases, moments and the
//!   Wineland squeezing parameter.
//! * [`dynamics`]: exact master-equation evolution (maximal-j, permutation-invariant
//!   blocks, full 2^N oracle), trotterized TAT and the spin-boson verifier.
//! * [`cumulant`]: second-order moment closures, Holstein–Primakoff closed forms and
//!   analytic optima.
//! * [`experiment`]: configuration, runs, sweeps, scaling fits and the validation suite
//!   used by the command-line runner.

pub mod cumulant;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod fit;
pub mod modulation;
pub mod normal_modes;
pub mod numeric;
pub mod ode;
pub mod spin_algebra;

pub use error::{Error, Result};

/// Complex scalar used for all density matrices and operators.
pub type C64 = num_complex::Complex64;
