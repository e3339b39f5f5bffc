//! Configuration-driven experiments: single runs, parameter sweeps, scaling fits
//! and the validation suite.

mod config;
mod optimum;
mod run;
mod table;
mod validate;

pub use config::{
    ExperimentConfig, FitSection, GridSpec, Kind, LinkedParam, Method, Metric, ModulationSection, NormalModesSection,
    OutputSection, PhysicalSystem, Resolved, ScheduleSection, SolverSection, SweepAxis, SweepSection, SystemSection,
    Units, ValidateSection,
};
pub use optimum::{minimize_trace, oat_optimum, tat_optimum, trajectory_minimum, Optimum};
pub use run::{run, RunOutput};
pub use table::Table;
pub use validate::{oracle_deviation, validation_suite, Check, ValidationReport, ORACLE_FIXTURES};
