//! Collective angular-momentum algebra on Dicke bases.

mod basis;
mod husimi;
mod moments;
mod operators;
mod state;

pub use basis::{binomial, multiplicity, sector_list, DickeBasis, Sector};
pub use husimi::{css_amplitudes, husimi_sphere_data, HusimiGrid, HusimiPoint};
pub use moments::{
    min_transverse_variance, min_transverse_variance_checked, moment_residue, moments, squeezing_angle,
    squeezing_wineland, MomentSet,
};
pub use operators::{build_operators, ladder_coefficients, CollectiveOps, SpinOperator};
pub use state::{css_state, Block, SpinState, StateData};
