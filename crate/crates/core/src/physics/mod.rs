//! Initial twin-slit states, measurement-function sets, momentum
//! distributions before and after the which-way measurement.

mod distributions;
mod measurement;
mod slit;

pub use distributions::{final_momentum_distribution, momentum_distribution};
pub(crate) use distributions::{branch_expansion, kick_reach, momentum_grid, TAIL_POWERS};
pub use measurement::{
    min_disturbance_bound, visibility, BranchKind, Derivs, MeasurementBranch, MeasurementSet, COMPLETENESS_TOL,
    HEAVISIDE_AT_ZERO,
};
pub use slit::{build_state, SlitKind, SlitSpec, Wavefunction};
