//! Weak measurements with post-selection, and Monte-Carlo reconstruction of
//! P_wv through weak momentum-projector measurements.

mod finite;
mod reconstruct;

pub use finite::{
    anomalous_two_level, exact_postselected_mean, simulate_ladder, simulate_postselected_mean, strong_value,
    weak_value, FiniteSystem, LadderEstimate, MeterSpec, DEFAULT_LADDER,
};
pub use reconstruct::{
    bin_masses, lattice_bin_masses, reconstruct_on_lattice, reconstruct_pwv, ReconstructionResult, POINTS_PER_BIN,
};
