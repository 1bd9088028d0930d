//! The weak-valued momentum-transfer distribution P_wv(℘), computed from
//! Fourier products and from the characteristic function.

mod charfn;
mod closed_form;
mod direct;
mod lattice;
mod mixed;
mod tailfit;

pub use charfn::{char_function, default_q_grid, pwv_from_char, CharFunction};
pub use closed_form::{closed_form_for, closed_form_profile, closed_form_pwv, profile_of, Profile};
pub use direct::{classical_pwv, compute_pwv};
pub use tailfit::fit_tail;
pub use lattice::{weak_joint_probability, MomentumLattice};
pub use mixed::{Atom, DensityFn, MixedDistribution};
