//! Weak-valued momentum transfer for which-way measurements in twin-slit
//! interferometry.
//!
//! The crate computes the pseudo-probability distribution `P_wv(℘)` of the
//! momentum transferred by a which-way measurement (WWM), along two
//! independent numerical routes, evaluates its widths and moments, compares
//! it with other momentum-transfer formalisms and simulates the weak
//! measurement protocol that observes it.
//!
//! Units: positions are in the same unit as the slit separation `s`,
//! momenta carry an explicit `hbar`. Every public entry point defaults to
//! `hbar = 1`, `s = 1` through the CLI.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod formalisms;
pub mod numerics;
pub mod physics;
pub mod transfer;
pub mod weaksim;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
