//! Grids, quadrature, oscillatory tail integrals, special functions and
//! Fourier transforms with analytic treatment of non-decaying parts.

mod asymptotic;
mod extrapolate;
mod fourier;
mod gauss;
mod grid;
mod jet;
mod oscillatory;
mod special;
mod sum;

pub use asymptotic::{EdgePiece, Expansion, PowerTerm};
pub use extrapolate::{neville_at_zero, NevilleEstimate};
pub use fourier::{fourier_transform, inverse_fourier_transform, AsymptoticSplit, Transformed};
pub use gauss::{gauss_legendre, integrate_pieces, GaussLegendre};
pub use jet::Jet;
pub use grid::{quad, GridSpec, Sampled, SampledComplexFunction, SampledRealFunction};
pub use oscillatory::{
    apodized_tail_integral, osc_tail_integral, tail_partial_integral, TailIntegral, TailModel,
};
pub use special::{sine_integral, upper_gamma};
pub use sum::NeumaierSum;
