//! Widths and apodized moments of momentum-transfer distributions.

mod moments;
mod widths;

pub use moments::{
    apodized_integral, apodized_moment, moment_from_char, n_norm, ApodizationSpec, MomentResult, MAX_MOMENT_ORDER,
};
pub use widths::{
    confidence_halfwidth, support_halfwidth, verify_support_bound, width_report, Extent, NormEntry, SupportCheck,
    WidthReport,
};
