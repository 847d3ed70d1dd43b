//! One-dimensional Levy processes: parametric Levy measures with closed-form
//! truncated moments, characteristic triplets and path-increment samplers.

mod measure;
mod stable;
mod tabulated;
mod triplet;

pub use measure::{
    first_jump_above, one_sided_normalizer, sample_jumps_above, stable_exponent_constant, Jump, LevyMeasureModel,
};
pub(crate) use measure::sample_jumps_with_rate;
pub use stable::sample_standard_stable;
pub use tabulated::TabulatedLaw;
pub use triplet::LevyTriplet;


