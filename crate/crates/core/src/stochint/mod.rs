//! Stochastic integrals of simple integrands against the square-integrable
//! part `L^c_k = P^c_k + M^c_k` of a diagonal cylindrical Levy process,
//! restricted to the first `n` coordinates.

mod identities;
mod path;
mod simple;

pub use identities::{
    ito_isometry_test, martingale_proxy, verify_linearity, verify_stopping, IdentityCheck, IsometryReport, ProxyPoint,
    StoppingRule,
};
pub use path::{refine_grid, uniform_grid, Increments, NodeJump, Part, PathSampler, SamplePath, SamplerConfig};
pub use simple::{
    angle_bracket, integrate_increments, integrate_simple, operator_bracket, radonified_increment, trace, AdaptedValue,
    IntegralPath, PathPrefix, SimpleProcess,
};
