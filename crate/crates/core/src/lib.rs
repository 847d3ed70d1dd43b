pub mod cli;
pub mod cylnoise;
pub mod error;
pub mod galerkin;
pub mod levy1d;
pub mod rng;
pub mod stats;
pub mod stochint;

pub use error::{Error, Result};
