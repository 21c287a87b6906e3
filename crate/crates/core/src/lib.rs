//! Discrete conformal metrics on finite graphs.
//!
//! The crate covers conformal distances and balls, padded random partitions,
//! bump-function spectral bounds, heat-kernel certificates, effective
//! resistance certificates, separator barriers and random-walk estimators.

#![allow(clippy::needless_range_loop)]

pub mod bumps;
pub mod confopt;
pub mod error;
pub mod exec;
pub mod generators;
pub mod graph;
pub mod io;
pub mod partitions;
pub mod resistance;
pub mod rng;
pub mod separators;
pub mod spectral;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
pub use generators::{generate, GeneratorSpec};
pub use graph::{ConformalWeight, DegreeProfile, Graph};
