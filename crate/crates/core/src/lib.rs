//! Random trees grown by inhomogeneous edge splitting, their line-breaking
//! continuum counterparts, the urn models that describe branch lengths, and
//! the metrics used to compare the two.

pub mod embellish;
pub mod error;
pub mod experiment;
pub mod growth;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod samplers;
pub mod skeleton;
pub mod statharness;
pub mod urns;
pub mod xcoupling;

pub use error::{Error, Result};
pub use rng::RngStream;
