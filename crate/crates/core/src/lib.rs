//! Single-preparation blind tomography of a two-qubit exchange gate with
//! cylindrical symmetry.
//!
//! The crate simulates the gate, the random state preparation and the
//! `Oz`/`Ox` projective measurements, estimates the mixing parameters
//! `(v, w1, w2)` from outcome frequencies and rebuilds the process matrix.

pub mod config;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod measurement;
pub mod oracle;
pub mod physics;
pub mod reconstruction;
pub mod rng;
pub mod selftest;
pub mod states;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
