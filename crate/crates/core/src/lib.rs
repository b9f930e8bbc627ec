//! Covering numbers, dimensions and renewal asymptotics of strongly connected
//! (inhomogeneous) graph-directed self-similar sets.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the Mauldin-Williams graph model, paths and cycles.
//! * [`spec_file`] reads and writes the JSON description of a graph.
//! * [`spectral`] solves `ρ(A_G^s) = 1` and produces the Perron data.
//! * [`lattice`] decides whether the cycle log-contractions generate a lattice.
//! * [`renewal`] is an exact convolution algebra for atomic matrix measures
//!   together with the vector renewal solver and its limits.
//! * [`covering`] generates resolution-`r` approximations and grid counts.
//! * [`asymptotics`] combines everything into a regime verdict and estimates.
//! * [`cli`] is the command-line front end used by the `gdcover` binary.

pub mod asymptotics;
pub mod cli;
pub mod covering;
pub mod error;
pub mod graph;
pub mod lattice;
pub mod renewal;
pub mod spec_file;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{MwGraph, Path, Similarity};
pub use spectral::SpectralData;
