//! Sparse random block matrices: sampling, spectra, and their limiting laws.
//!
//! A realization is built from a graph skeleton (Erdős–Rényi or random
//! regular) by placing an independent real symmetric `d x d` random block on
//! every edge. The crate samples those ensembles, diagonalizes them, and
//! compares the empirical spectra and moments against closed-form limits:
//! the Effective Medium Approximation for adjacency ensembles with finite-rank
//! blocks, Marchenko–Pastur for the block Laplacian, and the exact
//! measure-comparison factors between block distributions.
//!
//! The exact combinatorics of closed tree walks lives in [`walks`]; it gives
//! the moment polynomials in the mean degree and their finite-rank limits,
//! which must coincide with the non-crossing series of [`theory::series`].

pub mod assembly;
pub mod blocks;
pub mod error;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod theory;
pub mod walks;

pub use error::{Error, Result};
