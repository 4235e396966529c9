//! Exact arithmetic for the topology of irregular singularities on curves.
//!
//! Everything here is computed over the Gaussian rationals: exponential
//! factors and their Galois-orbit circles, Stokes/singular directions,
//! fission trees, filtered and graded linear algebra, the three finite
//! presentations of a Stokes structure on a boundary circle, the canonical
//! splitting of a Stokes filtration, and wild surface group representations
//! with their Wilson loop invariants.
//!
//! The crate is `no_std` + `alloc`; IO, file formats and the CLI live in the
//! companion `stokes-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod error;
pub mod fixtures;
pub mod flagged;
pub mod irregular;
pub mod linalg;
pub mod reps;
pub mod scalar;
pub mod structures;

pub use error::Error;
pub use scalar::{Angle, Gaussian, PolarCoeff, Rat};
