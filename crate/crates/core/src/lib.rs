//! Transfer-matrix exceptional points and van Hove singularities of 1D chains
//! with finite-range hopping.
//!
//! Every public operation is a pure function of its arguments: nothing here
//! holds interior mutability or global state, and all public types are
//! `Send + Sync`, so callers may evaluate energies, models or multi-start
//! solves from as many threads as they like.

pub mod critical;
pub mod designer;
pub mod dos;
pub mod model;
pub mod poly;
pub mod transfer;
pub mod verify;

pub use critical::{classify, find_critical_points, CriticalClass, CriticalPoint};
pub use model::{ComplexMomentum, DispersionPolynomial, LatticeModel, ModelError};
pub use transfer::{build_transfer, EigenSet, TransferMatrix};
