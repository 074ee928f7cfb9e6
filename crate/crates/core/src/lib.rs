//! Forward and inverse scattering for scale-invariant quantum-graph vertex
//! couplings, synthesis of finite graphs that realize them, and exact
//! simulation of those graphs.
//!
//! The usual pipeline:
//!
//! 1. [`equalscatter`] or user input supplies a Hermitian unitary `S`;
//! 2. [`inverse::recover_t`] finds the coupling matrix `T`;
//! 3. [`synthesis::design_from_coupling`] turns `T` into internal edges and
//!    delta potentials;
//! 4. [`simulator::sweep`] checks that the finite graph scatters like `S`
//!    at small `kd`.

pub mod coupling;
pub mod equalscatter;
pub mod error;
pub mod inverse;
pub mod matrix;
pub mod simulator;
pub mod synthesis;

pub use coupling::{ScaleInvariantCoupling, ScatteringMatrix};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, Tolerance};
pub use synthesis::FiniteGraphDesign;
