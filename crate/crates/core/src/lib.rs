//! Lieb-Robinson bounds and light-cone approximations for interacting lattice
//! bosons: exact small-system dynamics, probes of moments and commutators,
//! analytic bound evaluators and the stepwise local-unitary construction.

pub mod error;
pub mod approx;
pub mod bounds;
pub mod evolve;
pub mod fock;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod probes;
pub mod scenario;

pub use error::{Error, Result};
