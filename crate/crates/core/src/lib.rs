//! Entanglement criteria and separability certificates for three-qubit
//! states, with a focus on states diagonal in the GHZ basis.

pub mod classify;
pub mod cli;
pub mod criterion;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod separability;
pub mod states;

pub use error::{Error, Result};
