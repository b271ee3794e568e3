//! Learning a three-body unitary with a two-local generator circuit through
//! adversarial training on Choi states, with mid-training ancilla insertion
//! and a Jacobian-rank expressivity analysis.

pub mod adversarial;
pub mod ansatz;
pub mod cli;
pub mod error;
pub mod expressivity;
pub mod sim;

pub use error::{Error, Result};
