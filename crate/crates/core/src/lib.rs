//! Leading-order critical points of spread-out lattice models from
//! random-walk loop sums, with exact, dense, continuum and Monte Carlo
//! routes for the underlying return probabilities.

pub mod cli;
pub mod diagrams;
pub mod error;
pub mod kernels;
pub mod numeric;
pub mod oracle;
pub mod returns;
pub mod simulate;
pub mod sums;
pub mod verify;

pub use error::{Error, Result};
