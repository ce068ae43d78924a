//! Viscoelastic von Kármán plates and their ribbon limit as metric gradient
//! flows.
//!
//! The crate evolves a scaled plate on the strip `S = I × (−1/2, 1/2)` and the
//! effective ribbon on `I` by minimizing movements, and measures how the two
//! relate: energy–dissipation balance, slopes, recovery energies and the
//! agreement of discrete trajectories as the width shrinks.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod forms;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod movements;
pub mod plate;
pub mod ribbon;

mod channels;

pub use error::{Error, Result};
