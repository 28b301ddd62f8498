//! Simulation and verification of condensation in the symmetric inclusion
//! process at three levels: the exact particle system, the auxiliary
//! slow-fast Wright–Fisher diffusion, and the limiting jump-diffusion on the
//! absorbing set.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod diffusion;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod kernel;
pub mod limit;
pub mod rng;
pub mod simplex;
pub mod sip;
pub mod verify;

pub use error::{Error, Result};
