//! Electrostatics of planar surface-electrode ion traps.
//!
//! Potentials are dimensionless (electrode voltages scaled to 1), lengths are
//! in an arbitrary common unit and surface charge densities are reported as
//! `sigma / epsilon_0`.

// Negated comparisons also reject NaN; indexed loops follow the rule tables.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod finiteplane;
pub mod gap1d;
pub mod gapsolver;
pub mod jet;
pub mod kernel;
pub mod optimize;
pub mod quad;
pub mod ringtrap;
pub mod specfun;

pub use error::{Error, Result};

/// Library version, echoed in generated output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
