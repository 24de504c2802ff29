//! Transition densities of symmetric jump Lévy processes and two-sided
//! heat-kernel bounds for them.

// guards are written !(x > 0.0) so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod density;
pub mod envelopes;
pub mod error;
pub mod interp;
pub mod levy_measure;
pub mod mc_oracle;
pub mod optimize;
pub mod quadrature;
pub mod symbol;
pub mod verify;

pub use error::{LevyError, Result};
pub use levy_measure::{AngularMeasure, Atom, LevyMeasure, RadialProfile};
pub use symbol::SymbolTable;
