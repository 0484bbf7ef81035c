//! q-Hahn zero-range process, its non-compact XXZ spin-chain Hamiltonian and
//! the U_q(sl2) structure relating the two.

pub mod checks;
pub mod cli;
pub mod error;
pub mod generator;
pub mod json;
pub mod linalg;
pub mod qspecial;
pub mod rates;
pub mod simulator;
pub mod tolerance;
pub mod uqsl2;

pub use error::{Error, Result};
