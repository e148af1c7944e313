//! Exact arithmetic in real quadratic fields, continued fractions of square
//! roots, squarefree sieving and lattice escalation, producing checkable
//! certificates that a field admits no universal classical quadratic form of
//! small rank.

pub mod arith;
pub mod cfrac;
pub mod error;
pub mod escalation;
pub mod family;
pub mod interval;
pub mod quadfield;
pub mod ser;
pub mod sieve;

pub use error::{Error, Result};
