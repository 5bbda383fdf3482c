//! Tools for the K-steps-ahead law of large numbers.
//!
//! For an adapted sequence `Y_1, …, Y_N` bounded by 1, the cumulative
//! forecast bias `S = Σ (Y_n − E(Y_n | F_{n−K}))` exceeds
//! `4·√(K(N+K)·ln(1/ε))` with probability below `ε`. This crate
//!
//! * evaluates that threshold and every intermediate bound of its proof
//!   ([`bounds`]),
//! * builds the block-Rademacher processes that show the `√(KN)` scale and
//!   the `ε` dependence cannot be improved, with exact binomial arithmetic
//!   ([`constructions`]),
//! * checks all of it on explicit finite probability trees by exact
//!   enumeration and seeded Monte Carlo ([`simulation`]),
//! * applies it to decision making with a limited impact horizon
//!   ([`decision`]),
//! * and bundles the end-to-end acceptance checks ([`verify`]).

pub mod bounds;
pub mod constructions;
pub mod decision;
mod error;
pub mod numeric;
pub mod simulation;
pub mod verify;

pub use error::{Error, Result};
