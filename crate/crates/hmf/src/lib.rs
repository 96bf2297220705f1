//! Exact arithmetic for Hilbert modular forms over real quadratic fields
//! of narrow class number one.
//!
//! The crate provides Fourier expansions indexed by integral ideals, exact
//! multiplication of expansions, Hecke operators and eigenform extraction,
//! special values of Dedekind zeta functions, interval-certified numeric
//! bounds for the associated L-values, and a classification search for
//! identities expressing a product of two eigenforms as a multiple of a
//! third.

pub mod cache;
pub mod error;
pub mod forms;
pub mod hecke;
pub mod linalg;
pub mod numeric;
pub mod quadfield;
pub mod search;
pub mod specialvalues;

pub use error::{Error, Result};
