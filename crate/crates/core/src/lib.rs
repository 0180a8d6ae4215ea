//! Analysis toolkit for inverter-based amplifiers with back-gate feedback.
//!
//! A smooth compact model with an explicit back-gate terminal feeds a DC
//! solver, closed-form small-signal and distortion expressions, and
//! independent numerical oracles (a nodal linear solve and polynomial fits
//! of solved transfer curves) that every closed form is checked against.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cards;
pub mod circuits;
pub mod cli;
pub mod dcsolve;
pub mod device;
pub mod distortion;
pub mod error;
pub mod mismatch;
pub mod smallsig;

pub use error::{Error, Result, Span};
