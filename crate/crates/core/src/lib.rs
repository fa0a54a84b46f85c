//! Supersymmetric (Darboux) partner construction for linear
//! convection–diffusion–reaction equations
//!
//! ```text
//! dP/dt = -d/dx (C P) + d/dx (D dP/dx) + r P
//! ```
//!
//! together with the residual oracles used to certify every constructed
//! solution.

pub mod catalog;
pub mod cdr;
pub mod darboux;
mod error;
pub mod expr;
pub mod numerics;
pub mod sampling;
pub mod similarity;
pub mod syntax;

pub use cdr::{CdrEquation, ResidualReport, SampleGrid};
pub use error::Error;
pub use expr::{EvalError, EvalPoint, Expr, Var};
pub use syntax::{parse, print, ParseError};
