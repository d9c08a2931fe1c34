//! Hermitian positive definite solutions of `X - A^* X^{-p} A = Q` (`p > 0`),
//! together with existence tests, perturbation bounds, backward-error bounds
//! and explicit condition numbers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backward;
pub mod conditioning;
pub mod error;
pub mod experiments;
pub mod funm;
pub mod induced_norm;
pub mod linalg;
pub mod matrix_file;
pub mod operator;
pub mod par;
pub mod perturbation;
pub mod quadrature;
pub mod solver;
pub mod table;

pub use error::{Error, Result};
