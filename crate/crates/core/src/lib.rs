// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amplitude;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod ls_solver;
pub mod output;
pub mod potentials;
pub mod quadrature;
pub mod radial;
pub mod smatrix;
pub mod specfun;

pub use error::{Error, Result};
