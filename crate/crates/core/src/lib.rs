//! Unimodular quadratic programming: maximize `s^H R s` over vectors whose
//! entries lie on the complex unit circle.
//!
//! The crate provides a power-method local optimizer ([`local`]), the MERIT
//! certificate algorithm ([`merit`]), an exhaustive m-ary oracle for small
//! instances ([`oracle`]), radar scenario generators ([`scenarios`]) and a
//! cross-ambiguity-function design loop ([`caf`]).
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod caf;
pub mod cone;
pub mod error;
pub mod linalg;
pub mod local;
pub mod merit;
pub mod oracle;
pub mod par;
pub mod scenarios;

pub use error::{Result, UqpError};
pub use linalg::{
    diagonal_load, frobenius_distance, hadamard, hermitian_eig, quadratic_form, read_matrix, write_matrix, CMatrix,
    CVector, EigenSystem, HermitianMatrix, PhaseVector,
};
pub use local::{is_hyper_point, local_optimize, power_step, LocalConfig, LocalTrace};
