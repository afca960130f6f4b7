//! Configurable-precision solvers for linear ODEs whose wanted solution is
//! swamped by faster-growing companions.
//!
//! The crate is `no_std` and needs only `alloc`. Everything is generic over
//! [`Real`]; pick a precision at runtime with [`real::with_digits`].

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod defusing;
pub mod expr;
pub mod fd;
pub mod jet;
pub mod linalg;
pub mod operator;
pub mod real;
pub mod reference;
pub mod spectral;
pub mod steppers;
pub mod variational;

pub use error::Error;
pub use real::{DoubleDouble, Real, Wide};

pub type Result<T> = core::result::Result<T, Error>;
