//! Energy-exchange speed of finite-dimensional quantum batteries under cyclic
//! unitary control.

// `!(x > y)` also rejects NaN, which the validators rely on.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod claims;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod optimize;
pub mod output;
pub mod random;
pub mod speed;
pub mod verify;
pub mod witnesses;

pub use error::{Error, Result};
