//! Radial model problem for a wave scattered by a thin absorbing layer and its
//! generalized impedance boundary approximations.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blayer;
pub mod error;
pub mod fracop;
pub mod fsynth;
pub mod helmholtz;
pub mod model;
pub mod quad;
pub mod tdwave;

pub use error::{Error, Result};
pub use model::*;
