//! Fractional-order active disturbance rejection control.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adrc;
pub mod error;
pub mod fracops;
pub mod freqanal;
pub mod observers;
pub mod par;
pub mod plants;
pub mod poly;
pub mod simkit;
pub mod stability;

pub use error::{Error, Result};
