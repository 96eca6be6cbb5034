#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod samplers;
pub mod problems;
pub mod theory;

pub use error::{Error, Result};
