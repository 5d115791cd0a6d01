#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fft;
pub mod generators;
pub mod geometry;
pub mod grid;
pub mod modulation;
pub mod psido;
pub mod serde_float;
pub mod spaces;
pub mod symbol;
pub mod wavefront;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
