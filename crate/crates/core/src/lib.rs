//! t-product tensor algebra and frontal-slice descent solvers.
//!
//! The crate covers third-order tensors under the t-product ([`tensor`]),
//! frontal-slice views of a coefficient tensor ([`slicing`]), iterative
//! solvers for `A * X = B` ([`solvers`]), the convergence constants and bound
//! sequences that certify them ([`analysis`]), synthetic test systems
//! ([`generators`]) and a Gaussian deblurring pipeline ([`deblur`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod deblur;
pub mod error;
pub mod generators;
pub mod slicing;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor3;
