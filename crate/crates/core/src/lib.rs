//! Numerical laboratory for the spectral gap of generalised Cauchy measures
//! μ_β ∝ (1+|x|²)^(-β) on ℝⁿ and their weighted diffusion operator
//! L f = (1+|x|²)Δf − 2(β−1)⟨x, ∇f⟩.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functions;
pub mod measures;
pub mod operators;
pub mod quadrature;
pub mod semigroup;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use measures::MeasureParams;
