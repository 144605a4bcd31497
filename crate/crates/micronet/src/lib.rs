//! Minimal neural-network engine for desk-scale experiments.
//!
//! The engine evaluates small dense/convolutional/residual networks and
//! computes exact backpropagated gradients with respect to inputs and
//! parameters. Every operation is a pure function of its arguments (plus an
//! explicit rng handle where sampling is involved), so identical inputs give
//! bit-identical outputs.
//!
//! Arithmetic is `f32` throughout the production paths. The numeric kernels
//! are generic over [`Scalar`] so test oracles can instantiate the same code
//! at `f64` when finite-difference checks need the extra headroom.

mod drop;
mod engine;
mod error;
mod loss;
mod netspec;
mod params;
mod tensor;

pub mod audit;

pub use drop::{sample_drop, DropSample};
pub use engine::{forward, input_gradient, param_gradient, sgd_update};
pub use error::Error;
pub use loss::{argmax, loss_grad, loss_value, LossKind};
pub use netspec::{DropLayout, Layer, NetworkSpec, Padding};
pub use params::{init_params, LayerParams, ParameterSet};
pub use tensor::Tensor;

/// Scalar type the numeric kernels are generic over.
///
/// Production code uses `f32`; `f64` exists for high-precision test oracles.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + std::fmt::Debug + Default + Send + Sync + 'static
{
    fn from_f32(v: f32) -> Self;
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    #[inline]
    fn from_f32(v: f32) -> Self {
        v
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

pub type Result<T> = std::result::Result<T, Error>;
