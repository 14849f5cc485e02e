//! Minimal reverse-mode automatic differentiation over dense CPU tensors.
//!
//! Tensors are immutable and reference-counted; each one optionally remembers
//! the operation that produced it. [`Tensor::backward`] walks that graph to
//! produce [`Gradients`] for the leaves. [`Tensor::backward_create_graph`]
//! records the backward pass as well, which is what gradient-norm penalties
//! need (the gradient of a gradient).
//!
//! Convolutions run as im2col + GEMM via `matrixmultiply`; everything else is
//! straightforward elementwise code.

mod backward;
mod conv;
mod element;
mod ops;
pub mod shape;
mod tensor;

pub use backward::Gradients;
pub use conv::ConvGeom;
pub use element::Element;
pub use tensor::{is_grad_enabled, no_grad, GradModeGuard, Tensor, TensorId};
