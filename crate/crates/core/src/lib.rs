//! Gradient descent over orthogonal matrices stored as products of
//! Householder reflections.
//!
//! The central piece is [`blocked`]: multiplication by `H₁⋯Hₙ` and its
//! backward pass, reorganized into WY blocks ([`wy`]) so the sequential depth
//! drops from `n` vector operations to `⌈n/b⌉ + b` matrix operations while the
//! total work stays `O(d·n·m)`. On top of that sits [`svd`], a weight matrix
//! kept as `UΣVᵀ`, and [`matops`], which reads determinants, inverses,
//! exponentials and friends straight off `Σ`.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below fix the precision.

pub mod blocked;
pub mod error;
pub mod householder;
pub mod io;
pub mod kernel;
pub mod matops;
pub mod matrix;
pub mod parallel;
pub mod reference;
pub mod scalar;
pub mod svd;
pub mod wy;

pub use blocked::{BackwardResult, BackwardStages, ForwardStages, Tape, Tuning};
pub use error::{Error, Factor, Result};
pub use householder::{HouseholderChain, HouseholderVector};
pub use kernel::{ChainKernel, DenseParallel, FastH, Sequential};
pub use matrix::Matrix;
pub use scalar::Scalar;
pub use svd::{SvdGradients, SvdParam, SvdTape};
pub use wy::{CompactedChain, WyBlock};

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type HouseholderVectorF64 = HouseholderVector<f64>;
pub type HouseholderVectorF32 = HouseholderVector<f32>;
pub type HouseholderChainF64 = HouseholderChain<f64>;
pub type HouseholderChainF32 = HouseholderChain<f32>;
pub type WyBlockF64 = WyBlock<f64>;
pub type WyBlockF32 = WyBlock<f32>;
pub type CompactedChainF64 = CompactedChain<f64>;
pub type CompactedChainF32 = CompactedChain<f32>;
pub type TapeF64 = Tape<f64>;
pub type TapeF32 = Tape<f32>;
pub type BackwardResultF64 = BackwardResult<f64>;
pub type BackwardResultF32 = BackwardResult<f32>;
pub type SvdParamF64 = SvdParam<f64>;
pub type SvdParamF32 = SvdParam<f32>;
pub type SvdGradientsF64 = SvdGradients<f64>;
pub type SvdGradientsF32 = SvdGradients<f32>;
