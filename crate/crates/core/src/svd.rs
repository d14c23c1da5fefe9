//! Weight matrices kept in factored form `W = UΣVᵀ`, with `U` and `V` as
//! Householder chains and `Σ` a (possibly rectangular) diagonal.
//!
//! Gradient steps move the Householder vectors directly, so `U` and `V` stay
//! orthogonal by construction and the singular values of `W` are always the
//! magnitudes of `sigma`.

use rand::Rng;

use crate::blocked::BackwardResult;
use crate::error::{Error, Factor, Result};
use crate::householder::{HouseholderChain, HouseholderVector};
use crate::kernel::{ChainKernel, FastH};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SvdParam<T> {
    u: HouseholderChain<T>,
    v: HouseholderChain<T>,
    sigma: Vec<T>,
}

impl<T: Scalar> SvdParam<T> {
    /// `U` acts on the output space (`out_dim = u.dim()`), `V` on the input
    /// space; `sigma` must hold `min(out_dim, in_dim)` finite values.
    pub fn new(u: HouseholderChain<T>, v: HouseholderChain<T>, sigma: Vec<T>) -> Result<Self> {
        let expected = u.dim().min(v.dim());
        if sigma.len() != expected {
            return Err(Error::DimensionMismatch {
                op: "SvdParam::new",
                expected: format!("{expected} singular values"),
                found: sigma.len().to_string(),
            });
        }
        if let Some(index) = sigma.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { u, v, sigma })
    }

    pub fn identity(out_dim: usize, in_dim: usize) -> Self {
        Self {
            u: HouseholderChain::identity(out_dim),
            v: HouseholderChain::identity(in_dim),
            sigma: vec![T::one(); out_dim.min(in_dim)],
        }
    }

    /// Full-length chains of random unit Householder vectors and `Σ = I`.
    pub fn random<R: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut R) -> Self {
        Self {
            u: HouseholderChain::random(out_dim, out_dim, rng),
            v: HouseholderChain::random(in_dim, in_dim, rng),
            sigma: vec![T::one(); out_dim.min(in_dim)],
        }
    }

    /// Symmetric form `U·diag(sigma)·Uᵀ`, stored with an empty `V` chain.
    pub fn symmetric(u: HouseholderChain<T>, sigma: Vec<T>) -> Result<Self> {
        let v = HouseholderChain::identity(u.dim());
        Self::new(u, v, sigma)
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.u.dim()
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.v.dim()
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.out_dim() == self.in_dim()
    }

    #[inline]
    pub fn u(&self) -> &HouseholderChain<T> {
        &self.u
    }

    #[inline]
    pub fn v(&self) -> &HouseholderChain<T> {
        &self.v
    }

    #[inline]
    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn with_sigma(&self, sigma: Vec<T>) -> Result<Self> {
        Self::new(self.u.clone(), self.v.clone(), sigma)
    }

    /// Dense `U·Σ·Vᵀ`. `O(d³)`; for tests and oracles.
    pub fn materialize(&self) -> Matrix<T> {
        let u = self.u.to_dense();
        let vt = self.v.to_dense().transpose();
        let mut sigma_vt = Matrix::zeros(self.out_dim(), self.in_dim());
        for (i, &s) in self.sigma.iter().enumerate() {
            for (dst, &src) in sigma_vt.row_mut(i).iter_mut().zip(vt.row(i)) {
                *dst = s * src;
            }
        }
        u.matmul(&sigma_vt).expect("shapes agree")
    }

    /// Dense `U·diag(sigma)·Uᵀ`, ignoring `V`.
    pub fn materialize_symmetric(&self) -> Result<Matrix<T>> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.out_dim(),
                cols: self.in_dim(),
            });
        }
        let u = self.u.to_dense();
        let mut s_ut = u.transpose();
        s_ut.scale_rows(&self.sigma);
        u.matmul(&s_ut)
    }

    /// `Y = U·Σ·Vᵀ·X` with the blocked kernel at the given block width.
    pub fn forward(&self, x: &Matrix<T>, block_width: usize) -> Result<(Matrix<T>, SvdTape<T, crate::blocked::Tape<T>>)> {
        self.forward_with(&FastH { block_width }, x)
    }

    pub fn forward_with<K: ChainKernel<T>>(&self, kernel: &K, x: &Matrix<T>) -> Result<(Matrix<T>, SvdTape<T, K::Tape>)> {
        sandwich_forward(kernel, &self.u, &self.sigma, &self.v, x)
    }

    pub fn backward(
        &self,
        tape: &SvdTape<T, crate::blocked::Tape<T>>,
        grad_output: &Matrix<T>,
        block_width: usize,
    ) -> Result<SvdGradients<T>> {
        self.backward_with(&FastH { block_width }, tape, grad_output)
    }

    pub fn backward_with<K: ChainKernel<T>>(
        &self,
        kernel: &K,
        tape: &SvdTape<T, K::Tape>,
        grad_output: &Matrix<T>,
    ) -> Result<SvdGradients<T>> {
        sandwich_backward(kernel, &self.u, &self.sigma, tape, grad_output)
    }

    /// Plain gradient step `v ← v − η∇v` on every Householder vector and
    /// `σ ← σ − η∇σ`. Fails if any updated vector becomes degenerate.
    pub fn step(&self, grads: &SvdGradients<T>, eta: T) -> Result<Self> {
        if !eta.is_finite() {
            return Err(Error::InvalidArgument("step size must be finite".into()));
        }
        if grads.grad_sigma.len() != self.sigma.len() {
            return Err(Error::DimensionMismatch {
                op: "svd_step",
                expected: format!("{} sigma gradients", self.sigma.len()),
                found: grads.grad_sigma.len().to_string(),
            });
        }
        let u = step_chain(&self.u, &grads.grad_u, eta, Factor::U)?;
        let v = step_chain(&self.v, &grads.grad_v, eta, Factor::V)?;
        let sigma = self
            .sigma
            .iter()
            .zip(&grads.grad_sigma)
            .map(|(&s, &g)| s - eta * g)
            .collect();
        Self::new(u, v, sigma)
    }

    /// Projects every `sigma[i]` onto `[1 − ε, 1 + ε]`.
    pub fn clamp_sigma(&self, epsilon: T) -> Result<Self> {
        if !(epsilon >= T::zero() && epsilon < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "clamp epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        let (lo, hi) = (T::one() - epsilon, T::one() + epsilon);
        let sigma = self.sigma.iter().map(|&s| s.max(lo).min(hi)).collect();
        self.with_sigma(sigma)
    }
}

fn step_chain<T: Scalar>(
    chain: &HouseholderChain<T>,
    grads: &[Vec<T>],
    eta: T,
    factor: Factor,
) -> Result<HouseholderChain<T>> {
    if grads.len() != chain.len() {
        return Err(Error::DimensionMismatch {
            op: "svd_step",
            expected: format!("{} gradients for factor {factor}", chain.len()),
            found: grads.len().to_string(),
        });
    }
    let mut vectors = Vec::with_capacity(chain.len());
    for (index, (h, g)) in chain.vectors().iter().zip(grads).enumerate() {
        if g.len() != chain.dim() {
            return Err(Error::DimensionMismatch {
                op: "svd_step",
                expected: chain.dim().to_string(),
                found: g.len().to_string(),
            });
        }
        let updated = h.as_slice().iter().zip(g).map(|(&v, &d)| v - eta * d).collect();
        match HouseholderVector::new(updated) {
            Ok(v) => vectors.push(v),
            Err(Error::DegenerateVector { .. }) => {
                return Err(Error::DegenerateUpdate { factor, index })
            }
            Err(e) => return Err(e),
        }
    }
    HouseholderChain::new(chain.dim(), vectors)
}

/// Gradients of a loss with respect to every part of an [`SvdParam`] and
/// the layer input.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdGradients<T> {
    pub grad_u: Vec<Vec<T>>,
    pub grad_v: Vec<Vec<T>>,
    pub grad_sigma: Vec<T>,
    pub grad_input: Matrix<T>,
}

/// Forward state of `L·D·Rᵀ·X`: the reversed right chain and both kernel tapes.
pub struct SvdTape<T, P> {
    right_reversed: HouseholderChain<T>,
    inner: P,
    outer: P,
    inner_output: Matrix<T>,
}

impl<T, P> SvdTape<T, P> {
    /// `Rᵀ·X`, the input to the diagonal scaling.
    pub fn inner_output(&self) -> &Matrix<T> {
        &self.inner_output
    }
}

/// `Y = L·D·Rᵀ·X` where `D` is the `L.dim() × R.dim()` rectangular diagonal
/// holding `diag`. `Rᵀ` is applied as the reversed chain.
pub fn sandwich_forward<T: Scalar, K: ChainKernel<T>>(
    kernel: &K,
    left: &HouseholderChain<T>,
    diag: &[T],
    right: &HouseholderChain<T>,
    x: &Matrix<T>,
) -> Result<(Matrix<T>, SvdTape<T, K::Tape>)> {
    x.expect_rows(right.dim(), "svd_forward")?;
    if diag.len() != left.dim().min(right.dim()) {
        return Err(Error::DimensionMismatch {
            op: "svd_forward",
            expected: format!("{} diagonal entries", left.dim().min(right.dim())),
            found: diag.len().to_string(),
        });
    }
    let right_reversed = right.reversed();
    let inner = kernel.forward(&right_reversed, x)?;
    let inner_output = kernel.output(&inner).clone();
    let scaled = scale_rectangular(&inner_output, diag, left.dim());
    let outer = kernel.forward(left, &scaled)?;
    let y = kernel.output(&outer).clone();
    Ok((
        y,
        SvdTape {
            right_reversed,
            inner,
            outer,
            inner_output,
        },
    ))
}

/// Backward pass of [`sandwich_forward`]. `∂L/∂D` keeps only the diagonal,
/// `grad_diag[i] = ⟨row_i(∂L/∂(D·T)), row_i(T)⟩` with `T = Rᵀ·X`.
pub fn sandwich_backward<T: Scalar, K: ChainKernel<T>>(
    kernel: &K,
    left: &HouseholderChain<T>,
    diag: &[T],
    tape: &SvdTape<T, K::Tape>,
    grad_output: &Matrix<T>,
) -> Result<SvdGradients<T>> {
    let outer: BackwardResult<T> = kernel.backward(left, &tape.outer, grad_output)?;
    let grad_scaled = outer.grad_input;
    let t = &tape.inner_output;
    let grad_sigma: Vec<T> = diag
        .iter()
        .enumerate()
        .map(|(i, _)| crate::matrix::dot(grad_scaled.row(i), t.row(i)))
        .collect();
    let mut grad_t = Matrix::zeros(t.rows(), t.cols());
    for (i, &s) in diag.iter().enumerate() {
        for (dst, &g) in grad_t.row_mut(i).iter_mut().zip(grad_scaled.row(i)) {
            *dst = s * g;
        }
    }
    let inner = kernel.backward(&tape.right_reversed, &tape.inner, &grad_t)?;
    let mut grad_v = inner.grad_vectors;
    grad_v.reverse();
    Ok(SvdGradients {
        grad_u: outer.grad_vectors,
        grad_v,
        grad_sigma,
        grad_input: inner.grad_input,
    })
}

/// `D·T` for the `out_rows × T.rows()` rectangular diagonal `D`.
pub(crate) fn scale_rectangular<T: Scalar>(t: &Matrix<T>, diag: &[T], out_rows: usize) -> Matrix<T> {
    let mut out = Matrix::zeros(out_rows, t.cols());
    for (i, &s) in diag.iter().enumerate() {
        for (dst, &src) in out.row_mut(i).iter_mut().zip(t.row(i)) {
            *dst = s * src;
        }
    }
    out
}
