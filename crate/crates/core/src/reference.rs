//! Baselines: reflection-at-a-time multiplication and backpropagation, and
//! the dense materialize-then-multiply approach. Both are single-threaded and
//! serve as correctness oracles and benchmark comparators for [`crate::blocked`].

use crate::blocked::BackwardResult;
use crate::error::{Error, Result};
use crate::householder::HouseholderChain;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `H₁⋯Hₙ·X`, one reflection at a time.
pub fn sequential_forward<T: Scalar>(chain: &HouseholderChain<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    chain.apply_sequential(x)
}

/// Backward pass given the forward `output`. Walks the chain front to back,
/// undoing one reflection at a time (`Hⱼᵀ = Hⱼ⁻¹`) so no per-factor
/// activations need to be stored.
pub fn sequential_backward<T: Scalar>(
    chain: &HouseholderChain<T>,
    output: &Matrix<T>,
    grad_output: &Matrix<T>,
) -> Result<BackwardResult<T>> {
    output.expect_rows(chain.dim(), "sequential_backward")?;
    if grad_output.shape() != output.shape() {
        return Err(Error::DimensionMismatch {
            op: "sequential_backward",
            expected: format!("{}x{}", output.rows(), output.cols()),
            found: format!("{}x{}", grad_output.rows(), grad_output.cols()),
        });
    }
    let mut act = output.clone();
    let mut grad = grad_output.clone();
    let mut grad_vectors = Vec::with_capacity(chain.len());
    for h in chain.vectors() {
        h.apply_left_in_place(&mut act);
        grad_vectors.push(h.grad_unchecked(&act, &grad));
        h.apply_left_in_place(&mut grad);
    }
    Ok(BackwardResult {
        grad_input: grad,
        grad_vectors,
    })
}

pub fn sequential_forward_backward<T: Scalar>(
    chain: &HouseholderChain<T>,
    x: &Matrix<T>,
    grad_output: &Matrix<T>,
) -> Result<(Matrix<T>, BackwardResult<T>)> {
    let out = sequential_forward(chain, x)?;
    let grads = sequential_backward(chain, &out, grad_output)?;
    Ok((out, grads))
}

/// Materializes the orthogonal matrix, then does one dense multiply. `O(d³)`.
pub fn dense_parallel_forward<T: Scalar>(chain: &HouseholderChain<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    x.expect_rows(chain.dim(), "dense_parallel_forward")?;
    chain.to_dense().matmul(x)
}

/// Dense forward and dense input gradient `QᵀG`; the per-vector gradients
/// reuse the reflection sweep of [`sequential_backward`].
pub fn dense_parallel_forward_backward<T: Scalar>(
    chain: &HouseholderChain<T>,
    x: &Matrix<T>,
    grad_output: &Matrix<T>,
) -> Result<(Matrix<T>, BackwardResult<T>)> {
    x.expect_rows(chain.dim(), "dense_parallel_forward_backward")?;
    let q = chain.to_dense();
    let out = q.matmul(x)?;
    let mut grads = sequential_backward(chain, &out, grad_output)?;
    grads.grad_input = q.tr_matmul(grad_output)?;
    Ok((out, grads))
}
