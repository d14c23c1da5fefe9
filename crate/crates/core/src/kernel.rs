//! Interchangeable strategies for multiplying by a Householder chain and
//! backpropagating through it.

use crate::blocked::{self, BackwardResult, Tape};
use crate::error::Result;
use crate::householder::HouseholderChain;
use crate::matrix::Matrix;
use crate::reference;
use crate::scalar::Scalar;

pub trait ChainKernel<T: Scalar>: Sync {
    type Tape: Send + Sync;

    fn forward(&self, chain: &HouseholderChain<T>, x: &Matrix<T>) -> Result<Self::Tape>;

    fn output<'a>(&self, tape: &'a Self::Tape) -> &'a Matrix<T>;

    fn backward(
        &self,
        chain: &HouseholderChain<T>,
        tape: &Self::Tape,
        grad_output: &Matrix<T>,
    ) -> Result<BackwardResult<T>>;
}

/// Blocked WY algorithm with a fixed block width (clamped to the chain length).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FastH {
    pub block_width: usize,
}

impl<T: Scalar> ChainKernel<T> for FastH {
    type Tape = Tape<T>;

    fn forward(&self, chain: &HouseholderChain<T>, x: &Matrix<T>) -> Result<Tape<T>> {
        blocked::forward(chain, x, self.block_width)
    }

    fn output<'a>(&self, tape: &'a Tape<T>) -> &'a Matrix<T> {
        tape.output()
    }

    fn backward(
        &self,
        _chain: &HouseholderChain<T>,
        tape: &Tape<T>,
        grad_output: &Matrix<T>,
    ) -> Result<BackwardResult<T>> {
        blocked::backward(tape, grad_output)
    }
}

/// One reflection at a time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sequential;

impl<T: Scalar> ChainKernel<T> for Sequential {
    type Tape = Matrix<T>;

    fn forward(&self, chain: &HouseholderChain<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
        reference::sequential_forward(chain, x)
    }

    fn output<'a>(&self, tape: &'a Matrix<T>) -> &'a Matrix<T> {
        tape
    }

    fn backward(
        &self,
        chain: &HouseholderChain<T>,
        tape: &Matrix<T>,
        grad_output: &Matrix<T>,
    ) -> Result<BackwardResult<T>> {
        reference::sequential_backward(chain, tape, grad_output)
    }
}

/// Materialize the dense orthogonal matrix and multiply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DenseParallel;

pub struct DenseTape<T> {
    dense: Matrix<T>,
    output: Matrix<T>,
}

impl<T: Scalar> ChainKernel<T> for DenseParallel {
    type Tape = DenseTape<T>;

    fn forward(&self, chain: &HouseholderChain<T>, x: &Matrix<T>) -> Result<DenseTape<T>> {
        x.expect_rows(chain.dim(), "dense_parallel_forward")?;
        let dense = chain.to_dense();
        let output = dense.matmul(x)?;
        Ok(DenseTape { dense, output })
    }

    fn output<'a>(&self, tape: &'a DenseTape<T>) -> &'a Matrix<T> {
        &tape.output
    }

    fn backward(
        &self,
        chain: &HouseholderChain<T>,
        tape: &DenseTape<T>,
        grad_output: &Matrix<T>,
    ) -> Result<BackwardResult<T>> {
        let mut grads = reference::sequential_backward(chain, &tape.output, grad_output)?;
        grads.grad_input = tape.dense.tr_matmul(grad_output)?;
        Ok(grads)
    }
}
