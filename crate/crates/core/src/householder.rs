//! Single Householder reflections and sequentially applied chains of them.
//!
//! A vector `v` stands for `H = I − 2vvᵀ/‖v‖²`. A chain `[v₁, …, vₙ]` stands
//! for the product `H₁⋯Hₙ`, so applying it to `X` means applying `Hₙ` first.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};
use crate::scalar::Scalar;

/// A Householder vector with a cached squared norm.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseholderVector<T> {
    v: Vec<T>,
    norm_sq: T,
}

impl<T: Scalar> HouseholderVector<T> {
    pub fn new(v: Vec<T>) -> Result<Self> {
        if let Some(index) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let norm_sq = dot(&v, &v);
        if !(norm_sq > T::DEGENERATE_NORM_SQ) {
            return Err(Error::DegenerateVector {
                norm_sq: norm_sq.to_f64_lossless(),
            });
        }
        Ok(Self { v, norm_sq })
    }

    /// The `i`-th standard basis vector of length `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![T::zero(); dim];
        v[i] = T::one();
        Self { v, norm_sq: T::one() }
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<T> = (0..dim)
                .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            if let Ok(h) = Self::new(v) {
                return h;
            }
        }
    }

    /// Same reflection, rescaled to unit length.
    pub fn normalized(&self) -> Self {
        let inv = self.norm_sq.sqrt().recip();
        Self::new(self.v.iter().map(|&x| x * inv).collect()).expect("unit vector")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.v
    }

    pub fn into_vec(self) -> Vec<T> {
        self.v
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }

    /// `2/‖v‖²`.
    #[inline]
    pub fn tau(&self) -> T {
        T::two() / self.norm_sq
    }

    /// `H·X = X − (2/‖v‖²)·v·(vᵀX)`.
    pub fn apply_left(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        x.expect_rows(self.dim(), "householder_apply_left")?;
        let mut out = x.clone();
        self.apply_left_in_place(&mut out);
        Ok(out)
    }

    /// In-place `X ← H·X`. Rows must already match.
    pub(crate) fn apply_left_in_place(&self, x: &mut Matrix<T>) {
        debug_assert_eq!(x.rows(), self.dim());
        let mut proj = vec![T::zero(); x.cols()];
        for (r, &vr) in self.v.iter().enumerate() {
            if vr != T::zero() {
                axpy(vr, x.row(r), &mut proj);
            }
        }
        let tau = self.tau();
        for (r, &vr) in self.v.iter().enumerate() {
            if vr != T::zero() {
                axpy(-tau * vr, &proj, x.row_mut(r));
            }
        }
    }

    /// Gradient of `L` with respect to `v`, summed over the batch columns.
    ///
    /// `a_next` is the input the reflection acted on and `grad` is `∂L/∂(H·a_next)`.
    /// With `s = ‖v‖²`, each column pair `(a, g)` contributes
    /// `−(2/s)[(vᵀa)g + (vᵀg)a − (2/s)(vᵀa)(vᵀg)v]`.
    pub fn grad(&self, a_next: &Matrix<T>, grad: &Matrix<T>) -> Result<Vec<T>> {
        a_next.expect_rows(self.dim(), "householder_grad")?;
        grad.expect_rows(self.dim(), "householder_grad")?;
        if a_next.cols() != grad.cols() {
            return Err(Error::DimensionMismatch {
                op: "householder_grad",
                expected: format!("{} columns", a_next.cols()),
                found: format!("{} columns", grad.cols()),
            });
        }
        Ok(self.grad_unchecked(a_next, grad))
    }

    pub(crate) fn grad_unchecked(&self, a_next: &Matrix<T>, grad: &Matrix<T>) -> Vec<T> {
        let m = a_next.cols();
        let mut va = vec![T::zero(); m];
        let mut vg = vec![T::zero(); m];
        for (r, &vr) in self.v.iter().enumerate() {
            if vr != T::zero() {
                axpy(vr, a_next.row(r), &mut va);
                axpy(vr, grad.row(r), &mut vg);
            }
        }
        let scale = -self.tau();
        let cross = dot(&va, &vg) * self.tau();
        self.v
            .iter()
            .enumerate()
            .map(|(r, &vr)| {
                let s = dot(grad.row(r), &va) + dot(a_next.row(r), &vg) - cross * vr;
                scale * s
            })
            .collect()
    }
}

/// Ordered product `H₁⋯Hₙ` of Householder reflections of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseholderChain<T> {
    dim: usize,
    vectors: Vec<HouseholderVector<T>>,
}

impl<T: Scalar> HouseholderChain<T> {
    pub fn new(dim: usize, vectors: Vec<HouseholderVector<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("chain dimension must be positive".into()));
        }
        if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                op: "HouseholderChain::new",
                expected: dim.to_string(),
                found: bad.dim().to_string(),
            });
        }
        Ok(Self { dim, vectors })
    }

    /// Builds a chain from raw vectors, validating each one.
    pub fn from_vecs(dim: usize, vectors: Vec<Vec<T>>) -> Result<Self> {
        let vectors = vectors
            .into_iter()
            .map(HouseholderVector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, vectors)
    }

    /// The empty product, i.e. the identity.
    pub fn identity(dim: usize) -> Self {
        Self { dim, vectors: Vec::new() }
    }

    /// `len` Gaussian vectors, each normalized to unit length.
    pub fn random<R: Rng + ?Sized>(dim: usize, len: usize, rng: &mut R) -> Self {
        let vectors = (0..len)
            .map(|_| HouseholderVector::random(dim, rng).normalized())
            .collect();
        Self { dim, vectors }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    #[inline]
    pub fn vectors(&self) -> &[HouseholderVector<T>] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<HouseholderVector<T>> {
        self.vectors
    }

    /// `Hₙ⋯H₁`, the transpose of this chain's product.
    pub fn reversed(&self) -> Self {
        Self {
            dim: self.dim,
            vectors: self.vectors.iter().rev().cloned().collect(),
        }
    }

    /// `H₁(H₂(⋯(Hₙ·X)))`, one reflection at a time.
    pub fn apply_sequential(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        x.expect_rows(self.dim, "chain_apply_sequential")?;
        let mut out = x.clone();
        for h in self.vectors.iter().rev() {
            h.apply_left_in_place(&mut out);
        }
        Ok(out)
    }

    /// Materializes the `d×d` orthogonal matrix.
    pub fn to_dense(&self) -> Matrix<T> {
        self.apply_sequential(&Matrix::identity(self.dim))
            .expect("identity has chain dimension")
    }
}
