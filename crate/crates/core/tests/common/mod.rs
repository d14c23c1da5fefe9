#![allow(dead_code)]

use fasth::{HouseholderChain, Matrix, SvdParam};
use fasth_oracle::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-6;
pub const FD_ABS_FLOOR: f64 = 1e-8;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Unnormalized Gaussian chain, so gradients see non-unit vectors.
pub fn raw_chain(dim: usize, len: usize, rng: &mut ChaCha8Rng) -> HouseholderChain<f64> {
    let vectors = (0..len)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    HouseholderChain::from_vecs(dim, vectors).unwrap()
}

pub fn to_dense(m: &Matrix<f64>) -> DMatrix<f64> {
    fasth_oracle::dense(m.rows(), m.cols(), m.as_slice())
}

pub fn raw_vectors(chain: &HouseholderChain<f64>) -> Vec<Vec<f64>> {
    chain.vectors().iter().map(|v| v.as_slice().to_vec()).collect()
}

/// `H₁⋯Hₙ` by the oracle's explicit dense products.
pub fn oracle_chain(chain: &HouseholderChain<f64>) -> DMatrix<f64> {
    fasth_oracle::chain_product(chain.dim(), &raw_vectors(chain))
}

/// Rectangular diagonal `rows × cols`.
pub fn rect_diag(rows: usize, cols: usize, sigma: &[f64]) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(rows, cols);
    for (i, &x) in sigma.iter().enumerate() {
        s[(i, i)] = x;
    }
    s
}

/// Dense `U·Σ·Vᵀ` from the oracle, independent of `SvdParam::materialize`.
pub fn oracle_weight(p: &SvdParam<f64>) -> DMatrix<f64> {
    oracle_chain(p.u()) * rect_diag(p.out_dim(), p.in_dim(), p.sigma()) * oracle_chain(p.v()).transpose()
}

/// Random parameter with unnormalized chains of full length and sigma in
/// `[0.5, 2)` with random signs.
pub fn random_param(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> SvdParam<f64> {
    let u = raw_chain(out_dim, out_dim, rng);
    let v = raw_chain(in_dim, in_dim, rng);
    let sigma = (0..out_dim.min(in_dim))
        .map(|_| {
            let s: f64 = rng.random_range(0.5..2.0);
            if rng.random_bool(0.5) { s } else { -s }
        })
        .collect();
    SvdParam::new(u, v, sigma).unwrap()
}

/// Positive, well separated singular values.
pub fn positive_param(dim: usize, rng: &mut ChaCha8Rng) -> SvdParam<f64> {
    let p = random_param(dim, dim, rng);
    let sigma = p.sigma().iter().map(|s| s.abs()).collect();
    p.with_sigma(sigma).unwrap()
}

/// Symmetric form `U diag(σ) Uᵀ`.
pub fn symmetric_param(dim: usize, rng: &mut ChaCha8Rng) -> SvdParam<f64> {
    let u = raw_chain(dim, dim, rng);
    let sigma = (0..dim).map(|_| rng.random_range(-0.9..1.5)).collect();
    SvdParam::symmetric(u, sigma).unwrap()
}

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

pub fn assert_rel_close(actual: &Matrix<f64>, expected: &DMatrix<f64>, tol: f64, what: &str) {
    let err = fasth_oracle::rel_frobenius(&to_dense(actual), expected);
    assert!(err < tol, "{what}: relative error {err:e} >= {tol:e}");
}
