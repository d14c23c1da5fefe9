//! Dense, deliberately naive reference computations.
//!
//! Nothing here knows about Householder chains beyond building each
//! reflection as a full `d×d` matrix. Decompositions come from `nalgebra`,
//! derivatives from central differences. Inputs and outputs are row-major
//! `f64` slices or [`DMatrix`] so this crate stays independent of the code it
//! checks.

pub use nalgebra::DMatrix;

/// Row-major slice to a dense matrix.
pub fn dense(rows: usize, cols: usize, row_major: &[f64]) -> DMatrix<f64> {
    assert_eq!(row_major.len(), rows * cols);
    DMatrix::from_row_slice(rows, cols, row_major)
}

pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `I − 2vvᵀ/‖v‖²` as a full matrix.
pub fn householder_dense(v: &[f64]) -> DMatrix<f64> {
    let d = v.len();
    let s: f64 = v.iter().map(|x| x * x).sum();
    DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - 2.0 * v[i] * v[j] / s
    })
}

/// `H₁·H₂⋯Hₙ` by explicit dense multiplication, left to right.
pub fn chain_product(dim: usize, vectors: &[Vec<f64>]) -> DMatrix<f64> {
    vectors
        .iter()
        .fold(DMatrix::identity(dim, dim), |acc, v| acc * householder_dense(v))
}

/// `‖a − b‖_F / ‖b‖_F` (absolute when `b = 0`).
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `‖QᵀQ − I‖_F`.
pub fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// `ln|det m|` from the LU factorization.
pub fn log_abs_det(m: &DMatrix<f64>) -> f64 {
    let lu = m.clone().lu();
    let u = lu.u();
    (0..u.nrows()).map(|i| u[(i, i)].abs().ln()).sum()
}

/// `m⁻¹·b` by LU solve.
pub fn solve(m: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().lu().solve(b).expect("non-singular system")
}

/// Moore–Penrose pseudo-inverse from a full SVD.
pub fn pseudo_inverse(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    m.clone().pseudo_inverse(tol).expect("svd converged")
}

/// Best rank-`k` approximation in Frobenius norm (truncated SVD).
pub fn best_rank_k(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for &i in order.iter().take(k) {
        out += svd.singular_values[i] * u.column(i) * vt.row(i);
    }
    out
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    s[0] / s[s.len() - 1]
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = m / 2f64.powi(squarings);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `(I − W)(I + W)⁻¹`.
pub fn cayley(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let inv = (&eye + w).try_inverse().expect("I + W invertible");
    (&eye - w) * inv
}

/// Central differences `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` for every coordinate.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise mismatch between an analytic and a numeric gradient,
/// measured relative to the larger magnitude and ignoring components whose
/// absolute difference is within `abs_floor`. Returns the worst relative error.
pub fn worst_relative_error(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let diff = (a - n).abs();
            if diff <= abs_floor {
                0.0
            } else {
                diff / a.abs().max(n.abs())
            }
        })
        .fold(0.0, f64::max)
}
