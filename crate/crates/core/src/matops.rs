//! Matrix operations that become `O(min(out, in))` once `W = UΣVᵀ` is known.
//!
//! Everything here reads only `sigma` plus, for the `apply_*` family, two
//! blocked chain multiplications. Nothing materializes `W`.
//!
//! The exponential and Cayley map need the symmetric form `W = U·diag(σ)·Uᵀ`,
//! represented as an [`SvdParam`] with an empty `V` chain (see
//! [`SvdParam::symmetric`]).

use std::cell::Cell;
use std::cmp::Ordering;

use crate::blocked::{self, default_block_width};
use crate::error::{Error, Result};
use crate::householder::HouseholderChain;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::svd::{scale_rectangular, SvdParam};

thread_local! {
    static SIGMA_WORK: Cell<u64> = const { Cell::new(0) };
}

/// Singular-value scalars touched on this thread since the last reset.
pub fn sigma_work() -> u64 {
    SIGMA_WORK.with(Cell::get)
}

pub fn reset_sigma_work() {
    SIGMA_WORK.with(|c| c.set(0));
}

fn touch(n: usize) {
    SIGMA_WORK.with(|c| c.set(c.get() + n as u64));
}

/// `ln|det W| = Σᵢ ln|σᵢ|`.
pub fn log_abs_det<T: Scalar>(p: &SvdParam<T>) -> Result<T> {
    require_square(p)?;
    let sigma = p.sigma();
    touch(sigma.len());
    if let Some(index) = sigma.iter().position(|s| *s == T::zero()) {
        return Err(Error::Singular { index });
    }
    Ok(sigma.iter().map(|s| s.abs().ln()).sum())
}

/// `W⁻¹·X = V·Σ⁻¹·Uᵀ·X`.
pub fn apply_inverse<T: Scalar>(p: &SvdParam<T>, x: &Matrix<T>, block_width: usize) -> Result<Matrix<T>> {
    require_square(p)?;
    let sigma = p.sigma();
    touch(sigma.len());
    if let Some(index) = sigma.iter().position(|s| *s == T::zero()) {
        return Err(Error::Singular { index });
    }
    let inv: Vec<T> = sigma.iter().map(|s| s.recip()).collect();
    sandwich_apply(p.v(), &inv, p.u(), x, block_width)
}

/// `max |σᵢ|`, exact.
pub fn largest_singular_value<T: Scalar>(p: &SvdParam<T>) -> T {
    touch(p.sigma().len());
    p.sigma().iter().fold(T::zero(), |m, s| m.max(s.abs()))
}

/// `e^W·X = U·e^Σ·Uᵀ·X` for the symmetric form.
pub fn apply_exponential<T: Scalar>(p: &SvdParam<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    require_symmetric(p)?;
    touch(p.sigma().len());
    let diag: Vec<T> = p.sigma().iter().map(|s| s.exp()).collect();
    sandwich_apply(p.u(), &diag, p.u(), x, default_block_width(x.cols()))
}

/// `(I − W)(I + W)⁻¹·X = U·(I − Σ)(I + Σ)⁻¹·Uᵀ·X` for the symmetric form.
pub fn apply_cayley<T: Scalar>(p: &SvdParam<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    require_symmetric(p)?;
    let sigma = p.sigma();
    touch(sigma.len());
    if let Some(index) = sigma.iter().position(|s| *s == -T::one()) {
        return Err(Error::CayleyPole { index });
    }
    let diag: Vec<T> = sigma.iter().map(|&s| (T::one() - s) / (T::one() + s)).collect();
    sandwich_apply(p.u(), &diag, p.u(), x, default_block_width(x.cols()))
}

/// `‖W‖_F² = Σᵢ σᵢ²`.
pub fn frobenius_sq<T: Scalar>(p: &SvdParam<T>) -> T {
    touch(p.sigma().len());
    p.sigma().iter().map(|&s| s * s).sum()
}

/// How [`truncate_rank_with`] finds the `k`-th largest magnitude.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    /// Deterministic linear-time selection (median of medians).
    #[default]
    MedianOfMedians,
    /// Full sort, `O(d log d)`.
    Sort,
}

/// Keeps the `k` largest-magnitude singular values and zeros the rest.
pub fn truncate_rank<T: Scalar>(p: &SvdParam<T>, k: usize) -> Result<SvdParam<T>> {
    truncate_rank_with(p, k, Selection::default())
}

/// [`truncate_rank`] with an explicit selection strategy. Ties at the
/// threshold keep the lower indices.
pub fn truncate_rank_with<T: Scalar>(p: &SvdParam<T>, k: usize, selection: Selection) -> Result<SvdParam<T>> {
    let sigma = p.sigma();
    if k == 0 || k > sigma.len() {
        return Err(Error::InvalidArgument(format!(
            "rank {k} outside 1..={}",
            sigma.len()
        )));
    }
    let magnitudes: Vec<T> = sigma.iter().map(|s| s.abs()).collect();
    touch(sigma.len());
    // k-th largest == (len − k)-th smallest, 0-based.
    let rank = sigma.len() - k;
    let threshold = match selection {
        Selection::MedianOfMedians => select_smallest(magnitudes.clone(), rank),
        Selection::Sort => {
            let mut sorted = magnitudes.clone();
            touch(sorted.len());
            sorted.sort_by(cmp);
            sorted[rank]
        }
    };
    let mut budget = k - magnitudes.iter().filter(|&&m| m > threshold).count();
    touch(sigma.len());
    let truncated = sigma
        .iter()
        .zip(&magnitudes)
        .map(|(&s, &m)| {
            if m > threshold {
                s
            } else if m == threshold && budget > 0 {
                budget -= 1;
                s
            } else {
                T::zero()
            }
        })
        .collect();
    touch(sigma.len());
    p.with_sigma(truncated)
}

/// `W⁺·X = V·Σ⁺·Uᵀ·X`; entries with `|σ| ≤ tol` are treated as zero.
pub fn apply_pseudo_inverse<T: Scalar>(p: &SvdParam<T>, x: &Matrix<T>, tol: T) -> Result<Matrix<T>> {
    if !(tol >= T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be non-negative".into()));
    }
    touch(p.sigma().len());
    let diag: Vec<T> = p
        .sigma()
        .iter()
        .map(|&s| if s.abs() > tol { s.recip() } else { T::zero() })
        .collect();
    sandwich_apply(p.v(), &diag, p.u(), x, default_block_width(x.cols()))
}

/// `κ = max|σ| / min|σ|`.
pub fn condition_number<T: Scalar>(p: &SvdParam<T>) -> Result<T> {
    let sigma = p.sigma();
    touch(sigma.len());
    let (mut lo, mut hi, mut lo_index) = (T::infinity(), T::zero(), 0);
    for (i, s) in sigma.iter().enumerate() {
        let a = s.abs();
        if a < lo {
            lo = a;
            lo_index = i;
        }
        hi = hi.max(a);
    }
    if lo == T::zero() {
        return Err(Error::Singular { index: lo_index });
    }
    Ok(hi / lo)
}

/// `left · D · rightᵀ · X` with the rectangular diagonal `D`.
fn sandwich_apply<T: Scalar>(
    left: &HouseholderChain<T>,
    diag: &[T],
    right: &HouseholderChain<T>,
    x: &Matrix<T>,
    block_width: usize,
) -> Result<Matrix<T>> {
    let t = blocked::multiply(&right.reversed(), x, block_width)?;
    let scaled = scale_rectangular(&t, diag, left.dim());
    blocked::multiply(left, &scaled, block_width)
}

fn require_square<T: Scalar>(p: &SvdParam<T>) -> Result<()> {
    if !p.is_square() {
        return Err(Error::NotSquare {
            rows: p.out_dim(),
            cols: p.in_dim(),
        });
    }
    Ok(())
}

fn require_symmetric<T: Scalar>(p: &SvdParam<T>) -> Result<()> {
    require_square(p)?;
    if !p.v().is_empty() {
        return Err(Error::NotSymmetricForm);
    }
    Ok(())
}

fn cmp<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("finite values")
}

/// `rank`-th smallest (0-based) by median of medians.
fn select_smallest<T: Scalar>(mut xs: Vec<T>, mut rank: usize) -> T {
    loop {
        touch(xs.len());
        if xs.len() <= 5 {
            xs.sort_by(cmp);
            return xs[rank];
        }
        let medians: Vec<T> = xs
            .chunks(5)
            .map(|c| {
                let mut c = c.to_vec();
                c.sort_by(cmp);
                c[c.len() / 2]
            })
            .collect();
        let mid = medians.len() / 2;
        let pivot = select_smallest(medians, mid);
        let (mut lower, mut upper, mut equal) = (Vec::new(), Vec::new(), 0usize);
        for x in xs {
            match cmp(&x, &pivot) {
                Ordering::Less => lower.push(x),
                Ordering::Greater => upper.push(x),
                Ordering::Equal => equal += 1,
            }
        }
        if rank < lower.len() {
            xs = lower;
        } else if rank < lower.len() + equal {
            return pivot;
        } else {
            rank -= lower.len() + equal;
            xs = upper;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_param(sigma: &[f64]) -> SvdParam<f64> {
        SvdParam::identity(sigma.len(), sigma.len())
            .with_sigma(sigma.to_vec())
            .unwrap()
    }

    #[test]
    fn determinant() {
        let p = diag_param(&[2.0, 3.0]);
        assert!((log_abs_det(&p).unwrap() - 6f64.ln()).abs() < 1e-15);
        assert_eq!(log_abs_det(&diag_param(&[1.0; 4])).unwrap(), 0.0);
        assert!(matches!(log_abs_det(&diag_param(&[1.0, 0.0])), Err(Error::Singular { index: 1 })));
        let rect = SvdParam::<f64>::identity(3, 2);
        assert!(matches!(log_abs_det(&rect), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn inverse_of_identity() {
        let p = SvdParam::<f64>::identity(4, 4);
        let x = Matrix::from_fn(4, 2, |i, j| (i as f64) - (j as f64));
        assert_eq!(apply_inverse(&p, &x, 2).unwrap(), x);
        assert!(apply_inverse(&diag_param(&[0.0, 1.0]), &Matrix::zeros(2, 1), 1).is_err());
    }

    #[test]
    fn spectral_scalars() {
        assert_eq!(largest_singular_value(&diag_param(&[0.5, -3.0, 1.0])), 3.0);
        assert_eq!(frobenius_sq(&diag_param(&[3.0, 4.0])), 25.0);
        assert_eq!(frobenius_sq(&diag_param(&[0.0, 0.0])), 0.0);
        assert_eq!(condition_number(&diag_param(&[10.0, 2.0])).unwrap(), 5.0);
        assert_eq!(condition_number(&diag_param(&[1.5; 3])).unwrap(), 1.0);
        assert!(condition_number(&diag_param(&[1.0, 0.0])).is_err());
        let rect = SvdParam::<f64>::identity(5, 2).with_sigma(vec![0.25, 4.0]).unwrap();
        assert_eq!(largest_singular_value(&rect), 4.0);
    }

    #[test]
    fn exponential_and_cayley_on_diagonals() {
        let x = Matrix::from_fn(2, 3, |i, j| (1 + i + j) as f64);
        let zero = SvdParam::symmetric(HouseholderChain::identity(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(apply_exponential(&zero, &x).unwrap(), x);
        assert_eq!(apply_cayley(&zero, &x).unwrap(), x);

        let ln2 = SvdParam::symmetric(HouseholderChain::identity(1), vec![2f64.ln()]).unwrap();
        let y = apply_exponential(&ln2, &Matrix::column_vector(&[1.5])).unwrap();
        assert!((y[(0, 0)] - 3.0).abs() < 1e-15);

        let one = SvdParam::symmetric(HouseholderChain::identity(2), vec![1.0, 0.0]).unwrap();
        let c = apply_cayley(&one, &x).unwrap();
        assert_eq!(c.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(c.row(1), x.row(1));

        let pole = SvdParam::symmetric(HouseholderChain::identity(2), vec![0.0, -1.0]).unwrap();
        assert!(matches!(apply_cayley(&pole, &x), Err(Error::CayleyPole { index: 1 })));
        let general = SvdParam::new(
            HouseholderChain::identity(2),
            HouseholderChain::from_vecs(2, vec![vec![1.0, 0.0]]).unwrap(),
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(apply_exponential(&general, &x), Err(Error::NotSymmetricForm)));
    }

    #[test]
    fn truncation() {
        let p = diag_param(&[1.0, 5.0, 3.0]);
        assert_eq!(truncate_rank(&p, 3).unwrap().sigma(), &[1.0, 5.0, 3.0]);
        assert_eq!(truncate_rank(&p, 1).unwrap().sigma(), &[0.0, 5.0, 0.0]);
        assert_eq!(truncate_rank(&diag_param(&[2.0, -2.0, 2.0, 1.0]), 2).unwrap().sigma(), &[2.0, -2.0, 0.0, 0.0]);
        assert!(truncate_rank(&p, 0).is_err());
        assert!(truncate_rank(&p, 4).is_err());
    }

    #[test]
    fn selection_matches_sorting() {
        let mut state = 12345u64;
        for len in [1, 2, 5, 6, 17, 64, 101] {
            let xs: Vec<f64> = (0..len)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 40) % 50) as f64
                })
                .collect();
            let mut sorted = xs.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for r in 0..len {
                assert_eq!(select_smallest(xs.clone(), r), sorted[r]);
            }
        }
    }

    #[test]
    fn pseudo_inverse_reciprocates_above_tolerance() {
        let p = diag_param(&[2.0, 0.0]);
        let y = apply_pseudo_inverse(&p, &Matrix::identity(2), 0.0).unwrap();
        assert_eq!(y.as_slice(), &[0.5, 0.0, 0.0, 0.0]);
        let small = diag_param(&[2.0, 1e-12]);
        let y = apply_pseudo_inverse(&small, &Matrix::identity(2), 1e-9).unwrap();
        assert_eq!(y.as_slice(), &[0.5, 0.0, 0.0, 0.0]);
        assert!(apply_pseudo_inverse(&p, &Matrix::identity(2), -1.0).is_err());
    }

    #[test]
    fn sigma_work_is_linear() {
        for d in [8usize, 64, 512] {
            let sigma: Vec<f64> = (0..d).map(|i| ((i * 7919) % 101) as f64 + 1.0).collect();
            let p = diag_param(&sigma);
            reset_sigma_work();
            log_abs_det(&p).unwrap();
            largest_singular_value(&p);
            frobenius_sq(&p);
            condition_number(&p).unwrap();
            assert_eq!(sigma_work(), 4 * d as u64);
            reset_sigma_work();
            truncate_rank(&p, d / 4).unwrap();
            assert!(sigma_work() <= 20 * d as u64, "d={d}: {}", sigma_work());
        }
    }
}
