//! Compact WY representation: a product of `b` Householder reflections written
//! as `I − 2WYᵀ` with `W, Y` both `d×b`.

use crate::error::{Error, Result};
use crate::householder::{HouseholderChain, HouseholderVector};
use crate::matrix::{axpy, Matrix};
use crate::parallel;
use crate::scalar::Scalar;

/// `I − 2WYᵀ = H₁⋯H_b` for the retained source vectors.
///
/// Column `j` of `W` is the unit-normalized `v_j`; column `j` of `Y` is
/// `(H_{j+1}⋯H_b)ᵀ v_j / ‖v_j‖`.
#[derive(Clone, Debug)]
pub struct WyBlock<T> {
    w: Matrix<T>,
    y: Matrix<T>,
    source: Vec<HouseholderVector<T>>,
    compaction_steps: usize,
}

impl<T: Scalar> WyBlock<T> {
    /// Compacts `vectors` (in chain order) into WY form.
    ///
    /// Starts from the last reflection and prepends one factor per step, so
    /// the construction takes exactly `b` dependent steps of `O(d·b)` work.
    pub fn compact(vectors: &[HouseholderVector<T>], dim: usize) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                op: "wy_compact",
                expected: dim.to_string(),
                found: bad.dim().to_string(),
            });
        }
        let b = vectors.len();
        let mut w = Matrix::zeros(dim, b);
        let mut y = Matrix::zeros(dim, b);
        let mut proj = vec![T::zero(); b];
        let mut steps = 0;
        for j in (0..b).rev() {
            let v = vectors[j].as_slice();
            let inv_norm = vectors[j].norm_sq().sqrt().recip();
            // proj[j+1..] = W[:, j+1..]ᵀ u
            let tail = j + 1..b;
            proj[tail.clone()].fill(T::zero());
            for (r, &vr) in v.iter().enumerate() {
                let ur = vr * inv_norm;
                if ur != T::zero() {
                    axpy(ur, &w.row(r)[tail.clone()], &mut proj[tail.clone()]);
                }
            }
            // Y[:, j] = u − 2 Y[:, j+1..] proj[j+1..];  W[:, j] = u
            for (r, &vr) in v.iter().enumerate() {
                let ur = vr * inv_norm;
                let row = y.row(r);
                let corr = row[tail.clone()]
                    .iter()
                    .zip(&proj[tail.clone()])
                    .fold(T::zero(), |acc, (&a, &p)| acc + a * p);
                y[(r, j)] = ur - T::two() * corr;
                w[(r, j)] = ur;
            }
            steps += 1;
        }
        Ok(Self {
            w,
            y,
            source: vectors.to_vec(),
            compaction_steps: steps,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.w.cols()
    }

    #[inline]
    pub fn w(&self) -> &Matrix<T> {
        &self.w
    }

    #[inline]
    pub fn y(&self) -> &Matrix<T> {
        &self.y
    }

    #[inline]
    pub fn source_vectors(&self) -> &[HouseholderVector<T>] {
        &self.source
    }

    /// Dependent steps spent in [`WyBlock::compact`].
    #[inline]
    pub fn compaction_steps(&self) -> usize {
        self.compaction_steps
    }

    /// `(I − 2WYᵀ)·X = X − 2W(YᵀX)`.
    pub fn apply(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        x.expect_rows(self.dim(), "wy_apply")?;
        Ok(self.apply_unchecked(&self.w, &self.y, x))
    }

    /// `(I − 2WYᵀ)ᵀ·X = X − 2Y(WᵀX)`.
    pub fn apply_transpose(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        x.expect_rows(self.dim(), "wy_apply_transpose")?;
        Ok(self.apply_unchecked(&self.y, &self.w, x))
    }

    fn apply_unchecked(&self, left: &Matrix<T>, right: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
        let inner = right.tr_matmul(x).expect("rows checked");
        let mut out = x.clone();
        out.sub_scaled_product(T::two(), left, &inner)
            .expect("shapes agree");
        out
    }

    /// Dense `I − 2WYᵀ`. Test and debugging aid only; `O(d²b)`.
    pub fn to_dense(&self) -> Matrix<T> {
        let mut out = Matrix::identity(self.dim());
        out.sub_scaled_product(T::two(), &self.w, &self.y.transpose())
            .expect("square");
        out
    }
}

/// A chain partitioned into consecutive WY blocks `P₁⋯P_q`.
#[derive(Clone, Debug)]
pub struct CompactedChain<T> {
    dim: usize,
    block_width: usize,
    blocks: Vec<WyBlock<T>>,
}

impl<T: Scalar> CompactedChain<T> {
    /// Splits `chain` into groups of `block_width` factors (the last group may
    /// be narrower) and compacts the groups concurrently.
    ///
    /// A width larger than the chain is clamped to the chain length.
    pub fn new(chain: &HouseholderChain<T>, block_width: usize) -> Result<Self> {
        if block_width == 0 {
            return Err(Error::ZeroBlockWidth);
        }
        let width = block_width.min(chain.len().max(1));
        let groups: Vec<&[HouseholderVector<T>]> = chain.vectors().chunks(width).collect();
        let blocks = parallel::map_tasks(&groups, |g| WyBlock::compact(g, chain.dim()))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: chain.dim(),
            block_width: width,
            blocks,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn block_width(&self) -> usize {
        self.block_width
    }

    #[inline]
    pub fn blocks(&self) -> &[WyBlock<T>] {
        &self.blocks
    }

    /// Total number of Householder factors.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(WyBlock::width).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Concatenated source vectors, i.e. the original chain.
    pub fn to_chain(&self) -> HouseholderChain<T> {
        let vectors = self
            .blocks
            .iter()
            .flat_map(|b| b.source_vectors().iter().cloned())
            .collect();
        HouseholderChain::new(self.dim, vectors).expect("blocks share the chain dimension")
    }

    /// Longest compaction among the blocks; blocks compact concurrently.
    pub fn compaction_depth(&self) -> usize {
        self.blocks
            .iter()
            .map(WyBlock::compaction_steps)
            .max()
            .unwrap_or(0)
    }
}
