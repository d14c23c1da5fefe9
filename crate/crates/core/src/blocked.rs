//! Blocked multiplication by a Householder chain and its backward pass.
//!
//! The chain is cut into WY blocks `P₁⋯P_q` of `b` reflections each. Building
//! the blocks is independent per block and runs in parallel; applying them is
//! a chain of `q` tall-skinny matrix products. Backpropagation first pushes the
//! output gradient through every `Pᵢᵀ` (sequential, `q` stages) and then
//! recovers the per-vector gradients of each block independently, rebuilding
//! the block-internal activations from the saved block boundary instead of
//! storing them.
//!
//! Sequential depth is `⌈n/b⌉ + b` in both directions, which is smallest near
//! `b = √d` for a full chain.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::householder::HouseholderChain;
use crate::matrix::Matrix;
use crate::parallel;
use crate::scalar::Scalar;
use crate::wy::CompactedChain;

/// Dependent stages recorded by [`forward`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ForwardStages {
    /// Sequential WY block applications (`⌈n/b⌉`).
    pub block_applications: usize,
    /// Longest per-block compaction; blocks compact concurrently.
    pub compaction_depth: usize,
}

impl ForwardStages {
    pub fn total(&self) -> usize {
        self.block_applications + self.compaction_depth
    }
}

/// Dependent stages recorded by [`backward_with_stages`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BackwardStages {
    /// Sequential `Pᵢᵀ` applications propagating the output gradient.
    pub transpose_applications: usize,
    /// Longest per-block reflection sweep; blocks are processed concurrently.
    pub inner_depth: usize,
}

impl BackwardStages {
    pub fn total(&self) -> usize {
        self.transpose_applications + self.inner_depth
    }
}

/// Saved forward state: the compacted chain plus every block boundary
/// activation `A₁..A_{q+1}` (`A₁` the output, `A_{q+1}` the input).
#[derive(Clone, Debug)]
pub struct Tape<T> {
    compacted: CompactedChain<T>,
    activations: Vec<Matrix<T>>,
    stages: ForwardStages,
}

impl<T: Scalar> Tape<T> {
    pub fn output(&self) -> &Matrix<T> {
        &self.activations[0]
    }

    pub fn input(&self) -> &Matrix<T> {
        self.activations.last().expect("tape holds the input")
    }

    pub fn activations(&self) -> &[Matrix<T>] {
        &self.activations
    }

    pub fn compacted(&self) -> &CompactedChain<T> {
        &self.compacted
    }

    pub fn stages(&self) -> ForwardStages {
        self.stages
    }

    pub fn into_output(mut self) -> Matrix<T> {
        self.activations.swap_remove(0)
    }
}

/// Gradients with respect to the chain input and every Householder vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BackwardResult<T> {
    pub grad_input: Matrix<T>,
    /// `∂L/∂vₖ` in chain order.
    pub grad_vectors: Vec<Vec<T>>,
}

/// Block width matching the batch size, the default trade-off.
pub fn default_block_width(batch: usize) -> usize {
    batch.max(1)
}

/// Computes `H₁⋯Hₙ·X` blockwise and records the tape needed by [`backward`].
pub fn forward<T: Scalar>(
    chain: &HouseholderChain<T>,
    x: &Matrix<T>,
    block_width: usize,
) -> Result<Tape<T>> {
    x.expect_rows(chain.dim(), "fasth_forward")?;
    let compacted = CompactedChain::new(chain, block_width)?;
    let q = compacted.blocks().len();
    let mut activations = Vec::with_capacity(q + 1);
    activations.push(x.clone());
    for block in compacted.blocks().iter().rev() {
        let next = block.apply(activations.last().expect("non-empty"))?;
        activations.push(next);
    }
    activations.reverse();
    let stages = ForwardStages {
        block_applications: q,
        compaction_depth: compacted.compaction_depth(),
    };
    Ok(Tape {
        compacted,
        activations,
        stages,
    })
}

/// Blockwise `H₁⋯Hₙ·X` without keeping intermediate activations.
pub fn multiply<T: Scalar>(
    chain: &HouseholderChain<T>,
    x: &Matrix<T>,
    block_width: usize,
) -> Result<Matrix<T>> {
    x.expect_rows(chain.dim(), "fasth_multiply")?;
    let compacted = CompactedChain::new(chain, block_width)?;
    let mut out = x.clone();
    for block in compacted.blocks().iter().rev() {
        out = block.apply(&out)?;
    }
    Ok(out)
}

pub fn backward<T: Scalar>(tape: &Tape<T>, grad_output: &Matrix<T>) -> Result<BackwardResult<T>> {
    backward_with_stages(tape, grad_output).map(|(r, _)| r)
}

/// [`backward`] that also reports the dependent stages it executed.
pub fn backward_with_stages<T: Scalar>(
    tape: &Tape<T>,
    grad_output: &Matrix<T>,
) -> Result<(BackwardResult<T>, BackwardStages)> {
    if grad_output.shape() != tape.output().shape() {
        return Err(Error::DimensionMismatch {
            op: "fasth_backward",
            expected: format!("{}x{}", tape.output().rows(), tape.output().cols()),
            found: format!("{}x{}", grad_output.rows(), grad_output.cols()),
        });
    }
    let blocks = tape.compacted.blocks();

    // Step 1: ∂L/∂A_{i+1} = Pᵢᵀ ∂L/∂Aᵢ, left to right.
    let mut grads = Vec::with_capacity(blocks.len() + 1);
    grads.push(grad_output.clone());
    for block in blocks {
        let next = block.apply_transpose(grads.last().expect("non-empty"))?;
        grads.push(next);
    }

    // Step 2: per block, sweep its reflections front to back. Â starts at the
    // block output Aᵢ and Ĝ at ∂L/∂Aᵢ; both move through Ĥⱼᵀ = Ĥⱼ.
    let tasks: Vec<usize> = (0..blocks.len()).collect();
    let per_block = parallel::map_tasks(&tasks, |&i| {
        let mut act = tape.activations[i].clone();
        let mut grad = grads[i].clone();
        let mut out = Vec::with_capacity(blocks[i].width());
        for h in blocks[i].source_vectors() {
            h.apply_left_in_place(&mut act);
            out.push(h.grad_unchecked(&act, &grad));
            h.apply_left_in_place(&mut grad);
        }
        out
    });

    let stages = BackwardStages {
        transpose_applications: blocks.len(),
        inner_depth: blocks.iter().map(|b| b.width()).max().unwrap_or(0),
    };
    let grad_input = grads.pop().expect("non-empty");
    Ok((
        BackwardResult {
            grad_input,
            grad_vectors: per_block.into_iter().flatten().collect(),
        },
        stages,
    ))
}

/// How [`tune_block_width`] picks a width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tuning {
    /// `round(√d)`, no timing.
    Analytic,
    /// Time forward+backward for every candidate on seeded synthetic data.
    Timed { seed: u64, reps: usize },
}

static TUNED: Mutex<Option<HashMap<(usize, usize), usize>>> = Mutex::new(None);

/// Default candidates `{2, …, 2⌈√d⌉} ∪ {m}`, clamped to `[1, d]`.
pub fn default_candidates(dim: usize, batch: usize) -> Vec<usize> {
    let upper = 2 * ceil_sqrt(dim);
    let mut c: Vec<usize> = (2..=upper).chain(std::iter::once(batch)).collect();
    for b in &mut c {
        *b = (*b).clamp(1, dim.max(1));
    }
    c.sort_unstable();
    c.dedup();
    c
}

/// Picks the block width for a `dim`-dimensional full chain and batch size
/// `batch`. Timed results for the default candidate set are cached per
/// `(dim, batch)`.
pub fn tune_block_width(
    dim: usize,
    batch: usize,
    candidates: Option<&[usize]>,
    tuning: Tuning,
) -> usize {
    let (seed, reps) = match tuning {
        Tuning::Analytic => return ((dim as f64).sqrt().round() as usize).max(1),
        Tuning::Timed { seed, reps } => (seed, reps.max(1)),
    };
    if candidates.is_none() {
        let cache = TUNED.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&b) = cache.as_ref().and_then(|c| c.get(&(dim, batch))) {
            return b;
        }
    }
    let owned;
    let candidates = match candidates {
        Some(c) if !c.is_empty() => c,
        _ => {
            owned = default_candidates(dim, batch);
            &owned
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = HouseholderChain::<f64>::random(dim, dim, &mut rng);
    let x = Matrix::from_fn(dim, batch.max(1), |_, _| rng.sample(StandardNormal));
    let g = Matrix::from_fn(dim, batch.max(1), |_, _| rng.sample(StandardNormal));

    let mut best = (f64::INFINITY, candidates[0].clamp(1, dim.max(1)));
    for &b in candidates {
        let b = b.clamp(1, dim.max(1));
        let mut fastest = f64::INFINITY;
        for _ in 0..reps {
            let start = Instant::now();
            let tape = forward(&chain, &x, b).expect("synthetic shapes agree");
            let grads = backward(&tape, &g).expect("synthetic shapes agree");
            std::hint::black_box(&grads);
            fastest = fastest.min(start.elapsed().as_secs_f64());
        }
        if fastest < best.0 {
            best = (fastest, b);
        }
    }

    if candidates.is_empty() || candidates == default_candidates(dim, batch).as_slice() {
        let mut cache = TUNED.lock().unwrap_or_else(|e| e.into_inner());
        cache.get_or_insert_with(HashMap::new).insert((dim, batch), best.1);
    }
    best.1
}

/// Cached timed width for `(dim, batch)`, if one has been tuned.
pub fn cached_block_width(dim: usize, batch: usize) -> Option<usize> {
    let cache = TUNED.lock().unwrap_or_else(|e| e.into_inner());
    cache.as_ref().and_then(|c| c.get(&(dim, batch)).copied())
}

/// Runs an instrumented forward and backward pass on synthetic data and
/// returns `(forward_stages, backward_stages)`.
pub fn count_sequential_stages(
    dim: usize,
    len: usize,
    batch: usize,
    block_width: usize,
) -> Result<(usize, usize)> {
    if dim == 0 || batch == 0 || block_width == 0 {
        return Err(Error::InvalidArgument("stage counting needs positive sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let chain = HouseholderChain::<f64>::random(dim, len, &mut rng);
    let x = Matrix::from_fn(dim, batch, |_, _| rng.sample(StandardNormal));
    let tape = forward(&chain, &x, block_width)?;
    let (_, back) = backward_with_stages(&tape, &x)?;
    Ok((tape.stages().total(), back.total()))
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}
