use std::io::Write;
use std::time::Instant;

use fasth::blocked::tune_block_width;
use fasth::kernel::{ChainKernel, DenseParallel, FastH, Sequential};
use fasth::svd::{sandwich_backward, sandwich_forward};
use fasth::{matops, parallel, HouseholderChain, Matrix, SvdParam, Tuning};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Algo, BenchConfig, BlockWidth, ConfigError, Op};

pub const CSV_HEADER: &str = "algo,op,d,m,k,reps,threads,mean_s,std_s,checksum";

/// Outputs of different algorithms must agree to this relative error.
pub const AGREEMENT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] fasth::Error),
    #[error("{algo} disagrees with {baseline} on op={op} d={d}: relative error {error:e}")]
    Mismatch {
        algo: Algo,
        baseline: Algo,
        op: Op,
        d: usize,
        error: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub algo: Algo,
    pub op: Op,
    pub d: usize,
    pub m: usize,
    /// Block width used by `fasth`; 0 for the other algorithms.
    pub k: usize,
    pub reps: usize,
    pub threads: usize,
    pub mean_s: f64,
    pub std_s: f64,
    pub checksum: String,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.9},{:.9},{}",
            self.algo, self.op, self.d, self.m, self.k, self.reps, self.threads, self.mean_s, self.std_s, self.checksum
        )
    }
}

pub fn write_csv(records: &[BenchRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// SHA-256 of the output rounded to 8 decimals, first 16 hex digits.
pub fn checksum(m: &Matrix<f64>) -> String {
    let mut hasher = Sha256::new();
    hasher.update((m.rows() as u64).to_le_bytes());
    hasher.update((m.cols() as u64).to_le_bytes());
    for &x in m.as_slice() {
        // Integer representation sidesteps -0.0 and formatting differences.
        let q = (x * 1e8).round() as i64;
        hasher.update(q.to_le_bytes());
    }
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Seeded inputs shared by every algorithm at one dimension.
pub struct Workload {
    pub param: SvdParam<f64>,
    pub symmetric: SvdParam<f64>,
    pub x: Matrix<f64>,
    pub g: Matrix<f64>,
}

impl Workload {
    pub fn generate(d: usize, m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (d as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let u = HouseholderChain::random(d, d, &mut rng);
        let v = HouseholderChain::random(d, d, &mut rng);
        let sigma = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
        let param = SvdParam::new(u.clone(), v, sigma).expect("finite sigma");
        let sym_sigma = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let symmetric = SvdParam::symmetric(u, sym_sigma).expect("finite sigma");
        let x = Matrix::from_fn(d, m, |_, _| rng.sample(StandardNormal));
        let g = Matrix::from_fn(d, m, |_, _| rng.sample(StandardNormal));
        Self { param, symmetric, x, g }
    }
}

/// One timed unit: the O(d) matrix operation (if any), the forward pass and
/// the backward pass. Returns the forward output.
pub fn execute<K: ChainKernel<f64>>(kernel: &K, op: Op, w: &Workload) -> Result<Matrix<f64>, fasth::Error> {
    let sandwich = |left: &HouseholderChain<f64>, diag: &[f64], right: &HouseholderChain<f64>| {
        let (y, tape) = sandwich_forward(kernel, left, diag, right, &w.x)?;
        let grads = sandwich_backward(kernel, left, diag, &tape, &w.g)?;
        std::hint::black_box(&grads);
        Ok(y)
    };
    let p = &w.param;
    match op {
        Op::Mul => {
            let tape = kernel.forward(p.u(), &w.x)?;
            let grads = kernel.backward(p.u(), &tape, &w.g)?;
            std::hint::black_box(&grads);
            Ok(kernel.output(&tape).clone())
        }
        Op::Layer => sandwich(p.u(), p.sigma(), p.v()),
        Op::Det => {
            std::hint::black_box(matops::log_abs_det(p)?);
            sandwich(p.u(), p.sigma(), p.v())
        }
        Op::Inverse => {
            let inv: Vec<f64> = p.sigma().iter().map(|s| s.recip()).collect();
            sandwich(p.v(), &inv, p.u())
        }
        Op::Exp => {
            let s = &w.symmetric;
            let diag: Vec<f64> = s.sigma().iter().map(|x| x.exp()).collect();
            sandwich(s.u(), &diag, s.u())
        }
        Op::Cayley => {
            let s = &w.symmetric;
            let diag: Vec<f64> = s.sigma().iter().map(|x| (1.0 - x) / (1.0 + x)).collect();
            sandwich(s.u(), &diag, s.u())
        }
    }
}

fn execute_algo(algo: Algo, k: usize, op: Op, w: &Workload) -> Result<Matrix<f64>, fasth::Error> {
    match algo {
        Algo::Sequential => execute(&Sequential, op, w),
        Algo::DenseParallel => execute(&DenseParallel, op, w),
        Algo::Fasth => execute(&FastH { block_width: k }, op, w),
    }
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Times every `(d, op, algo)` combination. Each record gets one untimed
/// warm-up run whose output feeds the checksum; then `reps` timed runs.
/// Fails if two algorithms disagree on the same inputs.
pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRecord>, BenchError> {
    config.validate()?;
    parallel::with_threads(config.threads, || {
        let threads = parallel::effective_threads();
        let mut records = Vec::new();
        for &d in &config.dims {
            let work = Workload::generate(d, config.batch, config.seed);
            let k = match config.block_width {
                BlockWidth::Fixed(k) => k.min(d),
                BlockWidth::Auto => tune_block_width(d, config.batch, None, Tuning::Timed { seed: config.seed, reps: 1 }),
            };
            for &op in &config.ops {
                let mut baseline: Option<(Algo, Matrix<f64>)> = None;
                for &algo in &config.algos {
                    let output = execute_algo(algo, k, op, &work)?;
                    let mut samples = Vec::with_capacity(config.reps);
                    for _ in 0..config.reps {
                        let start = Instant::now();
                        let out = execute_algo(algo, k, op, &work)?;
                        samples.push(start.elapsed().as_secs_f64());
                        std::hint::black_box(out);
                    }
                    let (mean_s, std_s) = mean_std(&samples);
                    let sum = checksum(&output);
                    match &baseline {
                        Some((base_algo, base)) => {
                            let error = output.relative_error(base)?;
                            if !(error <= AGREEMENT_TOL) {
                                return Err(BenchError::Mismatch { algo, baseline: *base_algo, op, d, error });
                            }
                        }
                        None => baseline = Some((algo, output)),
                    }
                    records.push(BenchRecord {
                        algo,
                        op,
                        d,
                        m: config.batch,
                        k: if algo == Algo::Fasth { k } else { 0 },
                        reps: config.reps,
                        threads,
                        mean_s,
                        std_s,
                        checksum: sum,
                    });
                }
            }
        }
        Ok(records)
    })
}
