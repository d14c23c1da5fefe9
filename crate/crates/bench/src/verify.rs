use std::fmt::Write as _;

use fasth::blocked::{self, count_sequential_stages};
use fasth::{io, matops, parallel, reference, HouseholderChain, Matrix, SvdParam};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub dims: Vec<usize>,
    pub batch: usize,
    pub seed: u64,
    pub threads: usize,
    /// Corrupts the parameter fixture with a NaN singular value.
    pub inject_nan: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dims: vec![8, 64],
            batch: 8,
            seed: 0,
            threads: 0,
            inject_nan: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn bound(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        let passed = value < tol;
        self.push(name, passed, format!("{value:.3e} (< {tol:e})"));
    }

    pub fn to_table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status}  {:<width$}  {}", c.name, c.detail);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.checks.len());
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,status,detail\n");
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "fail" };
            let _ = writeln!(out, "{},{status},\"{}\"", c.name, c.detail.replace('"', "'"));
        }
        out
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn raw_vectors(chain: &HouseholderChain<f64>) -> Vec<Vec<f64>> {
    chain.vectors().iter().map(|v| v.as_slice().to_vec()).collect()
}

fn dense(m: &Matrix<f64>) -> fasth_oracle::DMatrix<f64> {
    fasth_oracle::dense(m.rows(), m.cols(), m.as_slice())
}

fn flat_rel(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Runs the oracle, gradient and invariant checks at every requested size.
/// Failures are report content, never errors.
pub fn verify(opts: &VerifyOptions) -> Report {
    parallel::with_threads(opts.threads, || {
        let mut report = Report::default();
        fixture_check(&mut report, opts);
        for &d in &opts.dims {
            if let Err(e) = size_checks(&mut report, d, opts) {
                report.push(format!("d={d} kernel"), false, e.to_string());
            }
        }
        let start = std::time::Instant::now();
        let (d, m) = (512, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let chain = HouseholderChain::random(d, d, &mut rng);
        let x = gaussian(d, m, &mut rng);
        match reference::sequential_forward_backward(&chain, &x, &x) {
            Ok((y, grads)) => {
                let finite = y.as_slice().iter().chain(grads.grad_input.as_slice()).all(|v| v.is_finite());
                report.push(
                    "sequential d=512 completes",
                    finite,
                    format!("{:.2}s, finite outputs: {finite}", start.elapsed().as_secs_f64()),
                );
            }
            Err(e) => report.push("sequential d=512 completes", false, e.to_string()),
        }
        report
    })
}

fn fixture_check(report: &mut Report, opts: &VerifyOptions) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d = 4;
    let mut sigma: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..2.0)).collect();
    if opts.inject_nan {
        sigma[0] = f64::NAN;
    }
    let built = SvdParam::new(
        HouseholderChain::random(d, d, &mut rng),
        HouseholderChain::random(d, d, &mut rng),
        sigma,
    );
    match built {
        Ok(_) => report.push("parameter fixture validates", true, "finite sigma"),
        Err(e) => report.push("parameter fixture validates", false, format!("sigma rejected: {e}")),
    }
}

fn size_checks(report: &mut Report, d: usize, opts: &VerifyOptions) -> fasth::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(d as u64));
    let m = opts.batch;
    let b = ((d as f64).sqrt().round() as usize).max(1);
    let chain = HouseholderChain::random(d, d, &mut rng);
    let x = gaussian(d, m, &mut rng);
    let g = gaussian(d, m, &mut rng);

    let tape = blocked::forward(&chain, &x, b)?;
    let expected = fasth_oracle::chain_product(d, &raw_vectors(&chain)) * dense(&x);
    report.bound(
        format!("d={d} forward vs dense oracle"),
        fasth_oracle::rel_frobenius(&dense(tape.output()), &expected),
        1e-10,
    );

    let fast = blocked::backward(&tape, &g)?;
    let (_, seq) = reference::sequential_forward_backward(&chain, &x, &g)?;
    let err = fast
        .grad_input
        .relative_error(&seq.grad_input)?
        .max(flat_rel(&fast.grad_vectors, &seq.grad_vectors));
    report.bound(format!("d={d} backward vs sequential"), err, 1e-10);

    let small = d.min(8);
    let c = HouseholderChain::from_vecs(small, (0..small).map(|_| (0..small).map(|_| rng.sample(StandardNormal)).collect()).collect())?;
    let xs = gaussian(small, 2, &mut rng);
    let gs = gaussian(small, 2, &mut rng);
    let grads = blocked::backward(&blocked::forward(&c, &xs, 2)?, &gs)?;
    let (xd, gd) = (dense(&xs), dense(&gs));
    let numeric = fasth_oracle::central_difference(
        |f| {
            let vs: Vec<Vec<f64>> = f.chunks(small).map(<[f64]>::to_vec).collect();
            (fasth_oracle::chain_product(small, &vs) * &xd).component_mul(&gd).sum()
        },
        &raw_vectors(&c).concat(),
        1e-5,
    );
    report.bound(
        format!("d={d} gradient vs finite differences"),
        fasth_oracle::worst_relative_error(&grads.grad_vectors.concat(), &numeric, 1e-8),
        1e-6,
    );

    let (fwd, bwd) = count_sequential_stages(d, d, m, b)?;
    let want = d.div_ceil(b) + b;
    report.push(
        format!("d={d} stage counts"),
        fwd == want && bwd == want,
        format!("forward {fwd}, backward {bwd}, expected {want}"),
    );

    let mut p = SvdParam::new(
        chain.clone(),
        HouseholderChain::random(d, d, &mut rng),
        (0..d).map(|_| rng.random_range(0.5..2.0)).collect(),
    )?;
    let (y, _) = p.forward(&x, b)?;
    let oracle_w = fasth_oracle::chain_product(d, &raw_vectors(p.u()))
        * fasth_oracle::DMatrix::from_diagonal(&p.sigma().to_vec().into())
        * fasth_oracle::chain_product(d, &raw_vectors(p.v())).transpose();
    report.bound(format!("d={d} layer vs dense oracle"), fasth_oracle::rel_frobenius(&dense(&y), &(&oracle_w * dense(&x))), 1e-9);
    report.bound(
        format!("d={d} log|det| vs LU"),
        (matops::log_abs_det(&p)? - fasth_oracle::log_abs_det(&oracle_w)).abs() / fasth_oracle::log_abs_det(&oracle_w).abs().max(1.0),
        1e-9,
    );
    let back = matops::apply_inverse(&p, &y, b)?;
    report.bound(format!("d={d} inverse round-trip"), back.relative_error(&x)?, 1e-9);

    for _ in 0..20 {
        let (_, tape) = p.forward(&x, b)?;
        let grads = p.backward(&tape, &g, b)?;
        p = p.step(&grads, 1e-3)?;
    }
    let defect = p.u().to_dense().orthogonality_defect().max(p.v().to_dense().orthogonality_defect());
    report.bound(format!("d={d} orthogonality after 20 steps"), defect, 1e-9);

    let bytes = io::to_bytes(&p);
    let same = io::from_bytes::<f64>(&bytes).map(|q| io::to_bytes(&q) == bytes).unwrap_or(false);
    report.push(format!("d={d} serialization round-trip"), same, if same { "bitwise" } else { "changed" });
    Ok(())
}
