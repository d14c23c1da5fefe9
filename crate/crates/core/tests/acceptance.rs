//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one line per criterion. Exits non-zero if any hard criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use fasth::blocked::{self, count_sequential_stages, tune_block_width};
use fasth::kernel::{ChainKernel, FastH, Sequential};
use fasth::matops;
use fasth::{io, parallel, HouseholderChain, SvdParam, Tuning};
use fasth_oracle::DMatrix;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Soft(String),
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn rel_dense(a: &fasth::Matrix<f64>, b: &DMatrix<f64>) -> f64 {
    fasth_oracle::rel_frobenius(&to_dense(a), b)
}

fn suite_configs() -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for d in [8usize, 64, 256] {
        let root = (d as f64).sqrt() as usize;
        for n in [1, d / 2, d] {
            for m in [1usize, 8, 32] {
                for b in [1, 2, root, m, n] {
                    out.push((d, n, m, b));
                }
            }
        }
    }
    out
}

fn forward_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let grid = suite_configs();
    let mut configs = grid.clone();
    while configs.len() < 200 {
        configs.push(grid[rng.random_range(0..grid.len())]);
    }
    let mut worst: f64 = 0.0;
    for &(d, n, m, b) in &configs {
        let chain = raw_chain(d, n, &mut rng);
        let x = gaussian(d, m, &mut rng);
        let fast = blocked::forward(&chain, &x, b).unwrap();
        let seq = chain.apply_sequential(&x).unwrap();
        worst = worst.max(fast.output().relative_error(&seq).unwrap());
    }
    let elapsed = start.elapsed();
    let detail = format!("{} instances, worst rel err {worst:.2e}, {:.1}s", configs.len(), elapsed.as_secs_f64());
    if worst < 1e-10 && elapsed < Duration::from_secs(120) {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn chain_loss(d: usize, x: &DMatrix<f64>, g: &DMatrix<f64>, flat: &[f64]) -> f64 {
    let vs: Vec<Vec<f64>> = flat.chunks(d).map(<[f64]>::to_vec).collect();
    frobenius_inner(g, &(fasth_oracle::chain_product(d, &vs) * x))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        // Blocked chain backward: vectors and input.
        let d = rng.random_range(2..=16);
        let n = rng.random_range(1..=d);
        let m = rng.random_range(1..=4);
        let b = rng.random_range(1..=n);
        let chain = raw_chain(d, n, &mut rng);
        let x = gaussian(d, m, &mut rng);
        let g = gaussian(d, m, &mut rng);
        let (x_d, g_d) = (to_dense(&x), to_dense(&g));
        let tape = blocked::forward(&chain, &x, b).unwrap();
        let grads = blocked::backward(&tape, &g).unwrap();
        let numeric_v = fasth_oracle::central_difference(|f| chain_loss(d, &x_d, &g_d, f), &raw_vectors(&chain).concat(), FD_STEP);
        let q = oracle_chain(&chain);
        let numeric_x = fasth_oracle::central_difference(
            |f| frobenius_inner(&g_d, &(&q * fasth_oracle::dense(d, m, f))),
            x.as_slice(),
            FD_STEP,
        );
        worst = worst.max(fasth_oracle::worst_relative_error(&grads.grad_vectors.concat(), &numeric_v, FD_ABS_FLOOR));
        worst = worst.max(fasth_oracle::worst_relative_error(grads.grad_input.as_slice(), &numeric_x, FD_ABS_FLOOR));

        // Layer backward: sigma and both chains.
        let d = rng.random_range(2..=16);
        let m = rng.random_range(1..=3);
        let p = random_param(d, d, &mut rng);
        let x = gaussian(d, m, &mut rng);
        let g = gaussian(d, m, &mut rng);
        let (x_d, g_d) = (to_dense(&x), to_dense(&g));
        let bw = rng.random_range(1..=d);
        let (_, tape) = p.forward(&x, bw).unwrap();
        let grads = p.backward(&tape, &g, bw).unwrap();
        let (u, v) = (oracle_chain(p.u()), oracle_chain(p.v()));
        let numeric_sigma = fasth_oracle::central_difference(
            |s| frobenius_inner(&g_d, &(&u * rect_diag(d, d, s) * v.transpose() * &x_d)),
            p.sigma(),
            FD_STEP,
        );
        let sigma_u = &u * rect_diag(d, d, p.sigma());
        let numeric_vv = fasth_oracle::central_difference(
            |f| {
                let vs: Vec<Vec<f64>> = f.chunks(d).map(<[f64]>::to_vec).collect();
                frobenius_inner(&g_d, &(&sigma_u * fasth_oracle::chain_product(d, &vs).transpose() * &x_d))
            },
            &raw_vectors(p.v()).concat(),
            FD_STEP,
        );
        let right = rect_diag(d, d, p.sigma()) * v.transpose() * &x_d;
        let numeric_uu = fasth_oracle::central_difference(|f| chain_loss(d, &right, &g_d, f), &raw_vectors(p.u()).concat(), FD_STEP);
        worst = worst.max(fasth_oracle::worst_relative_error(&grads.grad_sigma, &numeric_sigma, FD_ABS_FLOOR));
        worst = worst.max(fasth_oracle::worst_relative_error(&grads.grad_v.concat(), &numeric_vv, FD_ABS_FLOOR));
        worst = worst.max(fasth_oracle::worst_relative_error(&grads.grad_u.concat(), &numeric_uu, FD_ABS_FLOOR));
    }
    let elapsed = start.elapsed();
    let detail = format!("50 chain + 50 layer instances, worst rel err {worst:.2e}, {:.1}s", elapsed.as_secs_f64());
    if worst < FD_REL_TOL && elapsed < Duration::from_secs(60) {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn orthogonality_preservation() -> Outcome {
    let d = 32;
    let mut rng = rng(3);
    let mut p = SvdParam::<f64>::random(d, d, &mut rng);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = gaussian(d, 8, &mut rng);
        let g = gaussian(d, 8, &mut rng);
        let (_, tape) = p.forward(&x, 6).unwrap();
        let grads = p.backward(&tape, &g, 6).unwrap();
        p = p.step(&grads, 1e-3).unwrap();
        worst = worst.max(fasth_oracle::orthogonality_defect(&oracle_chain(p.u())));
        worst = worst.max(fasth_oracle::orthogonality_defect(&oracle_chain(p.v())));
    }
    let detail = format!("1000 steps at d=32, worst defect {worst:.2e}");
    if worst < 1e-9 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn stage_count_contract() -> Outcome {
    let mut checked = 0;
    for (d, n, m, b) in suite_configs() {
        let (fwd, _) = count_sequential_stages(d, n, m, b).unwrap();
        // A width beyond the chain length is clamped to it.
        let eff = b.min(n);
        if fwd != n.div_ceil(eff) + eff {
            return Outcome::Fail(format!("d={d} n={n} m={m} b={b}: {fwd} stages"));
        }
        checked += 1;
    }
    for d in [8usize, 64, 256] {
        let counts: Vec<usize> = (1..=d).map(|b| count_sequential_stages(d, d, 1, b).unwrap().0).collect();
        let min = *counts.iter().min().unwrap();
        let root = (d as f64).sqrt();
        let at_root = counts[root.floor() as usize - 1].min(counts[root.ceil() as usize - 1]);
        if at_root != min {
            return Outcome::Fail(format!("d={d}: minimum {min} not at b≈√d ({at_root})"));
        }
    }
    Outcome::Pass(format!("{checked} configurations exact, minimum at b≈√d for d∈{{8,64,256}}"))
}

fn matrix_operation_oracles() -> Outcome {
    let mut worst = [0.0f64; 9];
    for seed in 0..100u64 {
        let mut rng = rng(4000 + seed);
        let d = [2usize, 5, 8, 16, 33, 64][seed as usize % 6];
        let p = random_param(d, d, &mut rng);
        let w = oracle_weight(&p);
        let x = gaussian(d, 3, &mut rng);
        let xd = to_dense(&x);
        let s = fasth_oracle::singular_values(&w);
        let sym = symmetric_param(d, &mut rng);
        let ws = oracle_chain(sym.u()) * DMatrix::from_diagonal(&sym.sigma().to_vec().into()) * oracle_chain(sym.u()).transpose();
        let k = 1 + seed as usize % d;
        // Dense singular vectors lose accuracy when σ_k ≈ σ_{k+1}, so compare
        // the residual energy with the oracle's tail instead of W_k itself.
        let truncated = matops::truncate_rank(&p, k).unwrap();
        let residual = (&w - to_dense(&truncated.materialize())).norm_squared();
        let tail: f64 = s[k..].iter().map(|x| x * x).sum();
        let rank_ok = truncated.sigma().iter().filter(|x| **x != 0.0).count() == k;
        let errs = [
            rel(matops::log_abs_det(&p).unwrap(), fasth_oracle::log_abs_det(&w)),
            rel_dense(&matops::apply_inverse(&p, &x, 4).unwrap(), &fasth_oracle::solve(&w, &xd)),
            rel(matops::largest_singular_value(&p), s[0]),
            rel_dense(&matops::apply_exponential(&sym, &x).unwrap(), &(fasth_oracle::expm(&ws) * &xd)),
            rel_dense(&matops::apply_cayley(&sym, &x).unwrap(), &(fasth_oracle::cayley(&ws) * &xd)),
            rel(matops::frobenius_sq(&p), w.norm_squared()),
            if rank_ok { (residual - tail).abs() / w.norm_squared() } else { f64::INFINITY },
            rel_dense(&matops::apply_pseudo_inverse(&p, &x, 1e-12).unwrap(), &(fasth_oracle::pseudo_inverse(&w, 1e-12) * &xd)),
            rel(matops::condition_number(&p).unwrap(), fasth_oracle::condition_number(&w)),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let names = ["logdet", "inverse", "sigma_max", "exp", "cayley", "frob", "truncate", "pinv", "cond"];
    let tols = [1e-9, 1e-9, 1e-10, 1e-9, 1e-9, 1e-10, 1e-9, 1e-8, 1e-8];
    let detail = names
        .iter()
        .zip(&worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    if worst.iter().zip(&tols).all(|(w, t)| w < t) {
        Outcome::Pass(format!("100 seeds, d<=64: {detail}"))
    } else {
        Outcome::Fail(detail)
    }
}

fn time_pass<K: ChainKernel<f64>>(k: &K, chain: &HouseholderChain<f64>, x: &fasth::Matrix<f64>, reps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..reps {
        let start = Instant::now();
        let tape = k.forward(chain, x).unwrap();
        let grads = k.backward(chain, &tape, x).unwrap();
        std::hint::black_box(&grads);
        best = best.min(start.elapsed().as_secs_f64());
    }
    best
}

fn relative_speed() -> Outcome {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let (d, m) = (512, 32);
    let mut rng = rng(6);
    let chain = HouseholderChain::<f64>::random(d, d, &mut rng);
    let x = gaussian(d, m, &mut rng);
    let (seq, fast, b) = parallel::with_threads(cores, || {
        let b = tune_block_width(d, m, None, Tuning::Timed { seed: 6, reps: 1 });
        (time_pass(&Sequential, &chain, &x, 3), time_pass(&FastH { block_width: b }, &chain, &x, 3), b)
    });
    let detail = format!(
        "d=512 n=512 m=32 threads={cores}: sequential {seq:.3}s, fasth(b={b}) {fast:.3}s, speedup {:.2}x",
        seq / fast
    );
    if cores < 4 {
        Outcome::Soft(format!("{detail}; precondition of >=4 cores not met"))
    } else if fast < seq {
        Outcome::Pass(detail)
    } else {
        Outcome::Soft(format!("{detail}; fasth not faster"))
    }
}

fn eckart_young() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = rng(7);
    for d in [4usize, 8, 16, 32] {
        for k in [1, d / 4, d / 2, d - 1] {
            let k = k.max(1);
            let p = random_param(d, d, &mut rng);
            let w = oracle_weight(&p);
            let t = matops::truncate_rank(&p, k).unwrap();
            worst = worst.max(rel_dense(&t.materialize(), &fasth_oracle::best_rank_k(&w, k)));
            let residual = (&w - to_dense(&t.materialize())).norm_squared();
            let tail: f64 = fasth_oracle::singular_values(&w)[k..].iter().map(|s| s * s).sum();
            worst = worst.max((residual - tail).abs() / w.norm_squared());
        }
    }
    let detail = format!("d<=32, worst rel err {worst:.2e}");
    if worst < 1e-9 {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn serialization_roundtrip() -> Outcome {
    let mut rng = rng(8);
    for i in 0..100 {
        let out = rng.random_range(1..=24);
        let inp = rng.random_range(1..=24);
        let p = random_param(out, inp, &mut rng);
        let bytes = io::to_bytes(&p);
        let q: SvdParam<f64> = io::from_bytes(&bytes).unwrap();
        let same_sigma = p.sigma().iter().zip(q.sigma()).all(|(a, b)| a.to_bits() == b.to_bits());
        let same_chains = [(p.u(), q.u()), (p.v(), q.v())].iter().all(|(a, b)| {
            a.len() == b.len()
                && a.vectors().iter().zip(b.vectors()).all(|(x, y)| {
                    x.as_slice().iter().zip(y.as_slice()).all(|(s, t)| s.to_bits() == t.to_bits())
                })
        });
        if !same_sigma || !same_chains || io::to_bytes(&q) != bytes {
            return Outcome::Fail(format!("parameter {i} ({out}x{inp}) changed"));
        }
    }
    Outcome::Pass("100 random parameters bitwise identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 forward oracle equivalence", forward_equivalence),
        ("2 gradient correctness", gradient_correctness),
        ("3 orthogonality preservation", orthogonality_preservation),
        ("4 stage-count contract", stage_count_contract),
        ("5 matrix-operation oracles", matrix_operation_oracles),
        ("6 relative speed (soft)", relative_speed),
        ("7 Eckart-Young truncation", eckart_young),
        ("8 serialization round-trip", serialization_roundtrip),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Outcome::Fail(format!("panicked: {:?}", e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()))));
        match outcome {
            Outcome::Pass(d) => println!("PASS  {name}: {d}"),
            Outcome::Soft(d) => println!("SOFT  {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
