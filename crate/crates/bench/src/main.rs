use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use fasth_bench::config::{parse_dims, parse_list};
use fasth_bench::{run_bench, verify, write_csv, Algo, BenchConfig, BenchError, BlockWidth, Op, VerifyOptions};

const CONFIG_ERROR: u8 = 1;
const VERIFY_FAILURE: u8 = 2;

/// Benchmark and verify forward/backward passes through Householder chains.
#[derive(Parser, Debug)]
#[command(name = "fasth-bench", version)]
struct Cli {
    /// Dimensions: comma list (64,128) or start:step:count (64:64:48).
    #[arg(long, default_value = "64")]
    d: String,
    /// Batch size (columns of X).
    #[arg(long, default_value_t = 32)]
    m: usize,
    /// Block width for fasth: positive integer or `auto`.
    #[arg(long, default_value = "auto")]
    k: String,
    /// Comma list of sequential, dense-parallel, fasth.
    #[arg(long, default_value = "sequential,dense-parallel,fasth")]
    algo: String,
    /// Comma list of mul, inverse, det, exp, cayley, layer.
    #[arg(long, default_value = "mul")]
    op: String,
    /// Timed repetitions per record, after one warm-up.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the verification suite instead of timing.
    #[arg(long)]
    verify: bool,
    #[arg(long, hide = true)]
    inject_nan: bool,
}

impl Cli {
    fn config(&self) -> Result<BenchConfig, fasth_bench::ConfigError> {
        let config = BenchConfig {
            dims: parse_dims(&self.d)?,
            batch: self.m,
            block_width: self.k.parse::<BlockWidth>()?,
            algos: parse_list::<Algo>(&self.algo)?,
            ops: parse_list::<Op>(&self.op)?,
            reps: self.reps,
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
        };
        config.validate()?;
        Ok(config)
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let config = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };

    if cli.verify {
        let report = verify(&VerifyOptions {
            dims: config.dims.clone(),
            batch: config.batch,
            seed: config.seed,
            threads: config.threads,
            inject_nan: cli.inject_nan,
        });
        print!("{}", report.to_table());
        if let Some(path) = &config.out {
            if let Err(e) = std::fs::write(path, report.to_csv()) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(CONFIG_ERROR);
            }
        }
        return if report.all_passed() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(VERIFY_FAILURE)
        };
    }

    let records = match run_bench(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                BenchError::Config(_) | BenchError::Io(_) => CONFIG_ERROR,
                BenchError::Kernel(_) | BenchError::Mismatch { .. } => VERIFY_FAILURE,
            });
        }
    };
    let written = output(&config.out).and_then(|mut w| {
        write_csv(&records, &mut w)?;
        w.flush()
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
