//! Timing and verification harness for the chain kernels.
//!
//! [`run::run_bench`] times forward plus backward passes for each algorithm
//! and emits CSV; [`verify::verify`] runs oracle and invariant checks and
//! returns a pass/fail report.

pub mod config;
pub mod run;
pub mod verify;

pub use config::{Algo, BenchConfig, BlockWidth, ConfigError, Op};
pub use run::{run_bench, write_csv, BenchError, BenchRecord, CSV_HEADER};
pub use verify::{verify, Report, VerifyOptions};
