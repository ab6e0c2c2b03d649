//! Benchmark harness: timed load/infer/write runs, parameter sweeps, and
//! synthetic workload generation. The `arbor` binary is a thin clap layer
//! over this crate.

mod config;
mod harness;
mod report;
mod synth;

pub use config::{BenchConfig, SweepAxis};
pub use harness::{prediction_hash, run, sweep, SweepOutput, SWEEP_COLUMNS};
pub use report::{BenchReport, ConfigSummary, Environment, OneTimeCosts, RepeatTiming, StageReport, Stats, Summary};
pub use synth::{synth, SynthConfig, SynthOutput};

use arbor_core::Error;

/// Process exit code for a failed command: 2 for configuration errors, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::UnsupportedEngineForPlan { .. } => 2,
        _ => 1,
    }
}
