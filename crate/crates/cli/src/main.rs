use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use arbor_cli::{exit_code, run, sweep, synth, BenchConfig, SweepAxis, SynthConfig};
use arbor_core::dataflow::PlanKind;
use arbor_core::engine::compiled::{compile_forest, EXTENSION};
use arbor_core::io::{SourceFormat, DEFAULT_BLOCK_ROWS};
use arbor_core::model::{parse_model, parse_model_with, Limits};
use arbor_core::{EngineKind, Error, ModelKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arbor", version, about = "Decision-forest inference benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Timed load/infer/write repeats; prints the JSON report.
    Run(RunArgs),
    /// One run per axis value plus a combined CSV table.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// batch_blocks | block_rows | workers | engine | plan
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Combined table path; printed to stdout if absent.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Seeded random model plus dataset files.
    Synth(SynthArgs),
    /// Validates a model and prints its shape.
    InspectModel {
        model: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
    },
    /// Emits the decision program for a model.
    Compile {
        model: PathBuf,
        /// Defaults to the model path with the program extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        unit_size: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// csv | libsvm | native; inferred from the extension if absent.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    num_features: Option<usize>,
    #[arg(long, default_value = "naive")]
    engine: String,
    #[arg(long, default_value = "udf")]
    plan: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = DEFAULT_BLOCK_ROWS)]
    block_rows: usize,
    #[arg(long)]
    batch_blocks: Option<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    warmups: usize,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value = "predictions.csv")]
    output: PathBuf,
    #[arg(long)]
    store: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<BenchConfig, Error> {
        let format = match &self.format {
            Some(f) => f.parse::<SourceFormat>()?,
            None => SourceFormat::from_path(&self.dataset)
                .ok_or_else(|| Error::Config("pass --format; the extension is not recognized".into()))?,
        };
        Ok(BenchConfig {
            model: self.model.clone(),
            dataset: self.dataset.clone(),
            format,
            num_features: self.num_features,
            engine: self.engine.parse::<EngineKind>()?,
            plan: self.plan.parse::<PlanKind>()?,
            workers: self.workers,
            block_rows: self.block_rows,
            batch_blocks: self.batch_blocks,
            repeats: self.repeats,
            warmups: self.warmups,
            report: self.report.clone(),
            output: self.output.clone(),
            store: self.store.clone(),
        })
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    trees: usize,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long)]
    num_features: usize,
    #[arg(long)]
    rows: usize,
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    #[arg(long, default_value_t = 0.0)]
    missing_rate: f64,
    /// random_forest | gradient_boosting
    #[arg(long, default_value = "gradient_boosting")]
    kind: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[arg(long)]
    libsvm_out: Option<PathBuf>,
    #[arg(long)]
    native_out: Option<PathBuf>,
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => print_json(&run(&args.config()?)?),
        Command::Sweep { run, axis, values, table } => {
            let axis: SweepAxis = axis.parse()?;
            let out = sweep(&run.config()?, axis, &values, table.as_deref())?;
            if table.is_none() {
                print!("{}", out.table);
            }
        }
        Command::Synth(a) => {
            let kind = ModelKind::parse(&a.kind).ok_or_else(|| Error::Config(format!("unknown model kind {:?}", a.kind)))?;
            let out = synth(&SynthConfig {
                trees: a.trees,
                depth: a.depth,
                num_features: a.num_features,
                rows: a.rows,
                sparsity: a.sparsity,
                missing_rate: a.missing_rate,
                kind,
                seed: a.seed,
                model_out: a.model_out,
                csv_out: a.csv_out,
                libsvm_out: a.libsvm_out,
                native_out: a.native_out,
            })?;
            print_json(&serde_json::json!({ "cells": out.cells, "missing_cells": out.missing_cells }));
        }
        Command::InspectModel { model, max_depth } => {
            let bytes = fs::read(&model).map_err(|e| Error::io(&model, e))?;
            let forest = parse_model_with(&bytes, Limits { max_depth })?;
            let nodes: usize = forest.trees.iter().map(|t| t.len()).sum();
            print_json(&serde_json::json!({
                "kind": forest.kind.as_str(),
                "trees": forest.trees.len(),
                "num_features": forest.num_features,
                "base_score": forest.base_score,
                "max_depth": forest.max_depth(),
                "max_leaves": forest.max_leaves(),
                "nodes": nodes,
                "sibling_adjacent": forest.trees.iter().all(|t| t.sibling_adjacent),
            }));
        }
        Command::Compile { model, out, unit_size } => {
            if unit_size == 0 {
                return Err(Error::Config("unit_size must be positive".into()).into());
            }
            let bytes = fs::read(&model).map_err(|e| Error::io(&model, e))?;
            let forest = parse_model(&bytes)?;
            let start = std::time::Instant::now();
            let program = compile_forest(&forest, unit_size);
            let compile_ms = start.elapsed().as_secs_f64() * 1e3;
            let out = out.unwrap_or_else(|| model.with_extension(EXTENSION));
            let text = program.to_text();
            fs::write(&out, &text).with_context(|| format!("writing {}", out.display()))?;
            print_json(&serde_json::json!({
                "out": out.display().to_string(),
                "units": program.units.len(),
                "bytes": text.len(),
                "compile_ms": compile_ms,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Core errors already embed their cause.
            let code = match err.downcast_ref::<Error>() {
                Some(e) => {
                    eprintln!("error: {e}");
                    exit_code(e)
                }
                None => {
                    eprintln!("error: {err:#}");
                    1
                }
            };
            ExitCode::from(code as u8)
        }
    }
}
