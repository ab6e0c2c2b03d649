use std::fs;
use std::path::PathBuf;

use arbor_core::io::{store_native, write_csv, write_libsvm, NativeLayout, DEFAULT_BLOCK_ROWS};
use arbor_core::model::to_json;
use arbor_core::synth::{random_data, random_forest, DataSpec, ForestSpec};
use arbor_core::{Error, ModelKind, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub trees: usize,
    pub depth: usize,
    pub num_features: usize,
    pub rows: usize,
    pub sparsity: f64,
    pub missing_rate: f64,
    pub kind: ModelKind,
    pub seed: u64,
    pub model_out: PathBuf,
    pub csv_out: Option<PathBuf>,
    pub libsvm_out: Option<PathBuf>,
    pub native_out: Option<PathBuf>,
}

impl SynthConfig {
    pub fn new(trees: usize, depth: usize, num_features: usize, rows: usize, model_out: impl Into<PathBuf>) -> Self {
        SynthConfig {
            trees,
            depth,
            num_features,
            rows,
            sparsity: 0.0,
            missing_rate: 0.0,
            kind: ModelKind::GradientBoosting,
            seed: 42,
            model_out: model_out.into(),
            csv_out: None,
            libsvm_out: None,
            native_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub cells: usize,
    pub missing_cells: usize,
}

/// The model uses `seed`; the dataset uses `seed + 1`.
pub fn synth(cfg: &SynthConfig) -> Result<SynthOutput> {
    if cfg.trees == 0 || cfg.num_features == 0 {
        return Err(Error::Config("trees and num_features must be positive".into()));
    }
    let unit = 0.0..=1.0;
    if !unit.contains(&cfg.sparsity) || !unit.contains(&cfg.missing_rate) {
        return Err(Error::Config("sparsity and missing_rate must lie in [0, 1]".into()));
    }
    let forest = random_forest(&ForestSpec {
        trees: cfg.trees,
        max_depth: cfg.depth,
        num_features: cfg.num_features,
        kind: cfg.kind,
        seed: cfg.seed,
        ..Default::default()
    });
    fs::write(&cfg.model_out, to_json(&forest)).map_err(|e| Error::io(&cfg.model_out, e))?;
    let data = random_data(&DataSpec {
        rows: cfg.rows,
        num_features: cfg.num_features,
        sparsity: cfg.sparsity,
        missing_rate: cfg.missing_rate,
        value_levels: None,
        seed: cfg.seed.wrapping_add(1),
    });
    if let Some(p) = &cfg.csv_out {
        write_csv(&data, p)?;
    }
    if let Some(p) = &cfg.libsvm_out {
        write_libsvm(&data, p)?;
    }
    if let Some(p) = &cfg.native_out {
        let layout = NativeLayout::new(cfg.num_features, DEFAULT_BLOCK_ROWS);
        store_native(p, layout, &data.blocks(DEFAULT_BLOCK_ROWS)?)?;
    }
    Ok(SynthOutput { cells: data.values.len(), missing_cells: data.missing.count_ones() })
}
