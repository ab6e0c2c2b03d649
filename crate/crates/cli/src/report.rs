use serde::{Deserialize, Serialize};

/// One `run`, serialized as the JSON report. Unknown fields are rejected on
/// read so the shape stays pinned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub config: ConfigSummary,
    pub environment: Environment,
    pub one_time_costs: OneTimeCosts,
    pub repeats: Vec<RepeatTiming>,
    pub aggregate: Summary,
    /// Rows divided by the median end-to-end time.
    pub rows_per_second: f64,
    /// First 64 bits of the SHA-256 of the prediction file, as hex.
    pub prediction_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSummary {
    pub model: String,
    pub dataset: String,
    pub format: String,
    pub engine: String,
    pub plan: String,
    pub workers: usize,
    pub block_rows: usize,
    pub batch_blocks: Option<usize>,
    pub repeats: usize,
    pub warmups: usize,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub workers: usize,
    pub available_parallelism: usize,
    pub rows: usize,
    pub features: usize,
    pub trees: usize,
    pub max_depth: usize,
}

/// Costs paid once per model and excluded from every end-to-end figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneTimeCosts {
    pub model_parse_ms: f64,
    pub lowering_ms: f64,
    /// Decision-program emission; present for the compiled engine.
    pub compile_ms: Option<f64>,
    /// Priming run that filled the partition store for a reused plan.
    pub materialize_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatTiming {
    pub load_ms: f64,
    pub infer_ms: f64,
    pub write_ms: f64,
    pub end_to_end_ms: f64,
    pub partition_stage_runs: usize,
    pub stages: Vec<StageReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageReport {
    pub name: String,
    pub wall_ms: f64,
    pub rows: usize,
    pub workers: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stats {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Median of an even count is the mean of the two middle values.
    pub fn of(values: &[f64]) -> Stats {
        assert!(!values.is_empty(), "no samples");
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Stats { median, min: v[0], max: v[n - 1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub load_ms: Stats,
    pub infer_ms: Stats,
    pub write_ms: Stats,
    pub end_to_end_ms: Stats,
}

impl Summary {
    pub fn of(repeats: &[RepeatTiming]) -> Summary {
        let stat = |f: fn(&RepeatTiming) -> f64| Stats::of(&repeats.iter().map(f).collect::<Vec<_>>());
        Summary {
            load_ms: stat(|r| r.load_ms),
            infer_ms: stat(|r| r.infer_ms),
            write_ms: stat(|r| r.write_ms),
            end_to_end_ms: stat(|r| r.end_to_end_ms),
        }
    }
}
