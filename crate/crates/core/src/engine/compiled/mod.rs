//! Compiled traversal: every tree is unrolled into nested if/else
//! "decision program" text, grouped into compilation units, and executed by
//! an interpreter over the parsed program.
//!
//! Grammar (whitespace separated; braces may touch other tokens):
//!
//! ```text
//! program := header unit+
//! header  := "model" KIND FLOAT INT          (kind, base score, feature count)
//! unit    := "unit" INT "{" tree+ "}"
//! tree    := "tree" INT "{" node "}"
//! node    := cond | leaf
//! cond    := "if" "f"INT "<=" FLOAT "missing" ("left"|"right") "{" node "}" "else" "{" node "}"
//! leaf    := "emit" FLOAT
//! ```
//!
//! FLOAT is a hex float so thresholds and leaf values survive the text
//! exactly. The `missing` clause names the arm taken when the tested
//! feature is absent.

mod emit;
mod parse;

use std::time::{Duration, Instant};

pub use emit::{compile_forest, compile_forest_with, DEFAULT_UNIT_SIZE};
pub use parse::{parse_program, ParsedProgram, Stmt};

use crate::block::{Prediction, PredictionBlock, RowRef, SampleBlock};
use crate::engine::{check_block, check_row, Engine, EngineKind};
use crate::error::Result;
use crate::model::{Aggregation, Forest, ModelKind};

/// Text file extension for decision programs.
pub const EXTENSION: &str = "dfp";

#[derive(Debug, Clone, PartialEq)]
pub struct CompilationUnit {
    pub unit_index: usize,
    pub tree_indices: Vec<usize>,
    pub program_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProgram {
    pub kind: ModelKind,
    pub base_score: f64,
    pub num_features: usize,
    pub units: Vec<CompilationUnit>,
}

impl DecisionProgram {
    pub fn header_text(&self) -> String {
        format!(
            "model {} {} {}\n",
            self.kind.as_str(),
            crate::hexfloat::format(self.base_score),
            self.num_features
        )
    }

    /// The whole program as one `.dfp` document.
    pub fn to_text(&self) -> String {
        let mut out = self.header_text();
        for unit in &self.units {
            out.push_str(&unit.program_text);
        }
        out
    }

    pub fn text_bytes(&self) -> usize {
        self.header_text().len() + self.units.iter().map(|u| u.program_text.len()).sum::<usize>()
    }

    pub fn num_trees(&self) -> usize {
        self.units.iter().map(|u| u.tree_indices.len()).sum()
    }

    pub fn parse(&self) -> Result<ParsedProgram> {
        parse_program(&self.to_text())
    }
}

/// One-time cost of emitting a forest's decision program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileCost {
    pub duration: Duration,
    pub bytes: usize,
    pub units: usize,
}

pub fn measure_compile_cost(forest: &Forest) -> CompileCost {
    let start = Instant::now();
    let program = compile_forest(forest, DEFAULT_UNIT_SIZE);
    let duration = start.elapsed();
    CompileCost { duration, bytes: program.text_bytes(), units: program.units.len() }
}

pub fn interpret(program: &ParsedProgram, row: RowRef<'_>) -> Result<Prediction> {
    check_row(EngineKind::Compiled, program.num_features, row)?;
    Ok(program.aggregation().predict(program.sum_exits(row)))
}

/// A forest compiled to text and parsed back for execution.
#[derive(Debug, Clone)]
pub struct CompiledEngine {
    program: DecisionProgram,
    parsed: ParsedProgram,
}

impl CompiledEngine {
    pub fn from_forest(forest: &Forest) -> Result<Self> {
        Self::from_program(compile_forest(forest, DEFAULT_UNIT_SIZE))
    }

    pub fn from_program(program: DecisionProgram) -> Result<Self> {
        let parsed = program.parse()?;
        Ok(CompiledEngine { program, parsed })
    }

    pub fn program(&self) -> &DecisionProgram {
        &self.program
    }

    pub fn parsed(&self) -> &ParsedProgram {
        &self.parsed
    }
}

impl Engine for CompiledEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Compiled
    }

    fn num_features(&self) -> usize {
        self.parsed.num_features
    }

    fn num_trees(&self) -> usize {
        self.parsed.num_trees()
    }

    fn aggregation(&self) -> Aggregation {
        self.parsed.aggregation()
    }

    fn exit_values(&self, block: &SampleBlock, out: &mut Vec<f64>) -> Result<()> {
        check_block(self, block)?;
        out.clear();
        out.reserve(block.num_rows() * self.num_trees());
        for row in block.rows() {
            for unit in &self.parsed.units {
                out.extend(unit.trees.iter().map(|t| t.eval(row)));
            }
        }
        Ok(())
    }

    fn predict_block(&self, block: &SampleBlock) -> Result<PredictionBlock> {
        check_block(self, block)?;
        let agg = self.parsed.aggregation();
        let predictions = block.rows().map(|row| agg.predict(self.parsed.sum_exits(row))).collect();
        Ok(PredictionBlock { block_id: block.block_id, row_offset: block.row_offset, predictions })
    }
}
