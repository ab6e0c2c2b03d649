use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::block::{MissingBits, SampleBlock};
use crate::error::{Error, Result};
use crate::synth::SyntheticData;

/// One LIBSVM line: an optional label and 1-based `(index, value)` pairs
/// with strictly increasing indices. Explicit zeros are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub label: Option<f64>,
    pub pairs: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Dense row with absent columns set to zero.
    pub fn densify(&self, num_features: usize) -> Vec<f64> {
        let mut row = vec![0.0; num_features];
        for &(index, value) in &self.pairs {
            row[index - 1] = value;
        }
        row
    }
}

fn number(text: &str, line: usize, field: usize) -> Result<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| Error::NonNumericField { line, field, text: text.to_owned() })
}

/// Parses one line (`line` is 1-based, for error messages).
pub fn parse_line(text: &str, line: usize, num_features: usize) -> Result<SparseRow> {
    let text = text.split('#').next().unwrap_or("");
    let mut tokens = text.split_whitespace().peekable();
    let label = match tokens.peek() {
        Some(t) if !t.contains(':') => Some(number(tokens.next().unwrap_or_default(), line, 0)?),
        _ => None,
    };
    let mut pairs = Vec::new();
    let mut last = 0;
    for (field, token) in tokens.enumerate() {
        let field = field + 1;
        let (index, value) = token
            .split_once(':')
            .ok_or_else(|| Error::NonNumericField { line, field, text: token.to_owned() })?;
        let index: usize = index
            .parse()
            .map_err(|_| Error::NonNumericField { line, field, text: token.to_owned() })?;
        if index == 0 || index > num_features {
            return Err(Error::IndexOutOfRange { line, index, num_features });
        }
        if index <= last {
            return Err(Error::NonMonotonicIndices { line });
        }
        last = index;
        let value = number(value, line, field)?;
        if value != 0.0 {
            pairs.push((index, value));
        }
    }
    Ok(SparseRow { label, pairs })
}

/// Loads a LIBSVM file as dense blocks plus one label per row
/// (0.0 where a line has none). Blank lines are skipped.
pub fn load_libsvm(
    path: impl AsRef<Path>,
    num_features: usize,
    block_rows: usize,
) -> Result<(Vec<SampleBlock>, Vec<f64>)> {
    let path = path.as_ref();
    let reader = BufReader::with_capacity(1 << 20, File::open(path).map_err(|e| Error::io(path, e))?);
    let block_rows = block_rows.max(1);
    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::with_capacity(block_rows * num_features);
    let mut rows_in_block = 0;
    let flush = |values: &mut Vec<f64>, blocks: &mut Vec<SampleBlock>, start: usize| -> Result<()> {
        let taken = std::mem::take(values);
        let missing = MissingBits::repeat(false, taken.len());
        blocks.push(SampleBlock::new(blocks.len(), start, num_features, taken, missing)?);
        Ok(())
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_line(&line, i + 1, num_features)?;
        let start = values.len();
        values.resize(start + num_features, 0.0);
        for &(index, value) in &row.pairs {
            values[start + index - 1] = value;
        }
        labels.push(row.label.unwrap_or(0.0));
        rows_in_block += 1;
        if rows_in_block == block_rows {
            flush(&mut values, &mut blocks, labels.len() - rows_in_block)?;
            rows_in_block = 0;
        }
    }
    if rows_in_block > 0 {
        flush(&mut values, &mut blocks, labels.len() - rows_in_block)?;
    }
    Ok((blocks, labels))
}

/// Writes `data` in LIBSVM format. Zero and missing cells are omitted, so
/// missing values reload as zeros.
pub fn write_libsvm(data: &SyntheticData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    let mut line = String::new();
    for r in 0..data.num_rows() {
        line.clear();
        line.push_str(&data.labels[r].to_string());
        for c in 0..data.num_features {
            let cell = r * data.num_features + c;
            if !data.missing[cell] && data.values[cell] != 0.0 {
                line.push_str(&format!(" {}:{}", c + 1, data.values[cell]));
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
