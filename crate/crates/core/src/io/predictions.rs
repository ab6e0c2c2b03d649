//! Prediction files: `row_index,raw_score,probability`, one line per row in
//! global row order. Raw scores are hex floats so they re-read bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::block::{Prediction, PredictionBlock};
use crate::error::{Error, Result};
use crate::hexfloat;

pub const HEADER: &str = "row_index,raw_score,probability";

/// Writes blocks in the order given and returns the number of rows written.
pub fn write_predictions<'a>(
    blocks: impl IntoIterator<Item = &'a PredictionBlock>,
    path: impl AsRef<Path>,
) -> Result<usize> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::with_capacity(1 << 16, file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{HEADER}").map_err(io)?;
    let mut line = String::with_capacity(64);
    let mut count = 0;
    for block in blocks {
        for (i, p) in block.predictions.iter().enumerate() {
            line.clear();
            line.push_str(&(block.row_offset + i).to_string());
            line.push(',');
            hexfloat::write_to(&mut line, p.raw_score);
            line.push(',');
            line.push_str(&p.probability.to_string());
            line.push('\n');
            out.write_all(line.as_bytes()).map_err(io)?;
            count += 1;
        }
    }
    out.flush().map_err(io)?;
    Ok(count)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<(usize, Prediction)>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if i == 0 {
            if line != HEADER {
                return Err(Error::RowWidthMismatch { line: 1, expected: 3, found: line.split(',').count() });
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::RowWidthMismatch { line: i + 1, expected: 3, found: fields.len() });
        }
        let bad = |field: usize| Error::NonNumericField { line: i + 1, field, text: fields[field].to_owned() };
        let row: usize = fields[0].parse().map_err(|_| bad(0))?;
        let raw_score = hexfloat::parse(fields[1]).map_err(|_| bad(1))?;
        let probability: f64 = fields[2].parse().map_err(|_| bad(2))?;
        out.push((row, Prediction { raw_score, probability }));
    }
    Ok(out)
}
