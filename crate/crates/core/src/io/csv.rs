use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::block::{MissingBits, SampleBlock};
use crate::error::{Error, Result};
use crate::synth::SyntheticData;

/// Streams a headerless numeric CSV file as sample blocks. Empty fields and
/// `nan` (any case) are missing.
pub fn load_csv(path: impl AsRef<Path>, num_features: usize, block_rows: usize) -> Result<CsvBlocks> {
    let path = path.as_ref().to_path_buf();
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .buffer_capacity(1 << 20)
        .from_reader(file);
    Ok(CsvBlocks {
        path,
        reader,
        record: ::csv::ByteRecord::new(),
        num_features,
        block_rows: block_rows.max(1),
        next_block: 0,
        next_row: 0,
        done: false,
    })
}

pub struct CsvBlocks {
    path: PathBuf,
    reader: ::csv::Reader<File>,
    record: ::csv::ByteRecord,
    num_features: usize,
    block_rows: usize,
    next_block: usize,
    next_row: usize,
    done: bool,
}

fn parse_field(bytes: &[u8]) -> Option<Option<f64>> {
    let text = std::str::from_utf8(bytes).ok()?.trim();
    if text.is_empty() || text.eq_ignore_ascii_case("nan") {
        return Some(None);
    }
    text.parse::<f64>().ok().filter(|v| !v.is_nan()).map(Some)
}

impl CsvBlocks {
    fn read_block(&mut self) -> Result<Option<SampleBlock>> {
        let width = self.num_features;
        let mut values = Vec::with_capacity(self.block_rows * width);
        let mut missing = MissingBits::with_capacity(self.block_rows * width);
        let mut rows = 0;
        while rows < self.block_rows {
            let more = self.reader.read_byte_record(&mut self.record).map_err(|e| csv_error(&self.path, e))?;
            if !more {
                self.done = true;
                break;
            }
            let line = self.record.position().map_or(0, |p| p.line() as usize);
            if self.record.len() == 1 && self.record[0].is_empty() {
                continue;
            }
            if self.record.len() != width {
                return Err(Error::RowWidthMismatch { line, expected: width, found: self.record.len() });
            }
            for (field, bytes) in self.record.iter().enumerate() {
                match parse_field(bytes) {
                    Some(Some(v)) => {
                        values.push(v);
                        missing.push(false);
                    }
                    Some(None) => {
                        values.push(0.0);
                        missing.push(true);
                    }
                    None => {
                        return Err(Error::NonNumericField {
                            line,
                            field,
                            text: String::from_utf8_lossy(bytes).into_owned(),
                        })
                    }
                }
            }
            rows += 1;
        }
        if rows == 0 {
            return Ok(None);
        }
        let block = SampleBlock::new(self.next_block, self.next_row, width, values, missing)?;
        self.next_block += 1;
        self.next_row += rows;
        Ok(Some(block))
    }
}

fn csv_error(path: &Path, err: ::csv::Error) -> Error {
    match err.into_kind() {
        ::csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

impl Iterator for CsvBlocks {
    type Item = Result<SampleBlock>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_block() {
            Ok(Some(block)) => Some(Ok(block)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Writes `data` as headerless CSV; missing cells become empty fields.
pub fn write_csv(data: &SyntheticData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line = String::new();
    for r in 0..data.num_rows() {
        line.clear();
        for c in 0..data.num_features {
            if c > 0 {
                line.push(',');
            }
            let cell = r * data.num_features + c;
            if !data.missing[cell] {
                line.push_str(&data.values[cell].to_string());
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_data, DataSpec};

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn load(contents: &str, width: usize, block_rows: usize) -> Result<Vec<SampleBlock>> {
        let f = file_with(contents);
        load_csv(f.path(), width, block_rows)?.collect()
    }

    #[test]
    fn one_row_blocks() {
        let blocks = load("1.0,2.0\n3.0,4.0", 2, 1).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[1].row(0).values(), &[3.0, 4.0]);
        assert_eq!(blocks[1].row_offset, 1);
        assert_eq!(blocks[1].block_id, 1);
    }

    #[test]
    fn empty_and_nan_are_missing() {
        let blocks = load("1.0,,3.0\nNaN,nan, 2\n", 3, 10).unwrap();
        let b = &blocks[0];
        assert_eq!(b.row(0).get(0), Some(1.0));
        assert_eq!(b.row(0).get(1), None);
        assert_eq!(b.row(1).get(0), None);
        assert_eq!(b.row(1).get(1), None);
        assert_eq!(b.row(1).get(2), Some(2.0));
    }

    #[test]
    fn width_and_number_errors() {
        assert!(matches!(
            load("1,2\n1,2,3\n", 2, 10),
            Err(Error::RowWidthMismatch { line: 2, expected: 2, found: 3 })
        ));
        assert!(matches!(load("1,abc\n", 2, 10), Err(Error::NonNumericField { line: 1, field: 1, .. })));
    }

    #[test]
    fn written_data_reloads_in_order() {
        let data = random_data(&DataSpec { rows: 10_000, num_features: 5, missing_rate: 0.1, ..Default::default() });
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&data, f.path()).unwrap();
        let blocks: Vec<_> = load_csv(f.path(), 5, 256).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(blocks.iter().map(SampleBlock::num_rows).sum::<usize>(), 10_000);
        let mut expected_offset = 0;
        for b in &blocks {
            assert_eq!(b.row_offset, expected_offset);
            for (i, row) in b.rows().enumerate() {
                let want = data.row_options(b.row_offset + i);
                let got: Vec<_> = (0..5).map(|c| row.get(c)).collect();
                assert_eq!(got, want);
            }
            expected_offset += b.num_rows();
        }
    }
}
