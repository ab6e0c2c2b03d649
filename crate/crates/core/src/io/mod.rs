//! Dataset ingestion, the native paged block store, and prediction output.
//!
//! Missing values and zeros are different things: an empty CSV field (or
//! `nan`) is missing and follows default branches, while a column absent
//! from a LIBSVM row is an implicit zero.

pub mod csv;
pub mod libsvm;
pub mod native;
pub mod predictions;

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::block::SampleBlock;
use crate::error::{Error, Result};

pub use self::csv::{load_csv, write_csv, CsvBlocks};
pub use self::libsvm::{load_libsvm, parse_line, write_libsvm, SparseRow};
pub use self::native::{load_native, store_native, NativeLayout, DEFAULT_PAGE_SIZE};
pub use self::predictions::{read_predictions, write_predictions};

pub const DEFAULT_BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Csv,
    Libsvm,
    Native,
}

impl SourceFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceFormat::Csv => "csv",
            SourceFormat::Libsvm => "libsvm",
            SourceFormat::Native => "native",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(SourceFormat::Csv),
            "svm" | "libsvm" | "txt" => Some(SourceFormat::Libsvm),
            "blk" | "native" => Some(SourceFormat::Native),
            _ => None,
        }
    }
}

impl FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SourceFormat::Csv),
            "libsvm" => Ok(SourceFormat::Libsvm),
            "native" => Ok(SourceFormat::Native),
            _ => Err(Error::Config(format!("unknown dataset format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHandle {
    pub format: SourceFormat,
    pub path: PathBuf,
    pub num_features: usize,
    pub rows: Option<usize>,
    pub block_rows: usize,
}

/// A dataset materialized as sample blocks.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub blocks: Vec<SampleBlock>,
    pub labels: Option<Vec<f64>>,
    pub elapsed: Duration,
}

impl LoadedDataset {
    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(SampleBlock::num_rows).sum()
    }
}

impl DatasetHandle {
    pub fn new(format: SourceFormat, path: impl Into<PathBuf>, num_features: usize, block_rows: usize) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::Config("num_features must be positive".into()));
        }
        if block_rows == 0 {
            return Err(Error::Config("block_rows must be positive".into()));
        }
        Ok(DatasetHandle { format, path: path.into(), num_features, rows: None, block_rows })
    }

    pub fn load(&self) -> Result<LoadedDataset> {
        let start = Instant::now();
        let (blocks, labels) = match self.format {
            SourceFormat::Csv => (load_csv(&self.path, self.num_features, self.block_rows)?.collect::<Result<_>>()?, None),
            SourceFormat::Libsvm => {
                let (blocks, labels) = load_libsvm(&self.path, self.num_features, self.block_rows)?;
                (blocks, Some(labels))
            }
            SourceFormat::Native => {
                let (layout, blocks) = load_native(&self.path)?;
                if layout.num_features != self.num_features {
                    return Err(Error::DimensionMismatch { expected: self.num_features, actual: layout.num_features });
                }
                (blocks, None)
            }
        };
        Ok(LoadedDataset { blocks, labels, elapsed: start.elapsed() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_guessing() {
        assert_eq!(SourceFormat::from_path(Path::new("a/b.csv")), Some(SourceFormat::Csv));
        assert_eq!(SourceFormat::from_path(Path::new("b.svm")), Some(SourceFormat::Libsvm));
        assert_eq!(SourceFormat::from_path(Path::new("b.blk")), Some(SourceFormat::Native));
        assert_eq!(SourceFormat::from_path(Path::new("b")), None);
        assert!("parquet".parse::<SourceFormat>().is_err());
    }

    #[test]
    fn handle_rejects_zero_dims() {
        assert!(DatasetHandle::new(SourceFormat::Csv, "x.csv", 0, 10).is_err());
        assert!(DatasetHandle::new(SourceFormat::Csv, "x.csv", 3, 0).is_err());
    }
}
