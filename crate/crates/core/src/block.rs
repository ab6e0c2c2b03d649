//! Sample vectors, sample blocks and predictions.

use bitvec::prelude::*;

use crate::error::{Error, Result};
use crate::model::sigmoid;

pub type MissingBits = BitVec<u64, Lsb0>;
pub type MissingSlice = BitSlice<u64, Lsb0>;

/// Borrowed view of one feature vector. A set bit in `missing` marks the
/// entry as absent; the corresponding value is then meaningless.
#[derive(Debug, Clone, Copy)]
pub struct RowRef<'a> {
    values: &'a [f64],
    missing: &'a MissingSlice,
}

impl<'a> RowRef<'a> {
    pub fn new(values: &'a [f64], missing: &'a MissingSlice) -> Self {
        debug_assert_eq!(values.len(), missing.len());
        RowRef { values, missing }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, feature: usize) -> f64 {
        self.values[feature]
    }

    #[inline]
    pub fn is_missing(&self, feature: usize) -> bool {
        self.missing[feature]
    }

    #[inline]
    pub fn get(&self, feature: usize) -> Option<f64> {
        (!self.missing[feature]).then(|| self.values[feature])
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn has_missing(&self) -> bool {
        self.missing.any()
    }
}

/// An owned feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    missing: MissingBits,
}

impl Sample {
    pub fn dense(values: Vec<f64>) -> Self {
        let missing = bitvec![u64, Lsb0; 0; values.len()];
        Sample { values, missing }
    }

    pub fn from_options(entries: &[Option<f64>]) -> Self {
        let values = entries.iter().map(|v| v.unwrap_or(0.0)).collect();
        let missing = entries.iter().map(Option::is_none).collect();
        Sample { values, missing }
    }

    pub fn row(&self) -> RowRef<'_> {
        RowRef::new(&self.values, &self.missing)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A row-major batch of feature vectors with a parallel missing bitmap.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub block_id: usize,
    /// Global index of the first row.
    pub row_offset: usize,
    num_features: usize,
    values: Vec<f64>,
    missing: MissingBits,
    missing_count: usize,
}

impl SampleBlock {
    pub fn new(
        block_id: usize,
        row_offset: usize,
        num_features: usize,
        values: Vec<f64>,
        missing: MissingBits,
    ) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::Config("sample blocks need at least one feature".into()));
        }
        if !values.len().is_multiple_of(num_features) || missing.len() != values.len() {
            return Err(Error::Config(format!(
                "block {block_id}: {} values and {} missing bits do not form rows of {num_features}",
                values.len(),
                missing.len()
            )));
        }
        let missing_count = missing.count_ones();
        Ok(SampleBlock { block_id, row_offset, num_features, values, missing, missing_count })
    }

    pub fn dense(
        block_id: usize,
        row_offset: usize,
        num_features: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let missing = bitvec![u64, Lsb0; 0; values.len()];
        Self::new(block_id, row_offset, num_features, values, missing)
    }

    pub fn from_rows(block_id: usize, row_offset: usize, rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let num_features = rows.first().map_or(1, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * num_features);
        let mut missing = MissingBits::with_capacity(rows.len() * num_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != num_features {
                return Err(Error::RowWidthMismatch { line: i + 1, expected: num_features, found: row.len() });
            }
            for entry in row {
                values.push(entry.unwrap_or(0.0));
                missing.push(entry.is_none());
            }
        }
        Self::new(block_id, row_offset, num_features, values, missing)
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_rows(&self) -> usize {
        self.values.len() / self.num_features
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_missing(&self) -> bool {
        self.missing_count > 0
    }

    pub fn missing_count(&self) -> usize {
        self.missing_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing(&self) -> &MissingSlice {
        &self.missing
    }

    #[inline]
    pub fn row(&self, i: usize) -> RowRef<'_> {
        let start = i * self.num_features;
        let end = start + self.num_features;
        RowRef::new(&self.values[start..end], &self.missing[start..end])
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = RowRef<'_>> + '_ {
        (0..self.num_rows()).map(move |i| self.row(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub raw_score: f64,
    pub probability: f64,
}

impl Prediction {
    pub fn from_raw(raw_score: f64) -> Self {
        Prediction { raw_score, probability: sigmoid(raw_score) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBlock {
    pub block_id: usize,
    pub row_offset: usize,
    pub predictions: Vec<Prediction>,
}

impl PredictionBlock {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}
