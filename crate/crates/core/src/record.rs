//! Records and chunks: the raw input of the stream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class identifier carried alongside a record.
///
/// Labels are opaque to every clustering routine; they exist for stream
/// construction and evaluation only.
pub type Label = i64;

/// One observation: `n` numeric attribute values and an optional class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

impl Record {
    pub fn new(values: Vec<f64>, label: Option<Label>) -> Self {
        Self { values, label }
    }

    pub fn labeled(values: Vec<f64>, label: Label) -> Self {
        Self::new(values, Some(label))
    }

    pub fn unlabeled(values: Vec<f64>) -> Self {
        Self::new(values, None)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Clustering code sees a record only through its attribute values.
impl AsRef<[f64]> for Record {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// A batch of records arriving at one timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    timestamp: u64,
    records: Vec<Record>,
}

impl Chunk {
    /// Builds a chunk, checking that it is non-empty and dimensionally uniform.
    pub fn new(timestamp: u64, records: Vec<Record>) -> Result<Self> {
        if timestamp == 0 {
            return Err(Error::InvalidConfig("chunk timestamps start at 1".into()));
        }
        check_uniform(&records)?;
        Ok(Self { timestamp, records })
    }

    pub fn timestamp(&self) -> u64 {
        self.timestamp
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.records[0].dim()
    }

    /// Number of distinct labels among the chunk's records (unlabeled ones ignored).
    pub fn unique_labels(&self) -> usize {
        let mut labels: Vec<Label> = self.records.iter().filter_map(|r| r.label).collect();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }
}

/// Verifies a record set is non-empty, non-zero-dimensional and uniform in dimensionality.
pub fn check_uniform<P: AsRef<[f64]>>(points: &[P]) -> Result<usize> {
    let first = points.first().ok_or(Error::Empty("record set"))?;
    let dim = first.as_ref().len();
    if dim == 0 {
        return Err(Error::Empty("record attribute vector"));
    }
    for p in points {
        if p.as_ref().len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.as_ref().len() });
        }
    }
    Ok(dim)
}
