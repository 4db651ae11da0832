//! Distance and normalization primitives.

use crate::error::{Error, Result};
use crate::record::{check_uniform, Record};

/// Euclidean distance between two equal-length vectors.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(squared_distance(a, b).sqrt())
}

/// Squared Euclidean distance; callers guarantee equal lengths.
#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Rescales every attribute column to [0, 1] using the column min and max over
/// the whole dataset. Constant columns map to 0. Labels pass through untouched.
pub fn minmax_normalize(dataset: &[Record]) -> Result<Vec<Record>> {
    let dim = check_uniform(dataset)?;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for r in dataset {
        for (i, &v) in r.values.iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    Ok(dataset
        .iter()
        .map(|r| {
            let values = r
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let range = hi[i] - lo[i];
                    if range > 0.0 {
                        (v - lo[i]) / range
                    } else {
                        0.0
                    }
                })
                .collect();
            Record::new(values, r.label)
        })
        .collect())
}
