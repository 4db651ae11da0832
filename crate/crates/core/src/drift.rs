//! Concept drift detection between two consecutive clusterings.
//!
//! Two triggers, checked in order:
//! 1. the outlier ratio `outliers / chunk_size` exceeds `o_thresh`;
//! 2. some cluster's per-chunk count changed by more than `d_thresh`
//!    relative to its previous count (`|cur - prev| / prev`).
//!
//! A cluster with a previous count of zero that absorbs anything counts as an
//! infinite change. A cluster-count mismatch is reported as a distribution shift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summary::{ClusteringResult, DriftConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftCause {
    OutlierRatio,
    DistributionShift,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftVerdict {
    pub is_drift: bool,
    pub cause: DriftCause,
    /// Relative count change of each cluster examined, in cluster order.
    /// Stops at the first offender; empty when the outlier ratio decided.
    pub detail: Vec<f64>,
}

impl DriftVerdict {
    fn none(detail: Vec<f64>) -> Self {
        Self { is_drift: false, cause: DriftCause::None, detail }
    }

    fn drift(cause: DriftCause, detail: Vec<f64>) -> Self {
        Self { is_drift: true, cause, detail }
    }
}

fn percent_change(current: u64, previous: u64) -> f64 {
    let change = current.abs_diff(previous) as f64;
    if previous == 0 {
        if current == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        change / previous as f64
    }
}

/// Compares `current` (produced from a chunk of `chunk_size` records) to `previous`.
pub fn detect(
    current: &ClusteringResult,
    previous: &ClusteringResult,
    chunk_size: usize,
    config: &DriftConfig,
) -> Result<DriftVerdict> {
    if chunk_size == 0 {
        return Err(Error::Empty("chunk"));
    }
    let ratio = current.outliers as f64 / chunk_size as f64;
    if ratio > config.o_thresh {
        return Ok(DriftVerdict::drift(DriftCause::OutlierRatio, Vec::new()));
    }
    if current.clusters.len() != previous.clusters.len() {
        return Ok(DriftVerdict::drift(DriftCause::DistributionShift, Vec::new()));
    }

    let mut detail = Vec::with_capacity(current.clusters.len());
    for (cur, prev) in current.clusters.iter().zip(&previous.clusters) {
        let change = percent_change(cur.chunk_count, prev.chunk_count);
        detail.push(change);
        if change > config.d_thresh {
            return Ok(DriftVerdict::drift(DriftCause::DistributionShift, detail));
        }
    }
    Ok(DriftVerdict::none(detail))
}
