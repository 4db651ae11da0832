//! Compact cluster summaries and the configuration shared by the engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of one cluster: centroid, absorption radius, lifetime count and
/// the number of records it absorbed from the current chunk.
///
/// The records themselves are never kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroid: Vec<f64>,
    /// Absorption radius: a record joins only if its distance is `<= radius`.
    pub radius: f64,
    /// Records absorbed over the cluster's whole life. Also the inverse learning rate.
    pub lifetime_count: u64,
    /// Records absorbed from the chunk that produced this summary.
    pub chunk_count: u64,
}

impl ClusterSummary {
    pub fn dim(&self) -> usize {
        self.centroid.len()
    }
}

/// A clustering of the stream as of one timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub clusters: Vec<ClusterSummary>,
    /// Records of the producing chunk that no cluster absorbed.
    pub outliers: u64,
    pub timestamp: u64,
}

impl ClusteringResult {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.clusters.first().map(ClusterSummary::dim)
    }

    pub fn chunk_counts(&self) -> Vec<u64> {
        self.clusters.iter().map(|c| c.chunk_count).collect()
    }

    pub fn centroids(&self) -> Vec<Vec<f64>> {
        self.clusters.iter().map(|c| c.centroid.clone()).collect()
    }

    /// Records accounted for by this result: absorbed plus outliers.
    pub fn accounted(&self) -> u64 {
        self.outliers + self.clusters.iter().map(|c| c.chunk_count).sum::<u64>()
    }
}

/// Where a single record of a chunk ended up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Cluster index, or `None` for an outlier.
    pub cluster: Option<usize>,
    /// Distance to the assigned (or, for outliers, the nearest) centroid at assignment time.
    pub distance: f64,
}

impl Assignment {
    pub fn is_outlier(&self) -> bool {
        self.cluster.is_none()
    }
}

pub const DEFAULT_O_THRESH: f64 = 0.18;
pub const DEFAULT_D_THRESH_SYNTHETIC: f64 = 0.6;
pub const DEFAULT_D_THRESH_REAL: f64 = 0.4;
pub const DEFAULT_SEED: u64 = 7;

/// Engine configuration: bootstrap `k`, the two drift thresholds and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub k: usize,
    /// Outlier-ratio threshold, in (0, 1].
    pub o_thresh: f64,
    /// Maximum relative change of any cluster's per-chunk count.
    pub d_thresh: f64,
    pub seed: u64,
}

impl DriftConfig {
    pub fn new(k: usize, o_thresh: f64, d_thresh: f64, seed: u64) -> Result<Self> {
        let cfg = Self { k, o_thresh, d_thresh, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.o_thresh > 0.0 && self.o_thresh <= 1.0) {
            return Err(Error::InvalidConfig(format!("o_thresh must lie in (0, 1], got {}", self.o_thresh)));
        }
        if !(self.d_thresh > 0.0 && self.d_thresh.is_finite()) {
            return Err(Error::InvalidConfig(format!("d_thresh must be positive, got {}", self.d_thresh)));
        }
        Ok(())
    }
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { k: 5, o_thresh: DEFAULT_O_THRESH, d_thresh: DEFAULT_D_THRESH_SYNTHETIC, seed: DEFAULT_SEED }
    }
}
