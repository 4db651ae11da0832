//! Incremental clustering of chunked data streams.
//!
//! The first chunk is summarized with k-means into compact cluster summaries
//! (centroid, radius, lifetime count, per-chunk count). Later chunks are
//! folded in one record at a time, drift is detected from outlier ratios and
//! per-cluster count changes, and a parallel model takes over when drift
//! persists for three further chunks.
//!
//! ```
//! use streamclust::{run, Chunk, DriftConfig, Record};
//!
//! let chunk = |t| {
//!     let records = (0..20)
//!         .map(|i| {
//!             let (x, y) = if i % 2 == 0 { (0.2, 0.2) } else { (0.8, 0.8) };
//!             Record::unlabeled(vec![x + i as f64 * 1e-3, y])
//!         })
//!         .collect();
//!     Chunk::new(t, records).unwrap()
//! };
//! let config = DriftConfig::new(2, 0.18, 0.6, 7).unwrap();
//! let (_state, reports) = run((1..=3).map(chunk), config).unwrap();
//! assert!(reports.iter().all(|r| r.cluster_count == 2));
//! ```

pub mod distclust;
pub mod drift;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod kmeans;
pub mod numeric;
pub mod record;
pub mod streamgen;
pub mod summary;

pub use distclust::{closest_cluster, dist_clust, update_centroid};
pub use drift::{detect, DriftCause, DriftVerdict};
pub use engine::{run, run_with_k, Effective, EngineState, Snapshot, StepEvent, StepReport};
pub use error::{Error, Result};
pub use evaluation::{entropy, sse, tcv_distance, true_cluster_values, MetricsReport};
pub use kmeans::{get_max_dist, kmeans, summarize, KMeansParams};
pub use numeric::{euclidean, minmax_normalize};
pub use record::{Chunk, Label, Record};
pub use streamgen::{
    apply_label_drift, chunk_dataset, generate_synthetic, make_artificial_classes, BinningRule, BinningSpec, StreamSpec,
};
pub use summary::{Assignment, ClusterSummary, ClusteringResult, DriftConfig};
