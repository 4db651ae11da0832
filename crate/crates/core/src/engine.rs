//! The stream clustering loop.
//!
//! The first chunk is clustered with k-means. Every later chunk is folded into
//! the main clustering incrementally and checked for drift. A drift opens a
//! parallel clustering (k-means on the drifting chunk); from then on each chunk
//! is also folded into the parallel model, which is rebuilt from scratch when
//! it drifts itself. The main model gets three chances to come back clean:
//!
//! ```text
//! chunk t     main drifts           -> parallel opened, strike 1
//! chunk t+1   main clean            -> parallel dropped (stabilized)
//!             main drifts           -> parallel updated, strike 2
//! chunk t+2   ...                   -> strike 3
//! chunk t+3   main still drifting   -> strike 4: parallel replaces main
//! ```
//!
//! The engine never looks at labels and never performs I/O; everything it
//! observes is returned as a [`StepReport`].

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::distclust::dist_clust_detailed;
use crate::drift::{detect, DriftVerdict};
use crate::error::{Error, Result};
use crate::kmeans::{summarize_detailed, KMeansParams};
use crate::record::Chunk;
use crate::summary::{Assignment, ClusteringResult, DriftConfig};

/// Strike value at which the parallel result replaces the main one.
pub const SWAP_STRIKE: u8 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelState {
    pub result: ClusteringResult,
    /// 1 on the chunk that opened drift handling, +1 per further drifted chunk.
    pub strike: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub main: ClusteringResult,
    pub parallel: Option<ParallelState>,
    pub is_concept_drift: bool,
    pub timestamp: u64,
    pub config: DriftConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepEvent {
    /// First chunk, clustered with k-means.
    Bootstrap,
    /// No drift, no parallel model.
    Steady,
    /// Main drifted; a parallel model was opened.
    DriftActivated,
    /// Main still drifting; the parallel model absorbed the chunk (or was rebuilt).
    ParallelContinued,
    /// Main came back clean; the parallel model was discarded.
    Stabilized,
    /// Third further drifted chunk; the parallel model became main.
    Swapped,
}

/// Which clustering accounted for the chunk's records in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effective {
    Main,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub timestamp: u64,
    pub chunk_size: usize,
    /// Outliers of the main model on this chunk (0 at bootstrap).
    pub outliers: u64,
    /// Per-cluster counts of the main model on this chunk, before any swap.
    pub chunk_counts: Vec<u64>,
    /// Main model verdict; absent for the bootstrap chunk.
    pub verdict: Option<DriftVerdict>,
    /// Parallel model verdict, when a parallel model absorbed the chunk.
    pub parallel_verdict: Option<DriftVerdict>,
    /// The parallel model was (re)built with k-means on this chunk.
    pub parallel_bootstrapped: bool,
    /// Drift handling still active after this step.
    pub parallel_active: bool,
    /// Strike counter after this step; 0 when drift handling was not involved.
    pub strike: u8,
    pub event: StepEvent,
    /// `k` handed to any k-means run in this step.
    pub k: usize,
    /// Model that clustered this chunk: the parallel one while drift handling is active.
    pub effective: Effective,
    pub cluster_count: usize,
    pub main_cluster_count: usize,
    /// Placement of each record by the effective model, in chunk order.
    #[serde(skip)]
    pub assignments: Vec<Assignment>,
    pub duration: Duration,
}

impl StepReport {
    /// Equality on everything except the wall-clock duration.
    pub fn same_outcome(&self, other: &StepReport) -> bool {
        let mut a = self.clone();
        a.duration = other.duration;
        a == *other && bits(&self.assignments) == bits(&other.assignments)
    }
}

fn bits(a: &[Assignment]) -> Vec<(Option<usize>, u64)> {
    a.iter().map(|x| (x.cluster, x.distance.to_bits())).collect()
}

fn bootstrap_params(config: &DriftConfig, k: usize, timestamp: u64) -> KMeansParams {
    KMeansParams::new(k, config.seed).with_stream(timestamp)
}

impl EngineState {
    /// Bootstraps from the first chunk with `config.k` clusters.
    pub fn init(first: &Chunk, config: DriftConfig) -> Result<(Self, StepReport)> {
        let k = config.k;
        Self::init_with_k(first, config, k)
    }

    /// Bootstraps from the first chunk with an explicit `k`.
    pub fn init_with_k(first: &Chunk, config: DriftConfig, k: usize) -> Result<(Self, StepReport)> {
        config.validate()?;
        let start = Instant::now();
        let t = first.timestamp();
        let boot = summarize_detailed(first.records(), t, &bootstrap_params(&config, k, t))?;
        let count = boot.result.len();
        let report = StepReport {
            timestamp: t,
            chunk_size: first.len(),
            outliers: 0,
            chunk_counts: boot.result.chunk_counts(),
            verdict: None,
            parallel_verdict: None,
            parallel_bootstrapped: false,
            parallel_active: false,
            strike: 0,
            event: StepEvent::Bootstrap,
            k,
            effective: Effective::Main,
            cluster_count: count,
            main_cluster_count: count,
            assignments: boot.assignments,
            duration: start.elapsed(),
        };
        let state = Self { main: boot.result, parallel: None, is_concept_drift: false, timestamp: t, config };
        Ok((state, report))
    }

    pub fn step(&mut self, chunk: &Chunk) -> Result<StepReport> {
        let k = self.config.k;
        self.step_with_k(chunk, k)
    }

    /// Processes one chunk; `k` is used for any k-means run this step needs.
    ///
    /// On error the state is left untouched.
    pub fn step_with_k(&mut self, chunk: &Chunk, k: usize) -> Result<StepReport> {
        let start = Instant::now();
        let t = chunk.timestamp();
        if t != self.timestamp + 1 {
            return Err(Error::TimestampGap { previous: self.timestamp, found: t });
        }
        if let Some(dim) = self.main.dim() {
            if chunk.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: chunk.dim() });
            }
        }

        let points = chunk.records();
        let n = points.len();
        let cfg = &self.config;
        let main = dist_clust_detailed(points, t, &self.main)?;
        let verdict = detect(&main.result, &self.main, n, cfg)?;

        let outliers = main.result.outliers;
        let chunk_counts = main.result.chunk_counts();
        let mut parallel_verdict = None;
        let mut parallel_bootstrapped = false;

        let (next_main, next_parallel, event, effective, assignments, strike) = match &self.parallel {
            None if verdict.is_drift => {
                let boot = summarize_detailed(points, t, &bootstrap_params(cfg, k, t))?;
                parallel_bootstrapped = true;
                let par = ParallelState { result: boot.result, strike: 1 };
                (main.result, Some(par), StepEvent::DriftActivated, Effective::Parallel, boot.assignments, 1)
            }
            None => (main.result, None, StepEvent::Steady, Effective::Main, main.assignments, 0),
            Some(par) if !verdict.is_drift => {
                let _ = par;
                (main.result, None, StepEvent::Stabilized, Effective::Main, main.assignments, 0)
            }
            Some(par) => {
                let inc = dist_clust_detailed(points, t, &par.result)?;
                let pv = detect(&inc.result, &par.result, n, cfg)?;
                let (result, assignments) = if pv.is_drift {
                    let boot = summarize_detailed(points, t, &bootstrap_params(cfg, k, t))?;
                    parallel_bootstrapped = true;
                    (boot.result, boot.assignments)
                } else {
                    (inc.result, inc.assignments)
                };
                parallel_verdict = Some(pv);
                let strike = par.strike + 1;
                if strike >= SWAP_STRIKE {
                    (result, None, StepEvent::Swapped, Effective::Main, assignments, strike)
                } else {
                    let next = ParallelState { result, strike };
                    (main.result, Some(next), StepEvent::ParallelContinued, Effective::Parallel, assignments, strike)
                }
            }
        };

        let cluster_count = match (&effective, &next_parallel) {
            (Effective::Parallel, Some(p)) => p.result.len(),
            _ => next_main.len(),
        };
        let report = StepReport {
            timestamp: t,
            chunk_size: n,
            outliers,
            chunk_counts,
            verdict: Some(verdict),
            parallel_verdict,
            parallel_bootstrapped,
            parallel_active: next_parallel.is_some(),
            strike,
            event,
            k,
            effective,
            cluster_count,
            main_cluster_count: next_main.len(),
            assignments,
            duration: start.elapsed(),
        };

        self.is_concept_drift = next_parallel.is_some();
        self.main = next_main;
        self.parallel = next_parallel;
        self.timestamp = t;
        Ok(report)
    }

    /// Checks the state-machine invariants; used when loading snapshots.
    pub fn check(&self) -> Result<()> {
        self.config.validate()?;
        if self.main.is_empty() {
            return Err(Error::InvalidConfig("main clustering has no clusters".into()));
        }
        if self.parallel.is_some() != self.is_concept_drift {
            return Err(Error::InvalidConfig("parallel clustering must exist exactly while drift is flagged".into()));
        }
        if let Some(p) = &self.parallel {
            if !(1..SWAP_STRIKE).contains(&p.strike) {
                return Err(Error::InvalidConfig(format!("strike {} out of range", p.strike)));
            }
            if p.result.dim() != self.main.dim() {
                return Err(Error::InvalidConfig("parallel and main dimensionality differ".into()));
            }
        }
        let dim = self.main.dim();
        if self.main.clusters.iter().any(|c| Some(c.dim()) != dim) {
            return Err(Error::InvalidConfig("ragged centroids".into()));
        }
        Ok(())
    }
}

/// Runs the engine over a whole stream with the configured `k`.
pub fn run<I>(stream: I, config: DriftConfig) -> Result<(EngineState, Vec<StepReport>)>
where
    I: IntoIterator<Item = Chunk>,
{
    let k = config.k;
    run_with_k(stream, config, |_| k)
}

/// Runs the engine, asking `k_for` for the bootstrap `k` of each chunk.
///
/// `k_for` sees the whole chunk (labels included); the engine itself only
/// receives the number it returns.
pub fn run_with_k<I, F>(stream: I, config: DriftConfig, mut k_for: F) -> Result<(EngineState, Vec<StepReport>)>
where
    I: IntoIterator<Item = Chunk>,
    F: FnMut(&Chunk) -> usize,
{
    let mut chunks = stream.into_iter();
    let first = chunks.next().ok_or(Error::Empty("stream"))?;
    let k = k_for(&first);
    let (mut state, report) = EngineState::init_with_k(&first, config, k)?;
    let mut reports = vec![report];
    for chunk in chunks {
        let k = k_for(&chunk);
        reports.push(state.step_with_k(&chunk, k)?);
    }
    Ok((state, reports))
}

pub const SNAPSHOT_FORMAT: &str = "streamclust-engine-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Versioned, self-describing engine snapshot. `metadata` is free-form
/// context supplied by the caller (run configuration, tool version).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub metadata: serde_json::Value,
    pub state: EngineState,
}

impl Snapshot {
    pub fn new(state: EngineState, metadata: serde_json::Value) -> Self {
        Self { format: SNAPSHOT_FORMAT.to_string(), version: SNAPSHOT_VERSION, metadata, state }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::InvalidConfig(format!("not an engine snapshot: format {:?}", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported snapshot version {}", snap.version)));
        }
        snap.state.check()?;
        Ok(snap)
    }
}
