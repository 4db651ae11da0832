//! Clustering quality metrics and per-run reports.
//!
//! Entropy is measured in bits against class labels (or against each
//! artificial class column, averaged). SSE accrues online from the distance
//! of each record to its centroid at assignment time. True cluster values are
//! per-class means over the whole stream, matched one-to-one to the final
//! centroids.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{EngineState, StepEvent, StepReport};
use crate::error::{Error, Result};
use crate::numeric::distance;
use crate::record::{Chunk, Label, Record};
use crate::summary::Assignment;

/// Weighted cluster entropy of `(cluster, class)` pairs, in bits.
pub fn entropy<L: Ord>(pairs: impl IntoIterator<Item = (usize, L)>) -> Result<f64> {
    let mut table: BTreeMap<usize, BTreeMap<L, u64>> = BTreeMap::new();
    let mut total = 0u64;
    for (cluster, class) in pairs {
        *table.entry(cluster).or_default().entry(class).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::Empty("assignments"));
    }
    let mut h = 0.0;
    for classes in table.values() {
        let n_k: u64 = classes.values().sum();
        let mut h_k = 0.0;
        for &n in classes.values() {
            let p = n as f64 / n_k as f64;
            h_k -= p * p.log2();
        }
        h += n_k as f64 / total as f64 * h_k;
    }
    // -0.0 from pure clusters reads badly in reports.
    Ok(h.max(0.0))
}

/// Pairs each clustered record with its class label; outliers are skipped.
pub fn labeled_pairs(records: &[Record], assignments: &[Assignment]) -> Result<Vec<(usize, Label)>> {
    if records.len() != assignments.len() {
        return Err(Error::DimensionMismatch { expected: records.len(), found: assignments.len() });
    }
    let mut out = Vec::with_capacity(records.len());
    for (i, (r, a)) in records.iter().zip(assignments).enumerate() {
        let label = r.label.ok_or(Error::MissingLabel { index: i })?;
        if let Some(c) = a.cluster {
            out.push((c, label));
        }
    }
    Ok(out)
}

/// Sum of squared assignment-time distances; outliers contribute nothing.
pub fn sse(assignments: &[Assignment]) -> f64 {
    assignments.iter().filter(|a| !a.is_outlier()).map(|a| a.distance * a.distance).sum()
}

/// Per-class mean vectors over every record of the stream, ordered by label.
pub fn true_cluster_values(chunks: &[Chunk]) -> Result<Vec<(Label, Vec<f64>)>> {
    let mut sums: BTreeMap<Label, (Vec<f64>, u64)> = BTreeMap::new();
    let mut index = 0;
    for chunk in chunks {
        for r in chunk.records() {
            let label = r.label.ok_or(Error::MissingLabel { index })?;
            let (sum, n) = sums.entry(label).or_insert_with(|| (vec![0.0; r.dim()], 0));
            if sum.len() != r.dim() {
                return Err(Error::DimensionMismatch { expected: sum.len(), found: r.dim() });
            }
            for (s, v) in sum.iter_mut().zip(&r.values) {
                *s += v;
            }
            *n += 1;
            index += 1;
        }
    }
    if sums.is_empty() {
        return Err(Error::Empty("stream"));
    }
    Ok(sums.into_iter().map(|(l, (s, n))| (l, s.into_iter().map(|v| v / n as f64).collect())).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcvPair {
    pub cluster: usize,
    pub label: Label,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcvMatch {
    /// Matched pairs in cluster order.
    pub pairs: Vec<TcvPair>,
    pub unmatched_clusters: Vec<usize>,
    pub unmatched_labels: Vec<Label>,
}

impl TcvMatch {
    pub fn max_distance(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.distance).reduce(f64::max)
    }

    pub fn is_complete(&self) -> bool {
        self.unmatched_clusters.is_empty() && self.unmatched_labels.is_empty()
    }
}

/// Largest side for which the matching is searched exhaustively.
pub const EXHAUSTIVE_MATCH_LIMIT: usize = 8;

/// One-to-one matching of discovered centroids to true cluster values.
///
/// Minimizes the summed distance exactly when both sides have at most
/// [`EXHAUSTIVE_MATCH_LIMIT`] entries, otherwise matches greedily by ascending
/// distance. Surplus entries on either side are reported as unmatched.
pub fn tcv_distance(centroids: &[Vec<f64>], tcvs: &[(Label, Vec<f64>)]) -> Result<TcvMatch> {
    let dim = centroids.first().or(tcvs.first().map(|t| &t.1)).map(Vec::len).unwrap_or(0);
    for v in centroids.iter().chain(tcvs.iter().map(|t| &t.1)) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    let cost: Vec<Vec<f64>> = centroids.iter().map(|c| tcvs.iter().map(|(_, t)| distance(c, t)).collect()).collect();

    let matched: Vec<(usize, usize)> = if centroids.len().max(tcvs.len()) <= EXHAUSTIVE_MATCH_LIMIT {
        exhaustive(&cost, centroids.len(), tcvs.len())
    } else {
        greedy(&cost, centroids.len(), tcvs.len())
    };

    let mut pairs: Vec<TcvPair> =
        matched.iter().map(|&(c, t)| TcvPair { cluster: c, label: tcvs[t].0, distance: cost[c][t] }).collect();
    pairs.sort_by_key(|p| p.cluster);
    let unmatched_clusters = (0..centroids.len()).filter(|c| !matched.iter().any(|m| m.0 == *c)).collect();
    let unmatched_labels = (0..tcvs.len()).filter(|t| !matched.iter().any(|m| m.1 == *t)).map(|t| tcvs[t].0).collect();
    Ok(TcvMatch { pairs, unmatched_clusters, unmatched_labels })
}

fn greedy(cost: &[Vec<f64>], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    all.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
    let (mut row_used, mut col_used) = (vec![false; rows], vec![false; cols]);
    let mut out = Vec::new();
    for (r, c) in all {
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            out.push((r, c));
        }
    }
    out
}

fn exhaustive(cost: &[Vec<f64>], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    // Assign every entry of the smaller side to a distinct entry of the larger one.
    let transpose = rows > cols;
    let (small, large) = if transpose { (cols, rows) } else { (rows, cols) };
    let at = |s: usize, l: usize| if transpose { cost[l][s] } else { cost[s][l] };

    let mut best: (f64, Vec<usize>) = (f64::INFINITY, Vec::new());
    let mut current = Vec::with_capacity(small);
    let mut used = vec![false; large];
    fn search(
        depth: usize,
        small: usize,
        acc: f64,
        current: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut (f64, Vec<usize>),
        at: &dyn Fn(usize, usize) -> f64,
    ) {
        if acc >= best.0 {
            return;
        }
        if depth == small {
            *best = (acc, current.clone());
            return;
        }
        for l in 0..used.len() {
            if !used[l] {
                used[l] = true;
                current.push(l);
                search(depth + 1, small, acc + at(depth, l), current, used, best, at);
                current.pop();
                used[l] = false;
            }
        }
    }
    if small == 0 {
        return Vec::new();
    }
    search(0, small, 0.0, &mut current, &mut used, &mut best, &at);
    best.1.into_iter().enumerate().map(|(s, l)| if transpose { (l, s) } else { (s, l) }).collect()
}

/// Metrics of one processed chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub timestamp: u64,
    /// Absent when the chunk carries no labels or no record was clustered.
    pub entropy: Option<f64>,
    pub sse: f64,
    /// Mean over runs; a whole number for a single run.
    pub cluster_count: f64,
    pub outliers: f64,
    pub duration_secs: f64,
    /// Engine event of the first run.
    pub event: StepEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub runs: usize,
    pub steps: usize,
    pub mean_entropy: Option<f64>,
    pub mean_sse: f64,
    /// Summed step durations, averaged over runs.
    pub total_runtime_secs: f64,
    pub final_timestamp: u64,
    /// Centroids of the model in effect after the last chunk (first run).
    pub final_centroids: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Free-form description of the run: tool version, stream, configuration.
    pub meta: serde_json::Value,
    pub steps: Vec<StepMetrics>,
    pub summary: MetricsSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Meta { meta: serde_json::Value },
    Step(StepMetrics),
    Summary(MetricsSummary),
}

/// Entropy of one chunk: against the artificial class columns when given
/// (unweighted mean over columns), otherwise against the record labels.
pub fn chunk_entropy(chunk: &Chunk, assignments: &[Assignment], artificial: &[Vec<u32>]) -> Result<Option<f64>> {
    let clustered = assignments.iter().filter(|a| !a.is_outlier()).count();
    if clustered == 0 {
        return Ok(None);
    }
    if !artificial.is_empty() {
        if artificial.len() != chunk.len() {
            return Err(Error::DimensionMismatch { expected: chunk.len(), found: artificial.len() });
        }
        let columns = artificial[0].len();
        if columns == 0 {
            return Ok(None);
        }
        let mut total = 0.0;
        for col in 0..columns {
            let pairs = assignments.iter().zip(artificial).filter_map(|(a, row)| a.cluster.map(|c| (c, row[col])));
            total += entropy(pairs)?;
        }
        return Ok(Some(total / columns as f64));
    }
    if chunk.records().iter().any(|r| r.label.is_none()) {
        return Ok(None);
    }
    entropy(labeled_pairs(chunk.records(), assignments)?).map(Some)
}

/// Final centroids of the model the engine would report next: the parallel
/// one while drift handling is active, otherwise main.
pub fn effective_centroids(state: &EngineState) -> Vec<Vec<f64>> {
    match &state.parallel {
        Some(p) => p.result.centroids(),
        None => state.main.centroids(),
    }
}

impl MetricsReport {
    /// Metrics of a single run. `artificial[i]` holds the artificial class
    /// rows of chunk `i`, or is empty.
    pub fn from_run(
        chunks: &[Chunk],
        reports: &[StepReport],
        final_state: &EngineState,
        artificial: &[Vec<Vec<u32>>],
        meta: serde_json::Value,
    ) -> Result<Self> {
        if chunks.len() != reports.len() {
            return Err(Error::InvalidConfig(format!("{} chunks but {} step reports", chunks.len(), reports.len())));
        }
        if reports.is_empty() {
            return Err(Error::Empty("run"));
        }
        let mut steps = Vec::with_capacity(reports.len());
        for (i, (chunk, rep)) in chunks.iter().zip(reports).enumerate() {
            let cols = artificial.get(i).map(Vec::as_slice).unwrap_or(&[]);
            steps.push(StepMetrics {
                timestamp: rep.timestamp,
                entropy: chunk_entropy(chunk, &rep.assignments, cols)?,
                sse: sse(&rep.assignments),
                cluster_count: rep.cluster_count as f64,
                outliers: rep.outliers as f64,
                duration_secs: rep.duration.as_secs_f64(),
                event: rep.event,
            });
        }
        let summary = summarize(&steps, 1, final_state.timestamp, effective_centroids(final_state));
        Ok(Self { meta, steps, summary })
    }

    /// Per-timestamp mean of several runs over the same stream.
    pub fn average(runs: &[MetricsReport]) -> Result<Self> {
        let first = runs.first().ok_or(Error::Empty("runs"))?;
        let n = runs.len() as f64;
        let mut steps = first.steps.clone();
        for other in &runs[1..] {
            if other.steps.len() != steps.len() {
                return Err(Error::InvalidConfig("runs cover different numbers of chunks".into()));
            }
        }
        for (i, s) in steps.iter_mut().enumerate() {
            let column = || runs.iter().map(move |r| &r.steps[i]);
            let entropies: Vec<f64> = column().filter_map(|m| m.entropy).collect();
            s.entropy = (entropies.len() == runs.len()).then(|| entropies.iter().sum::<f64>() / n);
            s.sse = column().map(|m| m.sse).sum::<f64>() / n;
            s.cluster_count = column().map(|m| m.cluster_count).sum::<f64>() / n;
            s.outliers = column().map(|m| m.outliers).sum::<f64>() / n;
            s.duration_secs = column().map(|m| m.duration_secs).sum::<f64>() / n;
        }
        let summary =
            summarize(&steps, runs.len(), first.summary.final_timestamp, first.summary.final_centroids.clone());
        Ok(Self { meta: first.meta.clone(), steps, summary })
    }

    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = serde_json::to_string(&Line::Meta { meta: self.meta.clone() })?;
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(&Line::Step(s.clone()))?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Line::Summary(self.summary.clone()))?);
        out.push('\n');
        Ok(out)
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let (mut meta, mut steps, mut summary) = (serde_json::Value::Null, Vec::new(), None);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str::<Line>(line)? {
                Line::Meta { meta: m } => meta = m,
                Line::Step(s) => steps.push(s),
                Line::Summary(s) => summary = Some(s),
            }
        }
        let summary = summary.ok_or(Error::Empty("report summary"))?;
        Ok(Self { meta, steps, summary })
    }

    /// `timestamp,cluster_count` rows for plotting.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("timestamp,cluster_count\n");
        for s in &self.steps {
            out.push_str(&format!("{},{}\n", s.timestamp, s.cluster_count));
        }
        out
    }
}

fn summarize(
    steps: &[StepMetrics],
    runs: usize,
    final_timestamp: u64,
    final_centroids: Vec<Vec<f64>>,
) -> MetricsSummary {
    let entropies: Vec<f64> = steps.iter().filter_map(|s| s.entropy).collect();
    MetricsSummary {
        runs,
        steps: steps.len(),
        mean_entropy: (!entropies.is_empty()).then(|| entropies.iter().sum::<f64>() / entropies.len() as f64),
        mean_sse: steps.iter().map(|s| s.sse).sum::<f64>() / steps.len().max(1) as f64,
        total_runtime_secs: steps.iter().map(|s| s.duration_secs).sum(),
        final_timestamp,
        final_centroids,
    }
}
