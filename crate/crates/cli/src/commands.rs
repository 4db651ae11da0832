use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::thread;

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use streamclust::engine::{run_with_k, EngineState, Snapshot, StepReport};
use streamclust::evaluation::{tcv_distance, true_cluster_values, MetricsReport};
use streamclust::format::{atomic_write, read_dataset, read_stream, write_stream, Manifest, Origin, StoredChunk};
use streamclust::streamgen::{chunk_indices, generate_synthetic, make_artificial_classes, BinningSpec, StreamSpec};
use streamclust::summary::{
    DriftConfig, DEFAULT_D_THRESH_REAL, DEFAULT_D_THRESH_SYNTHETIC, DEFAULT_O_THRESH, DEFAULT_SEED,
};
use streamclust::{minmax_normalize, Chunk};

use crate::{ChunkArgs, EngineArgs, EvalArgs, GenArgs, ResumeArgs, RunArgs};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const SERIES_FILE: &str = "series.csv";

pub fn gen(a: GenArgs) -> Result<()> {
    let spec = match StreamSpec::preset(&a.spec, a.seed.unwrap_or(DEFAULT_SEED)) {
        Some(s) => s,
        None => {
            let path = Path::new(&a.spec);
            if !path.is_file() {
                bail!("unknown stream spec {:?}: expected sdwcd, sdccl, 100ncd, 1000wcd or a JSON spec file", a.spec);
            }
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut s: StreamSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing stream spec {}", path.display()))?;
            if let Some(seed) = a.seed {
                s.seed = seed;
            }
            s
        }
    };
    let chunks = generate_synthetic(&spec)?;
    let mut manifest = Manifest::new(&spec.name, Origin::Synthetic, streamclust::format::default_attributes(2));
    manifest.seed = Some(spec.seed);
    manifest.normalized = true;
    manifest.spec = Some(spec);
    let stored: Vec<StoredChunk> = chunks.into_iter().map(StoredChunk::plain).collect();
    let path = write_stream(&a.out, manifest, &stored)?;
    println!("{}", path.display());
    Ok(())
}

pub fn chunk(a: ChunkArgs) -> Result<()> {
    let dataset = read_dataset(&a.dataset)?;
    let records = if a.no_normalize { dataset.records } else { minmax_normalize(&dataset.records)? };
    let indices = chunk_indices(&records, a.chunks, a.allow_small_classes)?;
    let classes: BTreeSet<_> = records.iter().filter_map(|r| r.label).collect();

    let binning = if a.artificial_classes {
        Some(BinningSpec::new(a.bins.unwrap_or(classes.len()), a.binning.into())?)
    } else {
        None
    };
    let artificial = match binning {
        Some(b) => make_artificial_classes(&records, b)?,
        None => Vec::new(),
    };

    let mut stored = Vec::with_capacity(indices.len());
    for (c, idx) in indices.iter().enumerate() {
        let chunk = Chunk::new(c as u64 + 1, idx.iter().map(|&i| records[i].clone()).collect())
            .with_context(|| format!("chunk {} would be empty", c + 1))?;
        let rows =
            if artificial.is_empty() { Vec::new() } else { idx.iter().map(|&i| artificial[i].clone()).collect() };
        stored.push(StoredChunk { chunk, artificial: rows });
    }

    let name = match a.name {
        Some(n) => n,
        None => a.dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into()),
    };
    let dims = dataset.attributes.len();
    let mut manifest = Manifest::new(&name, Origin::RealWorld, dataset.attributes);
    manifest.source = a.dataset.file_name().map(|s| s.to_string_lossy().into_owned());
    manifest.normalized = !a.no_normalize;
    manifest.artificial_classes = binning;
    let path = write_stream(&a.out, manifest, &stored)?;
    let extra = if binning.is_some() { format!(", {dims} artificial-class columns") } else { String::new() };
    println!(
        "{}: {} chunks, {} records, {} attributes, {} classes{}",
        path.display(),
        stored.len(),
        records.len(),
        dims,
        classes.len(),
        extra
    );
    Ok(())
}

/// How many clusters each k-means run asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    Fixed(usize),
    /// The number of distinct labels in the chunk being clustered.
    FromLabels,
}

impl KPolicy {
    fn k_for(self, chunk: &Chunk) -> usize {
        match self {
            KPolicy::Fixed(k) => k,
            KPolicy::FromLabels => chunk.unique_labels(),
        }
    }

    fn check(self, chunks: &[Chunk]) -> Result<()> {
        if self == KPolicy::FromLabels {
            if let Some(c) = chunks.iter().find(|c| c.records().iter().any(|r| r.label.is_none())) {
                bail!("chunk {} has unlabeled records; pass --k to set a fixed cluster count", c.timestamp());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotMeta {
    tool_version: String,
    stream: String,
    k_policy: KPolicy,
}

fn drift_config(manifest: &Manifest, e: &EngineArgs, first_k: usize) -> Result<DriftConfig> {
    let d_default = match manifest.origin {
        Origin::Synthetic => DEFAULT_D_THRESH_SYNTHETIC,
        Origin::RealWorld => DEFAULT_D_THRESH_REAL,
    };
    Ok(DriftConfig::new(first_k, e.o_thresh.unwrap_or(DEFAULT_O_THRESH), e.d_thresh.unwrap_or(d_default), e.seed)?)
}

fn truncate(stored: Vec<StoredChunk>, stop_at: Option<u64>) -> Result<Vec<StoredChunk>> {
    match stop_at {
        None => Ok(stored),
        Some(t) => {
            ensure!(t >= 1, "--stop-at must be at least 1");
            Ok(stored.into_iter().take_while(|s| s.chunk.timestamp() <= t).collect())
        }
    }
}

fn split(stored: Vec<StoredChunk>) -> (Vec<Chunk>, Vec<Vec<Vec<u32>>>) {
    stored.into_iter().map(|s| (s.chunk, s.artificial)).unzip()
}

fn write_metrics(out: &Path, report: &MetricsReport) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    atomic_write(&out.join(METRICS_FILE), report.to_json_lines()?.as_bytes())?;
    atomic_write(&out.join(SERIES_FILE), report.series_csv().as_bytes())?;
    Ok(())
}

fn write_snapshot(path: &Path, state: EngineState, meta: &SnapshotMeta) -> Result<()> {
    let text = Snapshot::new(state, serde_json::to_value(meta)?).to_json()?;
    atomic_write(path, text.as_bytes())?;
    Ok(())
}

fn print_summary(report: &MetricsReport) {
    let s = &report.summary;
    let entropy = s.mean_entropy.map(|h| format!("{h:.4}")).unwrap_or_else(|| "n/a".into());
    println!(
        "{} steps x {} runs: mean entropy {}, mean sse {:.4}, runtime {:.4} s, final clusters {}",
        s.steps,
        s.runs,
        entropy,
        s.mean_sse,
        s.total_runtime_secs,
        s.final_centroids.len()
    );
}

pub fn run(a: RunArgs) -> Result<()> {
    ensure!(a.repeat >= 1, "--repeat must be at least 1");
    let (manifest, stored) = read_stream(&a.manifest)?;
    let (chunks, artificial) = split(truncate(stored, a.stop_at)?);
    let policy = a.engine.k.map(KPolicy::Fixed).unwrap_or(KPolicy::FromLabels);
    policy.check(&chunks)?;
    let base = drift_config(&manifest, &a.engine, policy.k_for(&chunks[0]))?;

    let runs: Vec<Result<(EngineState, Vec<StepReport>)>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..a.repeat as u64)
            .map(|i| {
                let mut config = base.clone();
                config.seed = base.seed.wrapping_add(i);
                let chunks = &chunks;
                scope.spawn(move || Ok(run_with_k(chunks.iter().cloned(), config, |c| policy.k_for(c))?))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("engine run panicked")))).collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let meta = json!({
        "tool_version": TOOL_VERSION,
        "command": "run",
        "stream": manifest.name,
        "manifest": a.manifest.display().to_string(),
        "origin": manifest.origin,
        "dims": manifest.dims,
        "stream_chunks": manifest.chunks.len(),
        "processed_chunks": chunks.len(),
        "k_policy": policy,
        "config": base,
        "repeat": a.repeat,
        "seeds": (0..a.repeat as u64).map(|i| base.seed.wrapping_add(i)).collect::<Vec<_>>(),
    });
    let reports = runs
        .iter()
        .map(|(state, steps)| Ok(MetricsReport::from_run(&chunks, steps, state, &artificial, meta.clone())?))
        .collect::<Result<Vec<_>>>()?;
    let report = MetricsReport::average(&reports)?;
    write_metrics(&a.out, &report)?;

    if let Some(path) = &a.snapshot {
        let meta = SnapshotMeta { tool_version: TOOL_VERSION.into(), stream: manifest.name.clone(), k_policy: policy };
        write_snapshot(path, runs[0].0.clone(), &meta)?;
    }
    print_summary(&report);
    Ok(())
}

pub fn resume(a: ResumeArgs) -> Result<()> {
    let text = fs::read_to_string(&a.snapshot).with_context(|| format!("reading {}", a.snapshot.display()))?;
    let snapshot = Snapshot::from_json(&text).with_context(|| format!("loading snapshot {}", a.snapshot.display()))?;
    let meta: SnapshotMeta = serde_json::from_value(snapshot.metadata.clone())
        .context("snapshot metadata does not describe a streamclust run")?;
    let (manifest, stored) = read_stream(&a.manifest)?;
    ensure!(
        meta.stream == manifest.name,
        "snapshot was taken on stream {:?}, manifest describes {:?}",
        meta.stream,
        manifest.name
    );
    ensure!(snapshot.state.main.dim() == Some(manifest.dims), "snapshot dimensionality does not match the manifest");
    let mut state = snapshot.state;
    let resumed_from = state.timestamp;
    let tail: Vec<StoredChunk> =
        truncate(stored, a.stop_at)?.into_iter().filter(|s| s.chunk.timestamp() > resumed_from).collect();
    ensure!(!tail.is_empty(), "snapshot at t={resumed_from} leaves no chunks to process");
    let (chunks, artificial) = split(tail);
    meta.k_policy.check(&chunks)?;

    let mut steps = Vec::with_capacity(chunks.len());
    for c in &chunks {
        steps.push(state.step_with_k(c, meta.k_policy.k_for(c))?);
    }
    let run_meta = json!({
        "tool_version": TOOL_VERSION,
        "command": "resume",
        "stream": manifest.name,
        "manifest": a.manifest.display().to_string(),
        "origin": manifest.origin,
        "dims": manifest.dims,
        "stream_chunks": manifest.chunks.len(),
        "processed_chunks": chunks.len(),
        "resumed_from": resumed_from,
        "k_policy": meta.k_policy,
        "config": state.config,
        "repeat": 1,
    });
    let report = MetricsReport::from_run(&chunks, &steps, &state, &artificial, run_meta)?;
    write_metrics(&a.out, &report)?;
    if let Some(path) = &a.snapshot_out {
        write_snapshot(path, state, &meta)?;
    }
    print_summary(&report);
    Ok(())
}

fn coords(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("({})", parts.join(", "))
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let (manifest, stored) = read_stream(&a.manifest)?;
    let text = fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    let report = MetricsReport::from_json_lines(&text).with_context(|| format!("parsing {}", a.report.display()))?;

    let stream = report.meta.get("stream").and_then(|v| v.as_str());
    ensure!(
        stream == Some(manifest.name.as_str()),
        "report was produced from stream {:?}, manifest describes {:?}",
        stream.unwrap_or("<unknown>"),
        manifest.name
    );
    let dims = report.summary.final_centroids.first().map(Vec::len);
    ensure!(
        dims == Some(manifest.dims),
        "report centroids have {} dimensions, manifest has {}",
        dims.unwrap_or(0),
        manifest.dims
    );
    ensure!(
        report.summary.final_timestamp as usize <= manifest.chunks.len(),
        "report ends at t={} but the stream has {} chunks",
        report.summary.final_timestamp,
        manifest.chunks.len()
    );

    let chunks: Vec<Chunk> = stored.into_iter().map(|s| s.chunk).collect();
    let tcvs = true_cluster_values(&chunks).context("true cluster values need a labeled stream")?;
    let m = tcv_distance(&report.summary.final_centroids, &tcvs)?;

    println!(
        "stream {}, final timestamp {}, {} clusters, {} classes",
        manifest.name,
        report.summary.final_timestamp,
        report.summary.final_centroids.len(),
        tcvs.len()
    );
    let show = manifest.dims <= 3;
    if show {
        println!("{:>7}  {:>6}  {:<24}  {:<24}  {:>8}", "cluster", "class", "tcv", "centroid", "distance");
    } else {
        println!("{:>7}  {:>6}  {:>8}", "cluster", "class", "distance");
    }
    for p in &m.pairs {
        let tcv = &tcvs.iter().find(|t| t.0 == p.label).expect("matched label").1;
        if show {
            println!(
                "{:>7}  {:>6}  {:<24}  {:<24}  {:>8.2}",
                p.cluster + 1,
                p.label,
                coords(tcv),
                coords(&report.summary.final_centroids[p.cluster]),
                p.distance
            );
        } else {
            println!("{:>7}  {:>6}  {:>8.2}", p.cluster + 1, p.label, p.distance);
        }
    }
    for c in &m.unmatched_clusters {
        println!("unmatched cluster {}", c + 1);
    }
    for l in &m.unmatched_labels {
        println!("unmatched class {l}");
    }
    if let Some(max) = m.max_distance() {
        println!("max distance {max:.6}");
    }
    Ok(())
}
