//! Benchmark stream construction: seeded synthetic blob streams with drift,
//! class-balanced chunking of a labeled dataset, label-permutation drift and
//! artificial classes obtained by binning attribute values.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{check_uniform, Chunk, Label, Record};

/// The five 2-D anchor centroids of the benchmark streams.
pub const ANCHORS: [[f64; 2]; 5] = [[0.117, 0.884], [0.885, 0.885], [0.527, 0.635], [0.117, 0.111], [0.877, 0.117]];

/// Sites used when a chunk holds 2 to 4 clusters: midpoints of the unit square's edges.
pub const EDGE_SITES: [[f64; 2]; 4] = [[0.5, 0.9], [0.9, 0.5], [0.5, 0.1], [0.1, 0.5]];

/// Label of the single merged cluster.
pub const MERGE_LABEL: Label = 10;

pub const DEFAULT_SIGMA: f64 = 0.02;
pub const DEFAULT_RELOCATION: [f64; 2] = [-0.01, -0.01];
pub const CHUNK_RECORDS: usize = 150;

/// Centroid of the five anchors; the merged cluster sits here.
pub fn merge_center() -> [f64; 2] {
    let mut c = [0.0; 2];
    for a in &ANCHORS {
        c[0] += a[0];
        c[1] += a[1];
    }
    [c[0] / 5.0, c[1] / 5.0]
}

/// Generating sites and their class labels for a chunk with `count` clusters.
fn sites(count: usize) -> Vec<([f64; 2], Label)> {
    match count {
        1 => vec![(merge_center(), MERGE_LABEL)],
        2..=4 => EDGE_SITES[..count].iter().enumerate().map(|(i, s)| (*s, 6 + i as Label)).collect(),
        _ => ANCHORS.iter().enumerate().map(|(i, s)| (*s, 1 + i as Label)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Persistence {
    /// Affects only the flagged chunk.
    Temporary,
    /// Persists to the end of the stream.
    Sustained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    /// Class labels of the chunk are permuted.
    Relabel(Persistence),
    /// All sites move by the stream's relocation offset from this chunk on.
    Relocate,
    /// The chunk holds a single cluster at the merge center.
    Merge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEntry {
    /// Records per cluster; the length is the chunk's cluster count.
    pub cluster_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub drifts: Vec<DriftKind>,
}

impl StreamEntry {
    pub fn uniform(cluster_count: usize, records_per_cluster: usize) -> Self {
        Self { cluster_sizes: vec![records_per_cluster; cluster_count], drifts: Vec::new() }
    }

    pub fn with(mut self, drift: DriftKind) -> Self {
        self.drifts.push(drift);
        self
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn chunk_size(&self) -> usize {
        self.cluster_sizes.iter().sum()
    }
}

/// Description of a synthetic stream, one entry per timestamp starting at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub entries: Vec<StreamEntry>,
    pub sigma: f64,
    pub seed: u64,
    #[serde(default = "default_relocation")]
    pub relocation: [f64; 2],
}

fn default_relocation() -> [f64; 2] {
    DEFAULT_RELOCATION
}

impl StreamSpec {
    fn new(name: &str, entries: Vec<StreamEntry>, seed: u64) -> Self {
        Self { name: name.to_string(), entries, sigma: DEFAULT_SIGMA, seed, relocation: DEFAULT_RELOCATION }
    }

    /// Temporary drift at t=3 (one merged cluster), sustained drift from t=6 (three clusters).
    pub fn sdwcd(seed: u64) -> Self {
        let five = StreamEntry::uniform(5, 30);
        let three = StreamEntry::uniform(3, 50);
        let mut entries = vec![five.clone(), five.clone()];
        entries
            .push(StreamEntry::uniform(1, 150).with(DriftKind::Merge).with(DriftKind::Relabel(Persistence::Temporary)));
        entries.extend([five.clone(), five]);
        entries.push(three.clone().with(DriftKind::Relabel(Persistence::Sustained)));
        entries.extend(std::iter::repeat_n(three, 4));
        Self::new("sdwcd", entries, seed)
    }

    /// Single merged chunk at t=5, with all sites slightly relocated from t=5 on.
    pub fn sdccl(seed: u64) -> Self {
        let five = StreamEntry::uniform(5, 30);
        let mut entries = vec![five.clone(); 4];
        entries.push(StreamEntry::uniform(1, 150).with(DriftKind::Merge).with(DriftKind::Relocate));
        entries.extend([five.clone(), five]);
        Self::new("sdccl", entries, seed)
    }

    /// 100 chunks of five clusters, no drift.
    pub fn ncd100(seed: u64) -> Self {
        Self::new("100ncd", vec![StreamEntry::uniform(5, 30); 100], seed)
    }

    /// 1000 chunks; cluster count and labels change every 100 chunks.
    pub fn wcd1000(seed: u64) -> Self {
        let blocks: [Vec<usize>; 10] = [
            vec![30; 5],
            vec![38, 38, 37, 37],
            vec![30; 5],
            vec![50; 3],
            vec![30; 5],
            vec![38, 38, 37, 37],
            vec![30; 5],
            vec![75; 2],
            vec![50; 3],
            vec![30; 5],
        ];
        let mut entries = Vec::with_capacity(1000);
        for (b, sizes) in blocks.iter().enumerate() {
            for i in 0..100 {
                let mut e = StreamEntry { cluster_sizes: sizes.clone(), drifts: Vec::new() };
                if b > 0 && i == 0 {
                    e.drifts.push(DriftKind::Relabel(Persistence::Sustained));
                }
                entries.push(e);
            }
        }
        Self::new("1000wcd", entries, seed)
    }

    /// Looks up a named preset (`sdwcd`, `sdccl`, `100ncd`, `1000wcd`).
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sdwcd" => Some(Self::sdwcd(seed)),
            "sdccl" => Some(Self::sdccl(seed)),
            "100ncd" | "ncd100" | "ncd" => Some(Self::ncd100(seed)),
            "1000wcd" | "wcd1000" | "wcd" => Some(Self::wcd1000(seed)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.entries.is_empty() {
            return bad("stream spec has no entries".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !self.relocation.iter().all(|v| v.is_finite()) {
            return bad("relocation offset must be finite".into());
        }
        for (i, e) in self.entries.iter().enumerate() {
            let t = i + 1;
            let count = e.cluster_count();
            if !(1..=5).contains(&count) {
                return bad(format!("t={t}: cluster count {count} outside 1..=5"));
            }
            if e.cluster_sizes.contains(&0) {
                return bad(format!("t={t}: empty cluster"));
            }
            if e.drifts.contains(&DriftKind::Merge) && count != 1 {
                return bad(format!("t={t}: merge drift needs exactly one cluster"));
            }
        }
        Ok(())
    }

    /// Per-timestamp label drift flags implied by the entries.
    pub fn label_schedule(&self) -> Vec<LabelDrift> {
        self.entries
            .iter()
            .map(|e| {
                let mut flag = LabelDrift::None;
                for d in &e.drifts {
                    match d {
                        DriftKind::Relabel(Persistence::Sustained) => flag = LabelDrift::Sustained,
                        DriftKind::Relabel(Persistence::Temporary) if flag == LabelDrift::None => {
                            flag = LabelDrift::Temporary
                        }
                        _ => {}
                    }
                }
                flag
            })
            .collect()
    }
}

/// Draws every chunk of `spec`: isotropic Gaussian blobs around the sites for
/// the chunk's cluster count, clipped to the unit square, records grouped by
/// cluster. Labels are then permuted according to the relabel drifts.
pub fn generate_synthetic(spec: &StreamSpec) -> Result<Vec<Chunk>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut relocated = false;
    let mut chunks = Vec::with_capacity(spec.entries.len());

    for (i, entry) in spec.entries.iter().enumerate() {
        if entry.drifts.contains(&DriftKind::Relocate) {
            relocated = true;
        }
        let offset = if relocated { spec.relocation } else { [0.0, 0.0] };
        let mut records = Vec::with_capacity(entry.chunk_size());
        for ((site, label), &size) in sites(entry.cluster_count()).into_iter().zip(&entry.cluster_sizes) {
            for _ in 0..size {
                let values = (0..2).map(|d| (site[d] + offset[d] + noise.sample(&mut rng)).clamp(0.0, 1.0)).collect();
                records.push(Record::labeled(values, label));
            }
        }
        chunks.push(Chunk::new(i as u64 + 1, records)?);
    }

    let mut label_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    label_rng.set_stream(1);
    Ok(relabel(chunks, &spec.label_schedule(), &mut label_rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelDrift {
    None,
    Temporary,
    Sustained,
}

/// Permutes class labels on flagged chunks. A temporary flag touches only its
/// own chunk; a sustained flag composes a new permutation that applies to
/// every later chunk as well. Missing schedule entries count as `None`.
pub fn apply_label_drift(chunks: Vec<Chunk>, schedule: &[LabelDrift], seed: u64) -> Vec<Chunk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    relabel(chunks, schedule, &mut rng)
}

type Mapping = BTreeMap<Label, Label>;

fn map_label(m: &Mapping, l: Label) -> Label {
    m.get(&l).copied().unwrap_or(l)
}

/// A random permutation of `labels` that moves at least one label when there are two or more.
fn random_permutation(labels: &[Label], rng: &mut ChaCha8Rng) -> Mapping {
    let mut shuffled = labels.to_vec();
    if labels.len() > 1 {
        while shuffled == labels {
            shuffled.shuffle(rng);
        }
    }
    labels.iter().copied().zip(shuffled).collect()
}

fn relabel(chunks: Vec<Chunk>, schedule: &[LabelDrift], rng: &mut ChaCha8Rng) -> Vec<Chunk> {
    let mut sustained = Mapping::new();
    chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| {
            let flag = schedule.get(i).copied().unwrap_or(LabelDrift::None);
            let t = chunk.timestamp();
            let mut records = chunk.into_records();
            let mut present: Vec<Label> =
                records.iter().filter_map(|r| r.label).map(|l| map_label(&sustained, l)).collect();
            present.sort_unstable();
            present.dedup();

            let extra = match flag {
                LabelDrift::None => Mapping::new(),
                LabelDrift::Temporary => random_permutation(&present, rng),
                LabelDrift::Sustained => {
                    let p = random_permutation(&present, rng);
                    // Compose: new sustained = p after old sustained.
                    let mut keys: Vec<Label> = sustained.keys().copied().chain(p.keys().copied()).collect();
                    keys.sort_unstable();
                    keys.dedup();
                    sustained = keys.into_iter().map(|k| (k, map_label(&p, map_label(&sustained, k)))).collect();
                    Mapping::new()
                }
            };
            for r in &mut records {
                if let Some(l) = r.label {
                    r.label = Some(map_label(&extra, map_label(&sustained, l)));
                }
            }
            Chunk::new(t, records).expect("relabeling keeps chunks valid")
        })
        .collect()
}

/// Splits a labeled dataset into `chunk_count` chunks; chunk `i` takes the
/// `i`-th contiguous slice of every class (classes in order of first
/// appearance), so per-class counts differ by at most one across chunks.
///
/// Every class must have at least `chunk_count` records.
pub fn chunk_dataset(dataset: &[Record], chunk_count: usize) -> Result<Vec<Chunk>> {
    chunk_dataset_with(dataset, chunk_count, false)
}

/// As [`chunk_dataset`]; with `allow_small_classes`, classes smaller than the
/// chunk count are spread one record per chunk instead of being rejected.
pub fn chunk_dataset_with(dataset: &[Record], chunk_count: usize, allow_small_classes: bool) -> Result<Vec<Chunk>> {
    chunk_indices(dataset, chunk_count, allow_small_classes)?
        .into_iter()
        .enumerate()
        .map(|(c, idx)| Chunk::new(c as u64 + 1, idx.into_iter().map(|i| dataset[i].clone()).collect()))
        .collect()
}

/// Dataset indices making up each chunk of [`chunk_dataset_with`].
pub fn chunk_indices(dataset: &[Record], chunk_count: usize, allow_small_classes: bool) -> Result<Vec<Vec<usize>>> {
    check_uniform(dataset)?;
    if chunk_count == 0 {
        return Err(Error::InvalidConfig("chunk count must be at least 1".into()));
    }
    let mut order: Vec<Label> = Vec::new();
    let mut classes: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, r) in dataset.iter().enumerate() {
        let label = r.label.ok_or(Error::MissingLabel { index: i })?;
        classes
            .entry(label)
            .or_insert_with(|| {
                order.push(label);
                Vec::new()
            })
            .push(i);
    }
    if !allow_small_classes {
        for label in &order {
            let m = classes[label].len();
            if m < chunk_count {
                return Err(Error::ClassTooSmall { label: *label, records: m, chunks: chunk_count });
            }
        }
    }

    Ok((0..chunk_count)
        .map(|c| {
            let mut chunk = Vec::new();
            for label in &order {
                let idx = &classes[label];
                let m = idx.len();
                chunk.extend_from_slice(&idx[c * m / chunk_count..(c + 1) * m / chunk_count]);
            }
            chunk
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningRule {
    /// Rank-based bins of (nearly) equal population; equal values share a bin.
    #[default]
    EqualFrequency,
    /// `ceil(v * n)` clamped to `1..=n`: equal-width partition of [0, 1].
    EqualWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub bin_count: usize,
    pub rule: BinningRule,
}

impl BinningSpec {
    pub fn new(bin_count: usize, rule: BinningRule) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::InvalidConfig("bin count must be at least 1".into()));
        }
        Ok(Self { bin_count, rule })
    }

    /// Equal-width bin of a single value in [0, 1].
    pub fn width_bin(&self, v: f64) -> u32 {
        let n = self.bin_count as f64;
        (v * n).ceil().clamp(1.0, n) as u32
    }
}

/// One artificial class column per attribute: `result[record][attribute]` is
/// the 1-based bin of that attribute value. Values must be normalized.
pub fn make_artificial_classes(dataset: &[Record], binning: BinningSpec) -> Result<Vec<Vec<u32>>> {
    let dim = check_uniform(dataset)?;
    for (ri, r) in dataset.iter().enumerate() {
        for (ai, &v) in r.values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { record: ri, attribute: ai, value: v });
            }
        }
    }
    let n = dataset.len();
    let mut out = vec![vec![0u32; dim]; n];
    for a in 0..dim {
        match binning.rule {
            BinningRule::EqualWidth => {
                for (row, r) in out.iter_mut().zip(dataset) {
                    row[a] = binning.width_bin(r.values[a]);
                }
            }
            BinningRule::EqualFrequency => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&x, &y| dataset[x].values[a].total_cmp(&dataset[y].values[a]));
                let mut rank = 0;
                for (pos, &i) in idx.iter().enumerate() {
                    if pos > 0 && dataset[idx[pos - 1]].values[a] != dataset[i].values[a] {
                        rank = pos;
                    }
                    out[i][a] = (rank * binning.bin_count / n) as u32 + 1;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_shapes() {
        let shape = |s: &StreamSpec| -> (Vec<usize>, Vec<usize>) {
            (
                s.entries.iter().map(StreamEntry::cluster_count).collect(),
                s.entries.iter().map(|e| e.cluster_sizes[0]).collect(),
            )
        };
        let (counts, sizes) = shape(&StreamSpec::sdwcd(1));
        assert_eq!(counts, [5, 5, 1, 5, 5, 3, 3, 3, 3, 3]);
        assert_eq!(sizes, [30, 30, 150, 30, 30, 50, 50, 50, 50, 50]);
        let (counts, sizes) = shape(&StreamSpec::sdccl(1));
        assert_eq!(counts, [5, 5, 5, 5, 1, 5, 5]);
        assert_eq!(sizes, [30, 30, 30, 30, 150, 30, 30]);
        let w = StreamSpec::wcd1000(1);
        assert_eq!(w.entries.len(), 1000);
        let blocks: Vec<usize> = w.entries.chunks(100).map(|b| b[0].cluster_count()).collect();
        assert_eq!(blocks, [5, 4, 5, 3, 5, 4, 5, 2, 3, 5]);
        assert!(w.entries.iter().all(|e| e.chunk_size() == CHUNK_RECORDS));
        assert_eq!(StreamSpec::preset("1000-WCD", 3).unwrap().name, "1000wcd");
        assert!(StreamSpec::preset("nope", 3).is_none());
    }

    #[test]
    fn generated_chunks_follow_spec() {
        for spec in [StreamSpec::sdwcd(4), StreamSpec::sdccl(4), StreamSpec::ncd100(4)] {
            let chunks = generate_synthetic(&spec).unwrap();
            assert_eq!(chunks.len(), spec.entries.len());
            for (c, e) in chunks.iter().zip(&spec.entries) {
                assert_eq!(c.len(), e.chunk_size());
                assert_eq!(c.unique_labels(), e.cluster_count());
                assert!(c.records().iter().all(|r| r.values.iter().all(|v| (0.0..=1.0).contains(v))));
            }
        }
        let a = generate_synthetic(&StreamSpec::sdwcd(9)).unwrap();
        assert_eq!(a, generate_synthetic(&StreamSpec::sdwcd(9)).unwrap());
        assert_ne!(a, generate_synthetic(&StreamSpec::sdwcd(10)).unwrap());
    }

    #[test]
    fn spec_validation() {
        let mut s = StreamSpec::sdwcd(1);
        s.entries[0].cluster_sizes = vec![10; 6];
        assert!(generate_synthetic(&s).is_err());
        let mut s = StreamSpec::sdwcd(1);
        s.entries[0].drifts.push(DriftKind::Merge);
        assert!(s.validate().is_err());
        let mut s = StreamSpec::sdwcd(1);
        s.sigma = 0.0;
        assert!(s.validate().is_err());
        let mut s = StreamSpec::sdwcd(1);
        s.entries.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn sustained_relabel_persists_temporary_does_not() {
        let chunks = generate_synthetic(&StreamSpec::sdwcd(3)).unwrap();
        let labels = |t: usize| -> Vec<Label> { chunks[t - 1].records().iter().map(|r| r.label.unwrap()).collect() };
        // Temporary drift on a single-class chunk leaves it alone; t=4,5 keep the original labels.
        assert!(labels(3).iter().all(|&l| l == MERGE_LABEL));
        for t in [1, 2, 4, 5] {
            let want: Vec<Label> = (1..=5).flat_map(|l| std::iter::repeat_n(l, 30)).collect();
            assert_eq!(labels(t), want);
        }
        // t=6 onwards: one non-identity permutation of {6,7,8}, the same for every chunk.
        let first: Vec<Label> = labels(6).chunks(50).map(|b| b[0]).collect();
        assert_ne!(first, vec![6, 7, 8]);
        let mut sorted = first.clone();
        sorted.sort();
        assert_eq!(sorted, vec![6, 7, 8]);
        for t in 7..=10 {
            assert_eq!(labels(t), labels(6));
        }
    }

    fn two_label_chunk(t: u64) -> Chunk {
        Chunk::new(t, vec![Record::labeled(vec![0.1], 1), Record::labeled(vec![0.2], 2), Record::labeled(vec![0.3], 1)])
            .unwrap()
    }

    #[test]
    fn two_label_swap_and_identity() {
        let out = apply_label_drift(vec![two_label_chunk(1)], &[LabelDrift::Temporary], 5);
        let got: Vec<Label> = out[0].records().iter().map(|r| r.label.unwrap()).collect();
        assert_eq!(got, vec![2, 1, 2]);

        let chunks = vec![two_label_chunk(1), two_label_chunk(2)];
        assert_eq!(apply_label_drift(chunks.clone(), &[LabelDrift::None, LabelDrift::None], 5), chunks);
        assert_eq!(apply_label_drift(chunks.clone(), &[], 5), chunks);

        let chunks: Vec<Chunk> = (1..=3).map(two_label_chunk).collect();
        let out = apply_label_drift(chunks.clone(), &[LabelDrift::None, LabelDrift::Temporary], 5);
        assert_ne!(out[1], chunks[1]);
        assert_eq!(out[2], chunks[2]);
        let out = apply_label_drift(chunks.clone(), &[LabelDrift::None, LabelDrift::Sustained], 5);
        assert_ne!(out[2], chunks[2]);
        assert_eq!(out[1], out[2].clone().tap_timestamp(2));
    }

    trait TapTimestamp {
        fn tap_timestamp(self, t: u64) -> Chunk;
    }

    impl TapTimestamp for Chunk {
        fn tap_timestamp(self, t: u64) -> Chunk {
            Chunk::new(t, self.into_records()).unwrap()
        }
    }

    fn toy_table() -> Vec<Record> {
        let rows = [
            ([0.052, 0.153], 1),
            ([0.061, 0.252], 1),
            ([0.046, 0.175], 1),
            ([0.055, 0.183], 1),
            ([0.957, 0.858], 2),
            ([0.965, 0.752], 2),
            ([0.957, 0.858], 2),
            ([0.965, 0.752], 2),
        ];
        rows.iter().map(|(v, l)| Record::labeled(v.to_vec(), *l)).collect()
    }

    #[test]
    fn toy_table_split() {
        let data = toy_table();
        let chunks = chunk_dataset(&data, 2).unwrap();
        let idx = |c: &Chunk| -> Vec<usize> {
            c.records().iter().map(|r| data.iter().position(|d| std::ptr::eq(d, r) || d == r).unwrap()).collect()
        };
        assert_eq!(chunks[0].records(), &[data[0].clone(), data[1].clone(), data[4].clone(), data[5].clone()]);
        assert_eq!(chunks[1].records(), &[data[2].clone(), data[3].clone(), data[6].clone(), data[7].clone()]);
        assert_eq!(idx(&chunks[0]).len(), 4);
        assert_eq!(chunks[1].timestamp(), 2);

        let one = chunk_dataset(&data, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].records(), data.as_slice());
    }

    #[test]
    fn chunking_errors_and_lenient_mode() {
        let data = toy_table();
        assert!(matches!(chunk_dataset(&data, 5), Err(Error::ClassTooSmall { label: 1, records: 4, chunks: 5 })));
        let mut with_small = data.clone();
        with_small.extend([Record::labeled(vec![0.5, 0.5], 3), Record::labeled(vec![0.6, 0.5], 3)]);
        assert!(matches!(chunk_dataset(&with_small, 3), Err(Error::ClassTooSmall { label: 3, records: 2, chunks: 3 })));
        let lenient = chunk_dataset_with(&with_small, 3, true).unwrap();
        assert_eq!(lenient.iter().map(Chunk::len).sum::<usize>(), 10);
        assert_eq!(lenient.iter().map(Chunk::unique_labels).collect::<Vec<_>>(), vec![2, 3, 3]);
        let mut unlabeled = data.clone();
        unlabeled[3].label = None;
        assert!(matches!(chunk_dataset(&unlabeled, 2), Err(Error::MissingLabel { index: 3 })));
        assert!(chunk_dataset(&data, 0).is_err());
    }

    #[test]
    fn width_bins() {
        let b = BinningSpec::new(3, BinningRule::EqualWidth).unwrap();
        assert_eq!(b.width_bin(0.052), 1);
        assert_eq!(b.width_bin(0.772), 3);
        assert_eq!(b.width_bin(0.543), 2);
        assert_eq!(b.width_bin(0.0), 1);
        assert_eq!(b.width_bin(1.0), 3);
        assert_eq!(b.width_bin(1.0 / 3.0), 1);
        assert!(BinningSpec::new(0, BinningRule::EqualWidth).is_err());
    }

    #[test]
    fn frequency_bins_share_ties_and_reach_extremes() {
        let data: Vec<Record> = [0.0, 0.5, 0.5, 0.5, 1.0, 0.2].iter().map(|&v| Record::unlabeled(vec![v])).collect();
        let b = make_artificial_classes(&data, BinningSpec::new(3, BinningRule::EqualFrequency).unwrap()).unwrap();
        let bins: Vec<u32> = b.iter().map(|r| r[0]).collect();
        assert_eq!(bins, [1, 2, 2, 2, 3, 1]);
        let bad = vec![Record::unlabeled(vec![1.2])];
        assert!(matches!(
            make_artificial_classes(&bad, BinningSpec::new(3, BinningRule::EqualWidth).unwrap()),
            Err(Error::OutOfRange { .. })
        ));
    }
}
