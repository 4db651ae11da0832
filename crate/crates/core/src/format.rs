//! On-disk stream layout: one CSV file per chunk plus a JSON manifest.
//!
//! Chunk files carry a header `a1,...,an,label` optionally followed by
//! artificial class columns `ac1,...,acn`. Values are written in shortest
//! round-trip form, so reading a stream back yields bit-identical records.
//! Every file is written to a temporary sibling and renamed into place.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Chunk, Label, Record};
use crate::streamgen::{BinningSpec, StreamSpec};

pub const MANIFEST_FORMAT: &str = "streamclust-stream";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Synthetic,
    RealWorld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkEntry {
    pub file: String,
    pub timestamp: u64,
    pub records: usize,
    pub labels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub name: String,
    pub origin: Origin,
    pub dims: usize,
    pub attributes: Vec<String>,
    pub chunks: Vec<ChunkEntry>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub spec: Option<StreamSpec>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default)]
    pub artificial_classes: Option<BinningSpec>,
}

impl Manifest {
    pub fn new(name: &str, origin: Origin, attributes: Vec<String>) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            name: name.into(),
            origin,
            dims: attributes.len(),
            attributes,
            chunks: Vec::new(),
            seed: None,
            spec: None,
            source: None,
            normalized: false,
            artificial_classes: None,
        }
    }
}

/// A chunk plus its artificial class rows (empty when the stream has none).
#[derive(Debug, Clone, PartialEq)]
pub struct StoredChunk {
    pub chunk: Chunk,
    pub artificial: Vec<Vec<u32>>,
}

impl StoredChunk {
    pub fn plain(chunk: Chunk) -> Self {
        Self { chunk, artificial: Vec::new() }
    }
}

pub fn default_attributes(dims: usize) -> Vec<String> {
    (1..=dims).map(|i| format!("a{i}")).collect()
}

/// Writes `bytes` to `path` through a temporary sibling file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::format(path, "not a file path"))?.to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn chunk_csv(stored: &StoredChunk, attributes: &[String]) -> Result<Vec<u8>> {
    let columns = stored.artificial.first().map(Vec::len).unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = attributes.to_vec();
    header.push("label".into());
    header.extend((1..=columns).map(|i| format!("ac{i}")));
    let csv_err = |e: csv::Error| Error::InvalidConfig(format!("csv encoding: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (i, r) in stored.chunk.records().iter().enumerate() {
        let mut row: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        row.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        if let Some(ac) = stored.artificial.get(i) {
            row.extend(ac.iter().map(u32::to_string));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidConfig(format!("csv encoding: {e}")))
}

/// Writes every chunk and the manifest into `dir`, returning the manifest path.
///
/// The chunk list of `manifest` is filled in here. On failure, files already
/// written by this call are removed.
pub fn write_stream(dir: &Path, mut manifest: Manifest, chunks: &[StoredChunk]) -> Result<PathBuf> {
    if chunks.is_empty() {
        return Err(Error::Empty("stream"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = chunks.len().to_string().len().max(4);
    manifest.chunks.clear();
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for s in chunks {
            if s.chunk.dim() != manifest.dims {
                return Err(Error::DimensionMismatch { expected: manifest.dims, found: s.chunk.dim() });
            }
            if !s.artificial.is_empty() && s.artificial.len() != s.chunk.len() {
                return Err(Error::InvalidConfig("artificial class rows do not match the chunk".into()));
            }
            let file = format!("chunk_{:0width$}.csv", s.chunk.timestamp());
            let path = dir.join(&file);
            atomic_write(&path, &chunk_csv(s, &manifest.attributes)?)?;
            written.push(path);
            manifest.chunks.push(ChunkEntry {
                file,
                timestamp: s.chunk.timestamp(),
                records: s.chunk.len(),
                labels: s.chunk.unique_labels(),
            });
        }
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    })();
    if result.is_err() {
        for p in written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if m.format != MANIFEST_FORMAT {
        return Err(Error::format(path, format!("not a stream manifest (format {:?})", m.format)));
    }
    if m.version != MANIFEST_VERSION {
        return Err(Error::format(path, format!("unsupported manifest version {}", m.version)));
    }
    if m.dims == 0 || m.attributes.len() != m.dims {
        return Err(Error::format(path, "attribute list does not match dims"));
    }
    Ok(m)
}

fn read_chunk(path: &Path, entry: &ChunkEntry, dims: usize) -> Result<StoredChunk> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let header = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    if header.len() < dims + 1 || &header[dims] != "label" {
        return Err(Error::format(path, format!("expected {dims} attributes followed by a label column")));
    }
    let ac = header.len() - dims - 1;
    let mut records = Vec::new();
    let mut artificial = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        let bad = |what: &str| Error::format(path, format!("row {}: {what}", line + 2));
        if row.len() != header.len() {
            return Err(bad("wrong number of fields"));
        }
        let values = (0..dims)
            .map(|i| row[i].trim().parse::<f64>().map_err(|_| bad("non-numeric attribute")))
            .collect::<Result<Vec<_>>>()?;
        let label = match row[dims].trim() {
            "" => None,
            s => Some(s.parse::<Label>().map_err(|_| bad("non-integer label"))?),
        };
        records.push(Record::new(values, label));
        if ac > 0 {
            artificial.push(
                (dims + 1..header.len())
                    .map(|i| row[i].trim().parse::<u32>().map_err(|_| bad("bad artificial class")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
    }
    if records.len() != entry.records {
        return Err(Error::format(
            path,
            format!("manifest lists {} records, file has {}", entry.records, records.len()),
        ));
    }
    let chunk = Chunk::new(entry.timestamp, records).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(StoredChunk { chunk, artificial })
}

/// Reads a manifest and every chunk it lists, in order.
pub fn read_stream(manifest_path: &Path) -> Result<(Manifest, Vec<StoredChunk>)> {
    let manifest = read_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut chunks = Vec::with_capacity(manifest.chunks.len());
    for (i, entry) in manifest.chunks.iter().enumerate() {
        if entry.timestamp != i as u64 + 1 {
            return Err(Error::format(manifest_path, "chunk timestamps are not contiguous from 1"));
        }
        chunks.push(read_chunk(&dir.join(&entry.file), entry, manifest.dims)?);
    }
    if chunks.is_empty() {
        return Err(Error::format(manifest_path, "manifest lists no chunks"));
    }
    Ok((manifest, chunks))
}

/// A raw tabular dataset: numeric attributes and a trailing class column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub attributes: Vec<String>,
    pub records: Vec<Record>,
    /// Original class names by assigned label, when the class column is not integral.
    pub class_names: Vec<(Label, String)>,
}

fn detect_delimiter(line: &str) -> u8 {
    let count = |d: u8| line.bytes().filter(|&b| b == d).count();
    b",;\t".iter().copied().max_by_key(|&d| count(d)).filter(|&d| count(d) > 0).unwrap_or(b' ')
}

/// Reads a delimited dataset whose last column is the class. The delimiter
/// (comma, semicolon, tab or whitespace) and the presence of a header row are
/// detected from the first line. Non-integer class names are numbered in
/// order of first appearance.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let first = lines.peek().ok_or_else(|| Error::format(path, "empty file"))?.1;
    let delim = detect_delimiter(first);
    let split = |l: &str| -> Vec<String> {
        if delim == b' ' {
            l.split_whitespace().map(str::to_string).collect()
        } else {
            l.split(delim as char).map(|s| s.trim().trim_matches('"').to_string()).collect()
        }
    };

    let first_fields = split(first);
    if first_fields.len() < 2 {
        return Err(Error::format(path, "need at least one attribute and a class column"));
    }
    let dims = first_fields.len() - 1;
    let has_header = first_fields[..dims].iter().any(|f| f.parse::<f64>().is_err());
    let attributes = if has_header {
        lines.next();
        first_fields[..dims].to_vec()
    } else {
        default_attributes(dims)
    };

    let mut raw = Vec::new();
    for (n, line) in lines {
        let fields = split(line);
        let bad = |what: &str| Error::format(path, format!("line {}: {what}", n + 1));
        if fields.len() != dims + 1 {
            return Err(bad(&format!("expected {} fields, found {}", dims + 1, fields.len())));
        }
        let values = fields[..dims]
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(bad(&format!("non-numeric attribute {f:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        raw.push((values, fields[dims].clone()));
    }
    if raw.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }

    let integral = raw.iter().all(|(_, c)| c.parse::<Label>().is_ok());
    let mut names: HashMap<String, Label> = HashMap::new();
    let mut class_names = Vec::new();
    let records = raw
        .into_iter()
        .map(|(values, class)| {
            let label = if integral {
                class.parse::<Label>().expect("checked above")
            } else {
                let next = names.len() as Label + 1;
                *names.entry(class.clone()).or_insert_with(|| {
                    class_names.push((next, class));
                    next
                })
            };
            Record::labeled(values, label)
        })
        .collect();
    Ok(Dataset { attributes, records, class_names })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<StoredChunk> {
        let values = [0.1, 1.0 / 3.0, 0.7000000000000001, 2.5e-17];
        (1..=2)
            .map(|t| {
                let records = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| Record::labeled(vec![v, 1.0 - v], i as Label % 2 + 1))
                    .collect();
                StoredChunk {
                    chunk: Chunk::new(t, records).unwrap(),
                    artificial: (0..4).map(|i| vec![i % 3 + 1, 1]).collect(),
                }
            })
            .collect()
    }

    #[test]
    fn stream_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new("toy", Origin::RealWorld, default_attributes(2));
        let path = write_stream(dir.path(), m, &sample()).unwrap();
        let (manifest, chunks) = read_stream(&path).unwrap();
        assert_eq!(manifest.chunks.len(), 2);
        assert_eq!(manifest.chunks[0].file, "chunk_0001.csv");
        assert_eq!(chunks, sample());
        let bits = |c: &[StoredChunk]| -> Vec<u64> {
            c.iter().flat_map(|s| s.chunk.records().iter().flat_map(|r| r.values.iter().map(|v| v.to_bits()))).collect()
        };
        assert_eq!(bits(&chunks), bits(&sample()));
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn failed_write_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut chunks = sample();
        chunks[1] = StoredChunk::plain(Chunk::new(2, vec![Record::unlabeled(vec![0.1, 0.2, 0.3])]).unwrap());
        let m = Manifest::new("toy", Origin::Synthetic, default_attributes(2));
        assert!(write_stream(dir.path(), m, &chunks).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn manifest_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        fs::write(&p, r#"{"format":"other"}"#).unwrap();
        assert!(read_manifest(&p).is_err());
        let m = Manifest::new("toy", Origin::Synthetic, default_attributes(2));
        let path = write_stream(dir.path(), m, &sample()).unwrap();
        fs::write(dir.path().join("chunk_0002.csv"), "a1,a2,label\n0.1,0.2,1\n").unwrap();
        assert!(read_stream(&path).is_err());
        assert!(read_manifest(&dir.path().join("missing.json")).is_err());
    }

    #[test]
    fn dataset_detection() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wine.csv");
        fs::write(&p, "\"fixed acidity\";\"ph\";\"quality\"\n7.4;3.51;5\n7.8;3.2;6\n").unwrap();
        let d = read_dataset(&p).unwrap();
        assert_eq!(d.attributes, vec!["fixed acidity", "ph"]);
        assert_eq!(d.records[1], Record::labeled(vec![7.8, 3.2], 6));
        assert!(d.class_names.is_empty());

        let p = dir.path().join("pen.tra");
        fs::write(&p, "47,100,27,8\n0,89,27,2\n").unwrap();
        let d = read_dataset(&p).unwrap();
        assert_eq!(d.attributes, vec!["a1", "a2", "a3"]);
        assert_eq!(d.records[0].label, Some(8));

        let p = dir.path().join("iris.txt");
        fs::write(&p, "5.1 3.5 setosa\n6.2 2.9 versicolor\n5.0 3.4 setosa\n").unwrap();
        let d = read_dataset(&p).unwrap();
        assert_eq!(d.records.iter().map(|r| r.label.unwrap()).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(d.class_names[1], (2, "versicolor".to_string()));

        let p = dir.path().join("bad.csv");
        fs::write(&p, "1,2,3\n1,x,3\n").unwrap();
        assert!(read_dataset(&p).is_err());
        fs::write(&p, "1,2,3\n1,2\n").unwrap();
        assert!(read_dataset(&p).is_err());
    }
}
