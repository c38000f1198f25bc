//! On-disk formats.
//!
//! * Feature matrix (`.fmtx`): `"FMTX"`, u32 version = 1, u64 rows, u64 cols,
//!   then `rows·cols` f64 values row-major. All little-endian.
//! * Container (`.fmtc`): `"FMTC"`, u32 version = 1, u32 entry count, then per
//!   entry a u32 name length, the UTF-8 name and a u64 absolute offset of an
//!   embedded feature-matrix block.
//! * Identity sidecar (`.csv`) next to every feature matrix.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{DatasetManifest, FeatureSet, Modality, PairedCorpus, RecordId};
use crate::error::{Error, Result};

pub const MATRIX_MAGIC: [u8; 4] = *b"FMTX";
pub const CONTAINER_MAGIC: [u8; 4] = *b"FMTC";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 24;

const SIDECAR_HEADER: [&str; 6] = [
    "record_id",
    "segment_id",
    "subject_id",
    "repetition_id",
    "category_id",
    "modality",
];

/// Encoded size of a `rows × cols` matrix.
pub fn matrix_file_size(rows: usize, cols: usize) -> u64 {
    HEADER_BYTES as u64 + (rows as u64) * (cols as u64) * 8
}

pub fn encode_matrix(m: &Array2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(matrix_file_size(m.nrows(), m.ncols()) as usize);
    out.extend_from_slice(&MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn check_header(bytes: &[u8], magic: [u8; 4], min_len: usize, path: &Path) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            path: path.into(),
            expected: min_len as u64,
            found: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != magic {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: magic,
            found,
        });
    }
    if bytes.len() < min_len {
        return Err(Error::Truncated {
            path: path.into(),
            expected: min_len as u64,
            found: bytes.len() as u64,
        });
    }
    let version = read_u32(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.into(),
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    Ok(())
}

/// Decodes one matrix block at the start of `bytes`; returns it with the
/// number of bytes consumed. `path` only labels errors.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<(Array2<f64>, usize)> {
    check_header(bytes, MATRIX_MAGIC, HEADER_BYTES, path)?;
    let rows = read_u64(bytes, 8);
    let cols = read_u64(bytes, 16);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_BYTES as u64))
        .ok_or_else(|| Error::Data(format!("matrix header in {} overflows", path.display())))?;
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let payload = &bytes[HEADER_BYTES..expected as usize];
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let m = Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::Data(format!("bad matrix shape: {e}")))?;
    Ok((m, expected as usize))
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

/// Reads a feature matrix, optionally requiring a column count.
pub fn read_matrix(path: &Path, expected_cols: Option<usize>) -> Result<Array2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (m, used) = decode_matrix(&bytes, path)?;
    if used != bytes.len() {
        return Err(Error::Data(format!(
            "{} has {} trailing bytes",
            path.display(),
            bytes.len() - used
        )));
    }
    if let Some(cols) = expected_cols {
        if m.ncols() != cols {
            return Err(Error::DimensionMismatch {
                context: "feature file columns",
                expected: cols,
                found: m.ncols(),
            });
        }
    }
    Ok(m)
}

/// Named matrices stored in one file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    entries: Vec<(String, Array2<f64>)>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, m: Array2<f64>) {
        self.entries.push((name.into(), m));
    }

    /// Stores a vector as a `1 × n` matrix.
    pub fn push_vector(&mut self, name: impl Into<String>, v: &Array1<f64>) {
        let row = v.clone().insert_axis(ndarray::Axis(0));
        self.push(name, row);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn matrix(&self, name: &str) -> Result<&Array2<f64>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::MissingEntry {
                path: PathBuf::from("<container>"),
                name: name.to_string(),
            })
    }

    pub fn vector(&self, name: &str) -> Result<Array1<f64>> {
        let m = self.matrix(name)?;
        if m.nrows() != 1 {
            return Err(Error::Data(format!("entry {name:?} is not a row vector")));
        }
        Ok(m.row(0).to_owned())
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        let v = self.vector(name)?;
        if v.len() != 1 {
            return Err(Error::Data(format!("entry {name:?} is not a scalar")));
        }
        Ok(v[0])
    }

    /// Prefixes every entry name with `prefix.` and appends to `self`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: Container) {
        for (n, m) in other.entries {
            self.entries.push((format!("{prefix}.{n}"), m));
        }
    }

    /// Entries whose names start with `prefix.`, with the prefix removed.
    pub fn sub(&self, prefix: &str) -> Container {
        let p = format!("{prefix}.");
        Container {
            entries: self
                .entries
                .iter()
                .filter_map(|(n, m)| n.strip_prefix(&p).map(|s| (s.to_string(), m.clone())))
                .collect(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let toc_len: usize = 12
            + self
                .entries
                .iter()
                .map(|(n, _)| 4 + n.len() + 8)
                .sum::<usize>();
        let mut offsets = Vec::with_capacity(self.entries.len());
        let mut at = toc_len as u64;
        for (_, m) in &self.entries {
            offsets.push(at);
            at += matrix_file_size(m.nrows(), m.ncols());
        }
        let mut out = Vec::with_capacity(at as usize);
        out.extend_from_slice(&CONTAINER_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for ((name, _), off) in self.entries.iter().zip(&offsets) {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&off.to_le_bytes());
        }
        for (_, m) in &self.entries {
            out.extend_from_slice(&encode_matrix(m));
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        check_header(bytes, CONTAINER_MAGIC, 12, path)?;
        let count = read_u32(bytes, 8) as usize;
        let truncated = |need: usize| Error::Truncated {
            path: path.into(),
            expected: need as u64,
            found: bytes.len() as u64,
        };
        let mut at = 12;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            if bytes.len() < at + 4 {
                return Err(truncated(at + 4));
            }
            let len = read_u32(bytes, at) as usize;
            at += 4;
            if bytes.len() < at + len + 8 {
                return Err(truncated(at + len + 8));
            }
            let name = std::str::from_utf8(&bytes[at..at + len])
                .map_err(|_| Error::Data(format!("non-UTF-8 entry name in {}", path.display())))?
                .to_string();
            at += len;
            let offset = read_u64(bytes, at) as usize;
            at += 8;
            if offset > bytes.len() {
                return Err(truncated(offset));
            }
            let (m, _) = decode_matrix(&bytes[offset..], path)?;
            entries.push((name, m));
        }
        Ok(Container { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path).map_err(|e| match e {
            Error::MissingEntry { name, .. } => Error::MissingEntry {
                path: path.into(),
                name,
            },
            other => other,
        })
    }
}

/// Models that persist as a [`Container`].
pub trait Persist: Sized {
    fn to_container(&self) -> Container;
    fn from_container(c: &Container) -> Result<Self>;

    fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    fn load(path: &Path) -> Result<Self> {
        Self::from_container(&Container::read(path)?)
    }
}

fn opt_field(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sidecar(path: &Path, modality: Modality, ids: &[RecordId]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SIDECAR_HEADER)?;
    for (i, id) in ids.iter().enumerate() {
        w.write_record([
            i.to_string(),
            id.segment.to_string(),
            opt_field(id.subject),
            opt_field(id.repetition),
            id.category.to_string(),
            modality.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: &Path) -> Result<(Modality, Vec<RecordId>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(SIDECAR_HEADER.iter().copied()) {
        return Err(Error::Data(format!("unexpected sidecar header in {}", path.display())));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Data(format!("bad {what} {s:?} in {}", path.display())))
    };
    let parse_opt = |s: &str, what: &str| -> Result<Option<usize>> {
        if s.is_empty() {
            Ok(None)
        } else {
            parse(s, what).map(Some)
        }
    };
    let mut modality = None;
    let mut ids = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if parse(&rec[0], "record_id")? != row {
            return Err(Error::Data(format!("record ids out of order in {}", path.display())));
        }
        let m = Modality::parse(&rec[5])?;
        if *modality.get_or_insert(m) != m {
            return Err(Error::Data(format!("mixed modalities in {}", path.display())));
        }
        ids.push(RecordId {
            segment: parse(&rec[1], "segment_id")?,
            subject: parse_opt(&rec[2], "subject_id")?,
            repetition: parse_opt(&rec[3], "repetition_id")?,
            category: parse(&rec[4], "category_id")?,
        });
    }
    let modality = modality.ok_or_else(|| Error::Data(format!("empty sidecar {}", path.display())))?;
    Ok((modality, ids))
}

/// Sidecar path for a feature matrix: same stem, `.csv` extension.
pub fn sidecar_path(matrix: &Path) -> PathBuf {
    matrix.with_extension("csv")
}

/// Writes `set` to `path` (matrix) and its sidecar.
pub fn write_features(path: &Path, set: &FeatureSet) -> Result<()> {
    write_matrix(path, &set.features)?;
    write_sidecar(&sidecar_path(path), set.modality, &set.ids)
}

/// Loads a feature matrix and its identity sidecar.
pub fn load_features(path: &Path, expected_cols: Option<usize>) -> Result<FeatureSet> {
    let features = read_matrix(path, expected_cols)?;
    let (modality, ids) = read_sidecar(&sidecar_path(path))?;
    FeatureSet::new(modality, ids, features)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const AUDIO_FILE: &str = "audio.fmtx";
pub const EEG_FILE: &str = "eeg.fmtx";

/// Writes a corpus as `manifest.json`, `audio.fmtx/.csv`, `eeg.fmtx/.csv`.
pub fn save_corpus(dir: &Path, corpus: &PairedCorpus) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(MANIFEST_FILE), &corpus.manifest)?;
    write_features(&dir.join(AUDIO_FILE), &corpus.audio)?;
    write_features(&dir.join(EEG_FILE), &corpus.eeg)
}

pub fn load_corpus(dir: &Path) -> Result<PairedCorpus> {
    let manifest: DatasetManifest = read_json(&dir.join(MANIFEST_FILE))?;
    manifest.validate()?;
    let audio = load_features(&dir.join(AUDIO_FILE), Some(manifest.audio_dim))?;
    let eeg = load_features(&dir.join(EEG_FILE), Some(manifest.eeg_dim))?;
    if audio.modality != Modality::Audio || eeg.modality != Modality::Eeg {
        return Err(Error::Data("corpus files carry the wrong modality".into()));
    }
    PairedCorpus::new(manifest, audio, eeg)
}
