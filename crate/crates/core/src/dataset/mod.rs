//! Paired audio/EEG corpus: data model, synthetic generator, folds and I/O.

mod folds;
pub mod io;

pub use folds::{split, stratified_folds, FoldPlan};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

pub const DEFAULT_CATEGORIES: [&str; 8] = [
    "Chant",
    "Child singing",
    "Choir",
    "Female singing",
    "Male singing",
    "Rapping",
    "Synthetic singing",
    "Yodeling",
];

/// Shape of a paired corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub categories: Vec<String>,
    pub n_segments: usize,
    pub n_subjects: usize,
    pub n_reps: usize,
    pub audio_dim: usize,
    pub eeg_dim: usize,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        DatasetManifest::build(
            DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
            160,
            9,
            5,
            1152,
            512,
        )
        .expect("default manifest is valid")
    }
}

impl DatasetManifest {
    pub fn build(
        categories: Vec<String>,
        n_segments: usize,
        n_subjects: usize,
        n_reps: usize,
        audio_dim: usize,
        eeg_dim: usize,
    ) -> Result<Self> {
        let m = DatasetManifest {
            categories,
            n_segments,
            n_subjects,
            n_reps,
            audio_dim,
            eeg_dim,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("categories", self.categories.len()),
            ("n_segments", self.n_segments),
            ("n_subjects", self.n_subjects),
            ("n_reps", self.n_reps),
            ("audio_dim", self.audio_dim),
            ("eeg_dim", self.eeg_dim),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_segments % self.categories.len() != 0 {
            return Err(Error::Config(format!(
                "{} segments cannot be split evenly across {} categories",
                self.n_segments,
                self.categories.len()
            )));
        }
        Ok(())
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn segments_per_category(&self) -> usize {
        self.n_segments / self.n_categories()
    }

    /// Segments are grouped into contiguous equal blocks per category.
    pub fn category_of(&self, segment: usize) -> usize {
        segment / self.segments_per_category()
    }

    pub fn n_eeg_records(&self) -> usize {
        self.n_segments * self.n_subjects * self.n_reps
    }

    pub fn dim(&self, modality: Modality) -> usize {
        match modality {
            Modality::Audio => self.audio_dim,
            Modality::Eeg => self.eeg_dim,
            Modality::Fused => self.eeg_dim + self.audio_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Audio,
    Eeg,
    /// EEG features followed by the paired audio features.
    Fused,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Audio => "audio",
            Modality::Eeg => "eeg",
            Modality::Fused => "fused",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "audio" => Ok(Modality::Audio),
            "eeg" => Ok(Modality::Eeg),
            "fused" => Ok(Modality::Fused),
            other => Err(Error::Data(format!("unknown modality {other:?}"))),
        }
    }
}

/// Identity of one feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RecordId {
    pub segment: usize,
    pub subject: Option<usize>,
    pub repetition: Option<usize>,
    pub category: usize,
}

/// One modality vector together with its identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: RecordId,
    pub modality: Modality,
    pub vector: Array1<f64>,
}

/// Row-stacked records of a single modality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub modality: Modality,
    pub ids: Vec<RecordId>,
    pub features: Array2<f64>,
}

impl FeatureSet {
    pub fn new(modality: Modality, ids: Vec<RecordId>, features: Array2<f64>) -> Result<Self> {
        if ids.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                context: "identity rows",
                expected: features.nrows(),
                found: ids.len(),
            });
        }
        Ok(FeatureSet {
            modality,
            ids,
            features,
        })
    }

    pub fn from_records(records: &[FeatureRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Data("no records".into()))?;
        let dim = first.vector.len();
        let mut features = Array2::zeros((records.len(), dim));
        for (i, r) in records.iter().enumerate() {
            if r.modality != first.modality {
                return Err(Error::Data("mixed modalities in one feature set".into()));
            }
            if r.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "record vector",
                    expected: dim,
                    found: r.vector.len(),
                });
            }
            features.row_mut(i).assign(&r.vector);
        }
        Ok(FeatureSet {
            modality: first.modality,
            ids: records.iter().map(|r| r.id).collect(),
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn record(&self, i: usize) -> FeatureRecord {
        FeatureRecord {
            id: self.ids[i],
            modality: self.modality,
            vector: self.features.row(i).to_owned(),
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.ids.iter().map(|id| id.category).collect()
    }

    pub fn segments(&self) -> Vec<usize> {
        self.ids.iter().map(|id| id.segment).collect()
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> FeatureSet {
        FeatureSet {
            modality: self.modality,
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
            features: self.features.select(Axis(0), idx),
        }
    }

    /// Checks every record against the manifest: dimension, segment range
    /// and block category assignment.
    pub fn validate(&self, manifest: &DatasetManifest) -> Result<()> {
        let dim = manifest.dim(self.modality);
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "feature dimension",
                expected: dim,
                found: self.dim(),
            });
        }
        for id in &self.ids {
            if id.segment >= manifest.n_segments {
                return Err(Error::Data(format!("segment {} out of range", id.segment)));
            }
            if id.category != manifest.category_of(id.segment) {
                return Err(Error::Data(format!(
                    "segment {} labelled category {} but belongs to {}",
                    id.segment,
                    id.category,
                    manifest.category_of(id.segment)
                )));
            }
            let eeg_like = self.modality != Modality::Audio;
            if id.subject.is_some() != eeg_like || id.repetition.is_some() != eeg_like {
                return Err(Error::Data(format!(
                    "{} record for segment {} has inconsistent subject/repetition fields",
                    self.modality.as_str(),
                    id.segment
                )));
            }
        }
        Ok(())
    }
}

/// Audio and EEG sides of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedCorpus {
    pub manifest: DatasetManifest,
    pub audio: FeatureSet,
    pub eeg: FeatureSet,
}

impl PairedCorpus {
    pub fn new(manifest: DatasetManifest, audio: FeatureSet, eeg: FeatureSet) -> Result<Self> {
        manifest.validate()?;
        audio.validate(&manifest)?;
        eeg.validate(&manifest)?;
        let mut seen = vec![false; manifest.n_segments];
        for id in &audio.ids {
            if std::mem::replace(&mut seen[id.segment], true) {
                return Err(Error::Data(format!("duplicate audio record for segment {}", id.segment)));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Data(format!("no audio record for segment {missing}")));
        }
        Ok(PairedCorpus {
            manifest,
            audio,
            eeg,
        })
    }

    /// Row of the audio matrix holding each segment.
    pub fn audio_row_of_segment(&self) -> Vec<usize> {
        let mut rows = vec![0; self.manifest.n_segments];
        for (i, id) in self.audio.ids.iter().enumerate() {
            rows[id.segment] = i;
        }
        rows
    }

    /// EEG rows with their paired audio appended (EEG first).
    pub fn fused(&self) -> FeatureSet {
        let rows = self.audio_row_of_segment();
        let (de, da) = (self.eeg.dim(), self.audio.dim());
        let mut features = Array2::zeros((self.eeg.len(), de + da));
        for (i, id) in self.eeg.ids.iter().enumerate() {
            let mut row = features.row_mut(i);
            row.slice_mut(ndarray::s![..de]).assign(&self.eeg.features.row(i));
            row.slice_mut(ndarray::s![de..])
                .assign(&self.audio.features.row(rows[id.segment]));
        }
        FeatureSet {
            modality: Modality::Fused,
            ids: self.eeg.ids.clone(),
            features,
        }
    }
}

/// Latent-factor generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub latent_dim_shared: usize,
    pub latent_dim_audio_only: usize,
    pub latent_dim_eeg_only: usize,
    pub sigma_audio: f64,
    pub sigma_eeg: f64,
    pub sigma_subject: f64,
    /// Standard deviation of the category means, in units of the
    /// within-category latent spread.
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            latent_dim_shared: 1,
            latent_dim_audio_only: 16,
            latent_dim_eeg_only: 16,
            sigma_audio: 1.0,
            sigma_eeg: 5.0,
            sigma_subject: 1.0,
            class_separation: 0.5,
            seed: 0x5eed,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim_shared == 0 || self.latent_dim_audio_only == 0 || self.latent_dim_eeg_only == 0 {
            return Err(Error::Config("latent dimensions must be at least 1".into()));
        }
        for (name, v) in [
            ("sigma_audio", self.sigma_audio),
            ("sigma_eeg", self.sigma_eeg),
            ("sigma_subject", self.sigma_subject),
            ("class_separation", self.class_separation),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite value ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

fn normal_vector(rng: &mut impl Rng, len: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_simple_fn(len, || scale * rng.sample::<f64, _>(StandardNormal))
}

fn mix(map: &Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let k = a.len();
    map.slice(ndarray::s![.., ..k]).dot(&a) + map.slice(ndarray::s![.., k..]).dot(&b)
}

/// Draws a synthetic paired corpus.
///
/// Each segment gets a latent `z = [z_shared; z_audio; z_eeg]` around its
/// category mean. Audio is `A·[z_shared; z_audio] + noise`; every EEG record
/// is `B·[z_shared; z_eeg] + u_subject + noise`. Records are ordered by
/// segment, then subject, then repetition.
pub fn generate_synthetic(manifest: &DatasetManifest, cfg: &GenConfig) -> Result<PairedCorpus> {
    manifest.validate()?;
    cfg.validate()?;
    let mut rng = seeds::rng(cfg.seed);
    let (ds, da, de) = (cfg.latent_dim_shared, cfg.latent_dim_audio_only, cfg.latent_dim_eeg_only);
    let latent = ds + da + de;

    let means = normal_matrix(&mut rng, manifest.n_categories(), latent, cfg.class_separation);
    let audio_map = normal_matrix(&mut rng, manifest.audio_dim, ds + da, (1.0 / (ds + da) as f64).sqrt());
    let eeg_map = normal_matrix(&mut rng, manifest.eeg_dim, ds + de, (1.0 / (ds + de) as f64).sqrt());
    let subjects = normal_matrix(&mut rng, manifest.n_subjects, manifest.eeg_dim, cfg.sigma_subject);

    let mut audio = Array2::zeros((manifest.n_segments, manifest.audio_dim));
    let mut audio_ids = Vec::with_capacity(manifest.n_segments);
    let mut eeg_clean = Array2::zeros((manifest.n_segments, manifest.eeg_dim));
    for s in 0..manifest.n_segments {
        let category = manifest.category_of(s);
        let z = &means.row(category) + &normal_vector(&mut rng, latent, 1.0);
        let shared = z.slice(ndarray::s![..ds]);
        let a = mix(&audio_map, shared, z.slice(ndarray::s![ds..ds + da]));
        let noise = normal_vector(&mut rng, manifest.audio_dim, cfg.sigma_audio);
        audio.row_mut(s).assign(&(a + noise));
        eeg_clean
            .row_mut(s)
            .assign(&mix(&eeg_map, shared, z.slice(ndarray::s![ds + da..])));
        audio_ids.push(RecordId {
            segment: s,
            subject: None,
            repetition: None,
            category,
        });
    }

    let mut eeg = Array2::zeros((manifest.n_eeg_records(), manifest.eeg_dim));
    let mut eeg_ids = Vec::with_capacity(manifest.n_eeg_records());
    let mut row = 0;
    for s in 0..manifest.n_segments {
        for subject in 0..manifest.n_subjects {
            for rep in 0..manifest.n_reps {
                let noise = normal_vector(&mut rng, manifest.eeg_dim, cfg.sigma_eeg);
                eeg.row_mut(row)
                    .assign(&(&eeg_clean.row(s) + &subjects.row(subject) + noise));
                eeg_ids.push(RecordId {
                    segment: s,
                    subject: Some(subject),
                    repetition: Some(rep),
                    category: manifest.category_of(s),
                });
                row += 1;
            }
        }
    }

    Ok(PairedCorpus {
        manifest: manifest.clone(),
        audio: FeatureSet::new(Modality::Audio, audio_ids, audio)?,
        eeg: FeatureSet::new(Modality::Eeg, eeg_ids, eeg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn small() -> DatasetManifest {
        DatasetManifest::build(names(4), 16, 3, 2, 24, 12).unwrap()
    }

    #[test]
    fn default_manifest_counts() {
        let m = DatasetManifest::default();
        assert_eq!(m.n_categories(), 8);
        assert_eq!(m.n_eeg_records(), 7200);
        assert_eq!(m.dim(Modality::Fused), 1664);
        assert_eq!(m.category_of(19), 0);
        assert_eq!(m.category_of(20), 1);
        assert_eq!(m.category_of(159), 7);
    }

    #[test]
    fn minimal_manifest() {
        let m = DatasetManifest::build(names(1), 1, 1, 1, 2, 2).unwrap();
        assert_eq!(m.n_eeg_records(), 1);
    }

    #[test]
    fn indivisible_segments_rejected() {
        let err = DatasetManifest::build(names(8), 100, 9, 5, 1152, 512).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(DatasetManifest::build(names(2), 4, 0, 1, 2, 2).is_err());
    }

    #[test]
    fn generator_counts_and_dims() {
        let m = small();
        let c = generate_synthetic(&m, &GenConfig::default()).unwrap();
        assert_eq!(c.audio.len(), 16);
        assert_eq!(c.eeg.len(), 16 * 3 * 2);
        assert_eq!(c.audio.dim(), 24);
        assert_eq!(c.eeg.dim(), 12);
        c.audio.validate(&m).unwrap();
        c.eeg.validate(&m).unwrap();
        let fused = c.fused();
        assert_eq!(fused.dim(), 36);
        assert_eq!(fused.features.row(7).slice(ndarray::s![..12]), c.eeg.features.row(7));
        let seg = c.eeg.ids[7].segment;
        assert_eq!(fused.features.row(7).slice(ndarray::s![12..]), c.audio.features.row(seg));
    }

    #[test]
    fn noiseless_eeg_repeats_exactly() {
        let cfg = GenConfig {
            sigma_eeg: 0.0,
            sigma_subject: 0.0,
            ..GenConfig::default()
        };
        let c = generate_synthetic(&small(), &cfg).unwrap();
        for s in 0..16 {
            let rows: Vec<_> = (0..6).map(|r| c.eeg.features.row(s * 6 + r)).collect();
            assert!(rows.iter().all(|r| *r == rows[0]));
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_synthetic(&small(), &GenConfig::default()).unwrap();
        let b = generate_synthetic(&small(), &GenConfig::default()).unwrap();
        assert_eq!(a, b);
        let other = GenConfig {
            seed: 1,
            ..GenConfig::default()
        };
        assert_ne!(a, generate_synthetic(&small(), &other).unwrap());
    }

    #[test]
    fn noiseless_audio_clusters_by_category() {
        let m = DatasetManifest::default();
        let cfg = GenConfig {
            sigma_audio: 0.0,
            sigma_eeg: 0.0,
            ..GenConfig::default()
        };
        let m = DatasetManifest { n_subjects: 1, n_reps: 1, ..m };
        let c = generate_synthetic(&m, &cfg).unwrap();
        let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
        for i in 0..c.audio.len() {
            for j in (i + 1)..c.audio.len() {
                let d = (&c.audio.features.row(i) - &c.audio.features.row(j))
                    .mapv(|v| v * v)
                    .sum()
                    .sqrt();
                if c.audio.ids[i].category == c.audio.ids[j].category {
                    within += d;
                    nw += 1;
                } else {
                    across += d;
                    na += 1;
                }
            }
        }
        assert!(within / nw as f64 > 0.0);
        assert!(within / (nw as f64) < across / (na as f64));
    }

    #[test]
    fn gen_config_validation() {
        let bad = GenConfig {
            sigma_eeg: -1.0,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GenConfig {
            latent_dim_shared: 0,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn corpus_rejects_mislabelled_records() {
        let m = small();
        let mut c = generate_synthetic(&m, &GenConfig::default()).unwrap();
        c.audio.ids[0].category = 3;
        assert!(PairedCorpus::new(m, c.audio, c.eeg).is_err());
    }
}
