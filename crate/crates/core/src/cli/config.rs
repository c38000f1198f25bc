use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{SoftmaxConfig, SvmConfig};
use crate::corr::DccaConfig;
use crate::dataset::{DatasetManifest, GenConfig};
use crate::error::{Error, Result};
use crate::retrieval::Similarity;
use crate::seeds::{self, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// PCA width ahead of the SVM, clipped to what each training set allows.
    pub pca_dim: usize,
    pub svm: SvmConfig,
    /// Adds a softmax head on standardized raw EEG features as a fourth scenario.
    pub eeg_softmax: bool,
    pub softmax: SoftmaxConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            pca_dim: 20,
            svm: SvmConfig::default(),
            eeg_softmax: false,
            softmax: SoftmaxConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelationConfig {
    pub cca_ridge: f64,
    pub dcca: DccaConfig,
    pub cdcca: DccaConfig,
    /// Component counts kept for retrieval.
    pub ks: Vec<usize>,
    pub similarity: Similarity,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        let dcca = DccaConfig {
            weight_decay: 0.03,
            ..DccaConfig::default()
        };
        CorrelationConfig {
            cca_ridge: 1e-4,
            cdcca: DccaConfig {
                category_pair_prob: 0.5,
                ..dcca.clone()
            },
            dcca,
            ks: vec![10, 15, 20, 25, 30, 35, 40],
            similarity: Similarity::Cosine,
        }
    }
}

/// Everything one experiment run depends on.
///
/// Seeds inside the sub-configurations are ignored: every stage seed is
/// derived from `master_seed` (see [`ExperimentConfig::resolved`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub manifest: DatasetManifest,
    pub generator: GenConfig,
    pub n_folds: usize,
    /// Test folds to evaluate; all of them when absent.
    pub folds: Option<Vec<usize>>,
    pub classifier: ClassifierConfig,
    pub correlation: CorrelationConfig,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Read `manifest.json`, `audio.fmtx` and `eeg.fmtx` from here instead of generating.
    pub features_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifest: DatasetManifest::default(),
            generator: GenConfig::default(),
            n_folds: 10,
            folds: None,
            classifier: ClassifierConfig::default(),
            correlation: CorrelationConfig::default(),
            output_dir: PathBuf::from("results"),
            master_seed: 20180707,
            features_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad experiment config: {e}")))
    }

    /// Test folds this run evaluates, in ascending order.
    pub fn test_folds(&self) -> Vec<usize> {
        match &self.folds {
            Some(f) => {
                let mut f = f.clone();
                f.sort_unstable();
                f.dedup();
                f
            }
            None => (0..self.n_folds).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.manifest.validate()?;
        self.generator.validate()?;
        if self.n_folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.n_folds)));
        }
        let folds = self.test_folds();
        if folds.is_empty() {
            return Err(Error::Config("no test folds selected".into()));
        }
        if let Some(f) = folds.iter().find(|&&f| f >= self.n_folds) {
            return Err(Error::Config(format!("test fold {f} ≥ n_folds {}", self.n_folds)));
        }
        if self.classifier.pca_dim == 0 {
            return Err(Error::Config("pca_dim must be positive".into()));
        }
        let c = &self.correlation;
        if c.ks.is_empty() || c.ks.contains(&0) {
            return Err(Error::Config("ks must be non-empty and positive".into()));
        }
        if !(c.cca_ridge >= 0.0) {
            return Err(Error::Config("cca_ridge must be ≥ 0".into()));
        }
        for (name, d) in [("dcca", &c.dcca), ("cdcca", &c.cdcca)] {
            d.validate()?;
            if d.output_dim < self.max_k() {
                return Err(Error::Config(format!(
                    "{name} output_dim {} is below the largest k {}",
                    d.output_dim,
                    self.max_k()
                )));
            }
        }
        if c.cdcca.category_pair_prob == 0.0 {
            log::warn!("cdcca.category_pair_prob is 0; C-DCCA reduces to DCCA");
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        self.correlation.ks.iter().copied().max().unwrap_or(0)
    }

    /// Copy with every stage seed derived from `master_seed`.
    ///
    /// Per-fold stages (SVM, softmax, both DCCA variants) get their fold
    /// mixed in at run time through [`seeds::derive`].
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        let m = self.master_seed;
        c.generator.seed = seeds::derive(m, Stage::Generate, 0);
        c.classifier.svm.seed = seeds::derive(m, Stage::Svm, 0);
        c.classifier.softmax.seed = seeds::derive(m, Stage::Softmax, 0);
        c.correlation.dcca.seed = seeds::derive(m, Stage::Dcca, 0);
        c.correlation.cdcca.seed = seeds::derive(m, Stage::Cdcca, 0);
        c
    }

    /// Seed of the fold plan.
    pub fn fold_seed(&self) -> u64 {
        seeds::derive(self.master_seed, Stage::Folds, 0)
    }

    /// SHA-256 of the resolved configuration, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.resolved();
        c.output_dir = PathBuf::new();
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
