//! Browser demo: generate a small paired corpus, look at it through PCA,
//! classify it, and query a CCA shared space. Results cross the wasm
//! boundary as JSON strings.

use eeg_audio::cli::{fit_cca, paired_split, pca_svm_predict, ExperimentConfig, PairedSplit};
use eeg_audio::classifiers::evaluate;
use eeg_audio::corr::{CcaModel, SharedSpace, Side};
use eeg_audio::dataset::{generate_synthetic, stratified_folds, DatasetManifest, FeatureSet, GenConfig, PairedCorpus};
use eeg_audio::numlin::PcaModel;
use eeg_audio::retrieval::{chance_mrr1, fold_metrics, rank_gallery, Similarity};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const CATEGORIES: [&str; 4] = ["dog", "rain", "engine", "speech"];
const CCA_DIM: usize = 8;

#[derive(Debug, Serialize)]
pub struct Scatter {
    pub categories: Vec<String>,
    /// `[x, y, category]` per record.
    pub points: Vec<(f64, f64, usize)>,
    pub explained: f64,
}

#[derive(Debug, Serialize)]
pub struct Accuracies {
    pub audio: f64,
    pub eeg: f64,
    pub fused: f64,
    pub test_records: usize,
}

#[derive(Debug, Serialize)]
pub struct Hit {
    pub segment: usize,
    pub category: String,
    pub score: f64,
    pub relevant: bool,
}

#[derive(Debug, Serialize)]
pub struct Retrieval {
    pub query_segment: usize,
    pub query_category: String,
    pub rank_of_match: usize,
    pub hits: Vec<Hit>,
    pub correlations: Vec<f64>,
    pub fold_mrr1: f64,
    pub fold_map: f64,
    pub chance_mrr1: f64,
}

/// A generated corpus with its held-out fold and a CCA model fit on the rest.
#[wasm_bindgen]
pub struct Demo {
    corpus: PairedCorpus,
    split: PairedSplit,
    cca: CcaModel,
    cfg: ExperimentConfig,
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

impl Demo {
    pub fn build(seed: u64, sigma_eeg: f64, class_separation: f64) -> eeg_audio::Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.manifest = DatasetManifest::build(CATEGORIES.iter().map(|s| s.to_string()).collect(), 48, 4, 3, 64, 48)?;
        cfg.n_folds = 4;
        cfg.classifier.pca_dim = 10;
        cfg.master_seed = seed;
        let gen = GenConfig {
            sigma_eeg,
            class_separation,
            latent_dim_audio_only: 6,
            latent_dim_eeg_only: 6,
            ..cfg.resolved().generator
        };
        gen.validate()?;
        let corpus = generate_synthetic(&cfg.manifest, &gen)?;
        let plan = stratified_folds(&corpus.manifest, cfg.n_folds, cfg.fold_seed())?;
        let split = paired_split(&corpus, &plan, 0)?;
        let cca = fit_cca(&split, CCA_DIM, cfg.correlation.cca_ridge)?;
        Ok(Demo { corpus, split, cca, cfg })
    }

    fn set(&self, modality: &str) -> eeg_audio::Result<FeatureSet> {
        match modality {
            "audio" => Ok(self.corpus.audio.clone()),
            "eeg" => Ok(self.corpus.eeg.clone()),
            "fused" => Ok(self.corpus.fused()),
            other => Err(eeg_audio::Error::Config(format!("unknown modality {other}"))),
        }
    }

    /// First two principal components of one modality.
    pub fn scatter_points(&self, modality: &str) -> eeg_audio::Result<Scatter> {
        let set = self.set(modality)?;
        let pca = PcaModel::fit(set.features.view(), 2)?;
        let y = pca.transform(set.features.view())?;
        let total: f64 = set.features.var_axis(ndarray::Axis(0), 1.0).sum();
        let kept: f64 = y.var_axis(ndarray::Axis(0), 1.0).sum();
        Ok(Scatter {
            categories: self.corpus.manifest.categories.clone(),
            points: y
                .rows()
                .into_iter()
                .zip(&set.ids)
                .map(|(r, id)| (r[0], r[1], id.category))
                .collect(),
            explained: kept / total,
        })
    }

    /// Held-out accuracy of PCA + SVM on each modality.
    pub fn accuracies(&self) -> eeg_audio::Result<Accuracies> {
        let fused = self.corpus.fused();
        let plan = stratified_folds(&self.corpus.manifest, self.cfg.n_folds, self.cfg.fold_seed())?;
        let n = self.corpus.manifest.n_categories();
        let mut acc = [0.0; 3];
        let mut test_records = 0;
        for (i, set) in [&self.corpus.audio, &self.corpus.eeg, &fused].into_iter().enumerate() {
            let (train, test) = eeg_audio::dataset::split(set, &plan, 0)?;
            let pred = pca_svm_predict(&train, &test, n, &self.cfg, self.cfg.master_seed)?;
            acc[i] = evaluate(&test.labels(), &pred, n)?.0;
            test_records = test.len();
        }
        Ok(Accuracies {
            audio: acc[0],
            eeg: acc[1],
            fused: acc[2],
            test_records,
        })
    }

    /// Ranks the held-out audio gallery for one held-out EEG record using
    /// the first `k` shared components.
    pub fn retrieval(&self, query: usize, k: usize) -> eeg_audio::Result<Retrieval> {
        let eeg = &self.split.eeg_test;
        let audio = &self.split.audio_test;
        if query >= eeg.len() || k == 0 || k > self.cca.n_components() {
            return Err(eeg_audio::Error::Config(format!(
                "query must be below {} and k in [1, {}]",
                eeg.len(),
                self.cca.n_components()
            )));
        }
        let ep = self.cca.project(eeg.features.view(), Side::X)?;
        let ap = self.cca.project(audio.features.view(), Side::Y)?;
        let cols = ndarray::s![.., ..k];
        let list = rank_gallery(ep.slice(cols).row(query), ap.slice(cols), Similarity::Cosine)?;
        let target = eeg.ids[query].segment;
        let names = &self.corpus.manifest.categories;
        let hits: Vec<Hit> = list
            .ids
            .iter()
            .zip(&list.scores)
            .map(|(&g, &score)| Hit {
                segment: audio.ids[g].segment,
                category: names[audio.ids[g].category].clone(),
                score,
                relevant: audio.ids[g].segment == target,
            })
            .collect();
        let (fold_mrr1, fold_map) = fold_metrics(ep.view(), ap.view(), eeg, audio, &[k], Similarity::Cosine)?[0];
        Ok(Retrieval {
            query_segment: target,
            query_category: names[eeg.ids[query].category].clone(),
            rank_of_match: hits.iter().position(|h| h.relevant).map_or(0, |p| p + 1),
            hits,
            correlations: self.cca.correlations.to_vec(),
            fold_mrr1,
            fold_map,
            chance_mrr1: chance_mrr1(audio.len()),
        })
    }

    pub fn held_out_queries(&self) -> usize {
        self.split.eeg_test.len()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, sigma_eeg: f64, class_separation: f64) -> Result<Demo, JsError> {
        Demo::build(seed as u64, sigma_eeg, class_separation).map_err(js_err)
    }

    pub fn scatter(&self, modality: &str) -> Result<String, JsError> {
        let s = self.scatter_points(modality).map_err(js_err)?;
        serde_json::to_string(&s).map_err(js_err)
    }

    pub fn classify(&self) -> Result<String, JsError> {
        let a = self.accuracies().map_err(js_err)?;
        serde_json::to_string(&a).map_err(js_err)
    }

    pub fn retrieve(&self, query: usize, k: usize) -> Result<String, JsError> {
        let r = self.retrieval(query, k).map_err(js_err)?;
        serde_json::to_string(&r).map_err(js_err)
    }

    #[wasm_bindgen(getter)]
    pub fn queries(&self) -> usize {
        self.held_out_queries()
    }

    #[wasm_bindgen(getter)]
    pub fn components(&self) -> usize {
        self.cca.n_components()
    }
}
