use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ndarray::{Array2, Axis};
use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::{Method, MethodReport, ReportBundle, RunMetadata, Scenario, ScenarioResult};
use crate::classifiers::{evaluate, Classifier, ConfusionMatrix, SoftmaxModel, SvmModel};
use crate::corr::{CcaModel, DccaConfig, DccaModel, SharedSpace, Side};
use crate::dataset::io::{load_corpus, write_json};
use crate::dataset::{generate_synthetic, split, stratified_folds, FeatureSet, FoldPlan, PairedCorpus};
use crate::error::{Error, Result};
use crate::numlin::{column_means, PcaModel};
use crate::retrieval::{fold_metrics, RetrievalReport};
use crate::seeds::{self, Stage};

/// The corpus a run works on: loaded from `features_dir` or generated.
pub fn prepare_corpus(cfg: &ExperimentConfig) -> Result<PairedCorpus> {
    match &cfg.features_dir {
        Some(dir) => {
            let corpus = load_corpus(dir)?;
            log::info!(
                "loaded {} audio and {} EEG records from {}",
                corpus.audio.len(),
                corpus.eeg.len(),
                dir.display()
            );
            Ok(corpus)
        }
        None => generate_synthetic(&cfg.manifest, &cfg.resolved().generator),
    }
}

/// PCA fit on `train`, SVM on the projections; predictions for `test`.
pub fn pca_svm_predict(train: &FeatureSet, test: &FeatureSet, n_classes: usize, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<usize>> {
    let k = cfg.classifier.pca_dim.min(train.len() - 1).min(train.dim());
    let pca = PcaModel::fit(train.features.view(), k)?;
    let x = pca.transform(train.features.view())?;
    let svm_cfg = crate::classifiers::SvmConfig {
        seed,
        ..cfg.classifier.svm.clone()
    };
    let model = SvmModel::fit(x.view(), &train.labels(), n_classes, &svm_cfg)?;
    model.predict(pca.transform(test.features.view())?.view())
}

fn standardize(train: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    let mean = column_means(train.view());
    let std = train.std_axis(Axis(0), 1.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
    (x - &mean) / &std
}

/// Softmax on train-standardized raw features.
pub fn softmax_predict(train: &FeatureSet, test: &FeatureSet, n_classes: usize, cfg: &ExperimentConfig, seed: u64) -> Result<Vec<usize>> {
    let x = standardize(&train.features, &train.features);
    let sm_cfg = crate::classifiers::SoftmaxConfig {
        seed,
        ..cfg.classifier.softmax.clone()
    };
    let model = SoftmaxModel::fit(x.view(), &train.labels(), n_classes, &sm_cfg)?;
    model.predict(standardize(&train.features, &test.features).view())
}

/// Train/test sides of one fold with the EEG → audio pairing of the train side.
#[derive(Debug, Clone)]
pub struct PairedSplit {
    pub eeg_train: FeatureSet,
    pub eeg_test: FeatureSet,
    pub audio_train: FeatureSet,
    pub audio_test: FeatureSet,
    /// Row of `audio_train` paired with each row of `eeg_train`.
    pub pair_index: Vec<usize>,
}

pub fn paired_split(corpus: &PairedCorpus, plan: &FoldPlan, fold: usize) -> Result<PairedSplit> {
    let (eeg_train, eeg_test) = split(&corpus.eeg, plan, fold)?;
    let (audio_train, audio_test) = split(&corpus.audio, plan, fold)?;
    let mut row = vec![usize::MAX; corpus.manifest.n_segments];
    for (i, id) in audio_train.ids.iter().enumerate() {
        row[id.segment] = i;
    }
    let pair_index = eeg_train
        .ids
        .iter()
        .map(|id| match row[id.segment] {
            usize::MAX => Err(Error::Data(format!("no training audio for segment {}", id.segment))),
            r => Ok(r),
        })
        .collect::<Result<_>>()?;
    Ok(PairedSplit {
        eeg_train,
        eeg_test,
        audio_train,
        audio_test,
        pair_index,
    })
}

/// Classical CCA between EEG (X) and paired audio (Y) of the train side.
pub fn fit_cca(split: &PairedSplit, k: usize, ridge: f64) -> Result<CcaModel> {
    let y = split.audio_train.features.select(Axis(0), &split.pair_index);
    CcaModel::fit(split.eeg_train.features.view(), y.view(), k, ridge, ridge)
}

/// DCCA, or C-DCCA when `cfg.category_pair_prob > 0`, on the train side.
pub fn fit_dcca(split: &PairedSplit, cfg: &DccaConfig) -> Result<DccaModel> {
    let labels = split.eeg_train.labels();
    DccaModel::fit_indexed(
        split.eeg_train.features.view(),
        split.audio_train.features.view(),
        &split.pair_index,
        cfg,
        (cfg.category_pair_prob > 0.0).then_some(labels.as_slice()),
    )
}

/// MRR1/MAP of a fitted space on the test side of `split`.
pub fn evaluate_space(model: &dyn SharedSpace, split: &PairedSplit, cfg: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let e = model.project(split.eeg_test.features.view(), Side::X)?;
    let a = model.project(split.audio_test.features.view(), Side::Y)?;
    fold_metrics(
        e.view(),
        a.view(),
        &split.eeg_test,
        &split.audio_test,
        &cfg.correlation.ks,
        cfg.correlation.similarity,
    )
}

#[derive(Debug, Clone, Serialize)]
struct TrainingLog {
    method: Method,
    fold: usize,
    loss: Vec<f64>,
}

struct ScenarioAcc {
    scenario: Scenario,
    fold_accuracies: Vec<f64>,
    confusion: ConfusionMatrix,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs every scenario and method over the selected folds without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<(ReportBundle, Vec<(Method, usize, Vec<f64>)>)> {
    cfg.validate()?;
    let started = unix_now();
    let rc = cfg.resolved();
    let corpus = prepare_corpus(cfg)?;
    let categories = corpus.manifest.categories.clone();
    let n_classes = categories.len();
    let plan = stratified_folds(&corpus.manifest, cfg.n_folds, cfg.fold_seed())?;
    let fused = corpus.fused();
    let m = cfg.master_seed;

    let mut scenarios: Vec<ScenarioAcc> = Scenario::REQUIRED
        .iter()
        .copied()
        .chain(cfg.classifier.eeg_softmax.then_some(Scenario::EegSoftmax))
        .map(|scenario| ScenarioAcc {
            scenario,
            fold_accuracies: Vec::new(),
            confusion: ConfusionMatrix::new(n_classes),
        })
        .collect();
    let mut reports: Vec<(Method, RetrievalReport)> = Method::ALL
        .iter()
        .map(|&method| (method, RetrievalReport::new(&cfg.correlation.ks)))
        .collect();
    let mut logs = Vec::new();

    for fold in cfg.test_folds() {
        let clock = Instant::now();
        let f = fold as u64;
        for acc in &mut scenarios {
            let svm_seed = seeds::derive(m, Stage::Svm, f);
            let stage = acc.scenario.as_str();
            let (y_true, y_pred) = (|| -> Result<_> {
                let source = match acc.scenario {
                    Scenario::Audio => &corpus.audio,
                    Scenario::Eeg | Scenario::EegSoftmax => &corpus.eeg,
                    Scenario::Fused => &fused,
                };
                let (train, test) = split(source, &plan, fold)?;
                let pred = match acc.scenario {
                    Scenario::EegSoftmax => {
                        softmax_predict(&train, &test, n_classes, cfg, seeds::derive(m, Stage::Softmax, f))?
                    }
                    _ => pca_svm_predict(&train, &test, n_classes, cfg, svm_seed)?,
                };
                Ok((test.labels(), pred))
            })()
            .map_err(|e| e.in_stage(stage, fold))?;
            let (a, cm) = evaluate(&y_true, &y_pred, n_classes)?;
            acc.fold_accuracies.push(a);
            acc.confusion.merge(&cm)?;
        }

        let split = paired_split(&corpus, &plan, fold).map_err(|e| e.in_stage("pairing", fold))?;
        for (method, report) in &mut reports {
            let metrics = match method {
                Method::Cca => fit_cca(&split, cfg.max_k(), cfg.correlation.cca_ridge)
                    .and_then(|model| evaluate_space(&model, &split, cfg)),
                Method::Dcca | Method::Cdcca => {
                    let (base, stage) = match method {
                        Method::Dcca => (&rc.correlation.dcca, Stage::Dcca),
                        _ => (&rc.correlation.cdcca, Stage::Cdcca),
                    };
                    let dcfg = DccaConfig {
                        seed: seeds::derive(m, stage, f),
                        ..base.clone()
                    };
                    fit_dcca(&split, &dcfg).and_then(|model| {
                        logs.push((*method, fold, model.loss_trace.clone()));
                        evaluate_space(&model, &split, cfg)
                    })
                }
            }
            .map_err(|e| e.in_stage(method.as_str(), fold))?;
            report.add_fold(&metrics)?;
        }
        log::info!(
            "fold {fold}: {} in {:.1}s",
            scenarios
                .iter()
                .map(|s| format!("{} {:.3}", s.scenario.as_str(), s.fold_accuracies.last().unwrap()))
                .collect::<Vec<_>>()
                .join(", "),
            clock.elapsed().as_secs_f64()
        );
    }

    let bundle = ReportBundle {
        categories,
        scenarios: scenarios
            .iter()
            .map(|s| ScenarioResult::new(s.scenario, s.fold_accuracies.clone(), &s.confusion))
            .collect(),
        retrieval: reports
            .into_iter()
            .map(|(method, report)| MethodReport { method, report })
            .collect(),
        metadata: RunMetadata {
            master_seed: cfg.master_seed,
            config_hash: cfg.hash(),
            folds: cfg.test_folds(),
            started_unix: started,
            finished_unix: unix_now(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        files: Vec::new(),
    };
    Ok((bundle, logs))
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAINING_LOG_FILE: &str = "training_log.json";

fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    files.push(name.to_string());
    Ok(())
}

/// Runs the experiment and writes confusion CSVs, retrieval CSVs, the DCCA
/// training log and `summary.json` into `cfg.output_dir`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (mut bundle, logs) = execute(cfg)?;

    let mut files = Vec::new();
    for s in &bundle.scenarios {
        let csv = s.confusion_matrix()?.to_csv(&bundle.categories);
        write_text(dir, &format!("confusion_{}.csv", s.scenario.as_str()), &csv, &mut files)?;
    }
    for r in &bundle.retrieval {
        write_text(dir, &format!("retrieval_{}.csv", r.method.as_str()), &r.report.to_csv(), &mut files)?;
    }
    let logs: Vec<TrainingLog> = logs
        .into_iter()
        .map(|(method, fold, loss)| TrainingLog { method, fold, loss })
        .collect();
    write_json(&dir.join(TRAINING_LOG_FILE), &logs)?;
    files.push(TRAINING_LOG_FILE.to_string());
    files.push(SUMMARY_FILE.to_string());
    bundle.files = files;
    write_json(&dir.join(SUMMARY_FILE), &bundle)?;
    Ok(bundle)
}
