//! `eegaudio` subcommands. Every stage reads and writes the on-disk formats,
//! so stages can be chained through files or replaced by `run`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::ExperimentConfig;
use super::pipeline::{evaluate_space, fit_cca, fit_dcca, paired_split, run_pipeline, SUMMARY_FILE};
use super::report::{make_report, ReportBundle};
use crate::classifiers::{
    evaluate, Classifier, KernelChoice, SoftmaxConfig, SoftmaxModel, SvmConfig, SvmModel,
};
use crate::corr::{CcaModel, DccaModel, SharedSpace};
use crate::dataset::io::{load_corpus, load_features, read_json, save_corpus, write_features, write_json, Persist};
use crate::dataset::{generate_synthetic, split, stratified_folds, FeatureSet, FoldPlan, PairedCorpus};
use crate::error::{Error, Result};
use crate::numlin::PcaModel;
use crate::retrieval::{RetrievalReport, Similarity};

/// Environment variable holding the log filter (e.g. `debug`).
pub const LOG_ENV: &str = "EEGAUDIO_LOG";

#[derive(Debug, Parser)]
#[command(name = "eegaudio", version, about = "Audio/EEG classification and cross-modal retrieval experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic paired corpus directory.
    Gen(GenArgs),
    /// Write a stratified fold plan for a corpus.
    Split(SplitArgs),
    /// Fit PCA on a feature file and optionally write the projections.
    Pca(PcaArgs),
    /// Train a classifier and evaluate it on the held-out fold.
    Train(TrainArgs),
    /// Concatenate each EEG record with its segment's audio.
    Fuse(FuseArgs),
    /// Fit classical CCA on one fold's training side.
    Cca(CcaArgs),
    /// Fit deep CCA on one fold's training side.
    Dcca(DccaArgs),
    /// Fit category-based deep CCA on one fold's training side.
    Cdcca(DccaArgs),
    /// Evaluate a shared-space model on one fold's held-out side.
    Retrieve(RetrieveArgs),
    /// Run the whole experiment.
    Run(RunArgs),
    /// Print the tables of a finished run.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Experiment configuration (JSON); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArg {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FoldArg {
    /// Fold plan JSON written by `split`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Held-out fold.
    #[arg(long, default_value_t = 0)]
    pub test_fold: usize,
}

#[derive(Debug, Args)]
pub struct OptionalFoldArg {
    /// Fit on the training side of this plan only.
    #[arg(long, requires = "test_fold")]
    pub plan: Option<PathBuf>,
    #[arg(long, requires = "plan")]
    pub test_fold: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Output corpus directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Feature file (`.fmtx` with its `.csv` sidecar).
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[command(flatten)]
    pub fold: OptionalFoldArg,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Projected features of every record.
    #[arg(long)]
    pub transformed_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierKind {
    Svm,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Rbf,
    Linear,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub fold: FoldArg,
    #[arg(long, value_enum, default_value_t = ClassifierKind::Svm)]
    pub classifier: ClassifierKind,
    #[arg(long, value_enum, default_value_t = KernelKind::Rbf)]
    pub kernel: KernelKind,
    /// RBF width; defaults to 1 / (dim · mean feature variance).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub c_reg: f64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corpus manifest supplying category names for the confusion CSV.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub model_out: PathBuf,
    #[arg(long)]
    pub confusion_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CcaArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub fold: FoldArg,
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub ridge: f64,
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DccaArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub fold: FoldArg,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Category re-pairing probability.
    #[arg(long)]
    pub pair_prob: Option<f64>,
    #[arg(long)]
    pub model_out: PathBuf,
    /// Per-epoch loss as JSON.
    #[arg(long)]
    pub log_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Cca,
    Dcca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Cosine,
    Euclidean,
}

impl From<MetricKind> for Similarity {
    fn from(m: MetricKind) -> Self {
        match m {
            MetricKind::Cosine => Similarity::Cosine,
            MetricKind::Euclidean => Similarity::Euclidean,
        }
    }
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub fold: FoldArg,
    #[arg(long)]
    pub model: PathBuf,
    /// `dcca` also covers C-DCCA models.
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 15, 20, 25, 30, 35, 40])]
    pub ks: Vec<usize>,
    #[arg(long, value_enum, default_value_t = MetricKind::Cosine)]
    pub metric: MetricKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Evaluate only these test folds.
    #[arg(long, value_delimiter = ',')]
    pub test_folds: Option<Vec<usize>>,
    /// Use the corpus in this directory instead of generating one.
    #[arg(long)]
    pub features_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Epochs for both deep CCA variants.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricKind>,
    /// Also report a softmax head on raw EEG features.
    #[arg(long)]
    pub eeg_softmax: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory holding `summary.json`.
    #[arg(long)]
    pub dir: PathBuf,
}

fn load_plan(path: &Path, corpus: &PairedCorpus) -> Result<FoldPlan> {
    let plan: FoldPlan = read_json(path)?;
    plan.validate(&corpus.manifest)?;
    Ok(plan)
}

fn train_side(set: &FeatureSet, fold: &OptionalFoldArg) -> Result<FeatureSet> {
    match (&fold.plan, fold.test_fold) {
        (Some(p), Some(f)) => {
            let plan: FoldPlan = read_json(p)?;
            Ok(split(set, &plan, f)?.0)
        }
        _ => Ok(set.clone()),
    }
}

fn category_names(manifest: Option<&Path>, n: usize) -> Result<Vec<String>> {
    match manifest {
        Some(p) => {
            let m: crate::dataset::DatasetManifest = read_json(p)?;
            if m.categories.len() < n {
                return Err(Error::Data(format!("manifest names {} categories, labels need {n}", m.categories.len())));
            }
            Ok(m.categories)
        }
        None => Ok((0..n).map(|c| format!("category_{c}")).collect()),
    }
}

fn print_metrics(title: &str, ks: &[usize], metrics: &[(f64, f64)], out: Option<&Path>) -> Result<()> {
    let mut report = RetrievalReport::new(ks);
    report.add_fold(metrics)?;
    print!("{}", report.render(title));
    if let Some(path) = out {
        std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Executes one parsed command line.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let cfg = a.config.load()?;
            let corpus = generate_synthetic(&cfg.manifest, &cfg.resolved().generator)?;
            save_corpus(&a.out, &corpus)?;
            println!(
                "wrote {} audio and {} EEG records to {}",
                corpus.audio.len(),
                corpus.eeg.len(),
                a.out.display()
            );
        }
        Command::Split(a) => {
            let mut cfg = a.config.load()?;
            if let Some(n) = a.folds {
                cfg.n_folds = n;
            }
            let corpus = load_corpus(&a.corpus)?;
            let plan = stratified_folds(&corpus.manifest, cfg.n_folds, cfg.fold_seed())?;
            write_json(&a.out, &plan)?;
            println!("wrote {}-fold plan to {}", plan.n_folds, a.out.display());
        }
        Command::Pca(a) => {
            let set = load_features(&a.features, None)?;
            let train = train_side(&set, &a.fold)?;
            let model = PcaModel::fit(train.features.view(), a.k)?;
            model.save(&a.model_out)?;
            if let Some(out) = &a.transformed_out {
                let projected = FeatureSet::new(set.modality, set.ids.clone(), model.transform(set.features.view())?)?;
                write_features(out, &projected)?;
            }
            println!("PCA {} → {} fit on {} rows", model.input_dim(), a.k, train.len());
        }
        Command::Train(a) => {
            let set = load_features(&a.features, None)?;
            let plan: FoldPlan = read_json(&a.fold.plan)?;
            let (train, test) = split(&set, &plan, a.fold.test_fold)?;
            let n_classes = set.labels().iter().max().map_or(0, |m| m + 1);
            let pred = match a.classifier {
                ClassifierKind::Svm => {
                    let cfg = SvmConfig {
                        kernel: match a.kernel {
                            KernelKind::Linear => KernelChoice::Linear,
                            KernelKind::Rbf => KernelChoice::Rbf { gamma: a.gamma },
                        },
                        c_reg: a.c_reg,
                        seed: a.seed,
                        ..SvmConfig::default()
                    };
                    let model = SvmModel::fit(train.features.view(), &train.labels(), n_classes, &cfg)?;
                    model.save(&a.model_out)?;
                    model.predict(test.features.view())?
                }
                ClassifierKind::Softmax => {
                    let defaults = SoftmaxConfig::default();
                    let cfg = SoftmaxConfig {
                        epochs: a.epochs.unwrap_or(defaults.epochs),
                        seed: a.seed,
                        ..defaults
                    };
                    let model = SoftmaxModel::fit(train.features.view(), &train.labels(), n_classes, &cfg)?;
                    model.save(&a.model_out)?;
                    model.predict(test.features.view())?
                }
            };
            let (acc, cm) = evaluate(&test.labels(), &pred, n_classes)?;
            let names = category_names(a.manifest.as_deref(), n_classes)?;
            print!("{}", cm.render(&names));
            println!("accuracy {:.4} on {} held-out records", acc, test.len());
            if let Some(out) = &a.confusion_out {
                std::fs::write(out, cm.to_csv(&names)).map_err(|e| Error::io(out, e))?;
            }
        }
        Command::Fuse(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let fused = corpus.fused();
            write_features(&a.out, &fused)?;
            println!("wrote {} × {} fused features", fused.len(), fused.dim());
        }
        Command::Cca(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let plan = load_plan(&a.fold.plan, &corpus)?;
            let split = paired_split(&corpus, &plan, a.fold.test_fold)?;
            let model = fit_cca(&split, a.k, a.ridge)?;
            model.save(&a.model_out)?;
            println!("canonical correlations: {:.4}", model.correlations);
        }
        Command::Dcca(a) => dcca_command(a, false)?,
        Command::Cdcca(a) => dcca_command(a, true)?,
        Command::Retrieve(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let plan = load_plan(&a.fold.plan, &corpus)?;
            let split = paired_split(&corpus, &plan, a.fold.test_fold)?;
            let model: Box<dyn SharedSpace> = match a.kind {
                ModelKind::Cca => Box::new(CcaModel::load(&a.model)?),
                ModelKind::Dcca => Box::new(DccaModel::load(&a.model)?),
            };
            let mut cfg = ExperimentConfig::default();
            cfg.correlation.ks = a.ks.clone();
            cfg.correlation.similarity = a.metric.into();
            if let Some(&k) = a.ks.iter().find(|&&k| k == 0 || k > model.n_components()) {
                return Err(Error::Config(format!("k = {k} outside the model's {} components", model.n_components())));
            }
            let metrics = evaluate_space(model.as_ref(), &split, &cfg)?;
            print_metrics(&format!("fold {}", a.fold.test_fold), &a.ks, &metrics, a.out.as_deref())?;
        }
        Command::Run(a) => {
            let mut cfg = a.config.load()?;
            if let Some(out) = a.out {
                cfg.output_dir = out;
            }
            if let Some(n) = a.folds {
                cfg.n_folds = n;
            }
            if a.test_folds.is_some() {
                cfg.folds = a.test_folds;
            }
            if a.features_dir.is_some() {
                cfg.features_dir = a.features_dir;
            }
            if let Some(ks) = a.ks {
                cfg.correlation.ks = ks;
            }
            if let Some(e) = a.epochs {
                cfg.correlation.dcca.epochs = e;
                cfg.correlation.cdcca.epochs = e;
            }
            if let Some(m) = a.metric {
                cfg.correlation.similarity = m.into();
            }
            cfg.classifier.eeg_softmax |= a.eeg_softmax;
            let bundle = run_pipeline(&cfg)?;
            print!("{}", make_report(&bundle)?);
            println!("\nresults in {}", cfg.output_dir.display());
        }
        Command::Report(a) => {
            let bundle: ReportBundle = read_json(&a.dir.join(SUMMARY_FILE))?;
            print!("{}", make_report(&bundle)?);
        }
    }
    Ok(())
}

fn dcca_command(a: DccaArgs, category: bool) -> Result<()> {
    let cfg = a.config.load()?;
    let rc = cfg.resolved();
    let mut dcfg = if category { rc.correlation.cdcca } else { rc.correlation.dcca };
    if let Some(e) = a.epochs {
        dcfg.epochs = e;
    }
    if let Some(lr) = a.learning_rate {
        dcfg.learning_rate = lr;
    }
    if let Some(p) = a.pair_prob {
        dcfg.category_pair_prob = p;
    }
    if category && dcfg.category_pair_prob == 0.0 {
        return Err(Error::Config("cdcca needs a positive --pair-prob".into()));
    }
    if !category {
        dcfg.category_pair_prob = 0.0;
    }
    let corpus = load_corpus(&a.corpus)?;
    let plan = load_plan(&a.fold.plan, &corpus)?;
    let split = paired_split(&corpus, &plan, a.fold.test_fold)?;
    let model = fit_dcca(&split, &dcfg)?;
    model.save(&a.model_out)?;
    if let Some(out) = &a.log_out {
        write_json(out, &model.loss_trace)?;
    }
    println!(
        "loss {:.4} → {:.4} over {} epochs; head correlations sum {:.4}",
        model.loss_trace.first().copied().unwrap_or(f64::NAN),
        model.loss_trace.last().copied().unwrap_or(f64::NAN),
        dcfg.epochs,
        model.total_correlation()
    );
    Ok(())
}
