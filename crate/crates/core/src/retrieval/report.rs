use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use ndarray::{s, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{map_score, mrr1, rank_all, Similarity};
use crate::corr::{SharedSpace, Side};
use crate::dataset::FeatureSet;
use crate::error::{Error, Result};

/// Held-out side of one fold: EEG records (X view) and audio records (Y view).
#[derive(Debug, Clone)]
pub struct FoldData<'a> {
    pub eeg: &'a FeatureSet,
    pub audio: &'a FeatureSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub mrr1: Vec<f64>,
    pub map: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for a single value.
fn std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl ReportRow {
    pub fn mrr1_mean(&self) -> f64 {
        mean(&self.mrr1)
    }
    pub fn mrr1_std(&self) -> f64 {
        std(&self.mrr1)
    }
    pub fn map_mean(&self) -> f64 {
        mean(&self.map)
    }
    pub fn map_std(&self) -> f64 {
        std(&self.map)
    }
}

/// MRR1 (EEG → audio) and MAP (audio → EEG) per component count, per fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_CSV_HEADER: &str = "k,mrr1_mean,mrr1_std,map_mean,map_std";

impl RetrievalReport {
    /// A report with no folds yet.
    pub fn new(ks: &[usize]) -> Self {
        RetrievalReport {
            rows: ks
                .iter()
                .map(|&k| ReportRow {
                    k,
                    mrr1: Vec::new(),
                    map: Vec::new(),
                })
                .collect(),
        }
    }

    /// Appends one fold's `(mrr1, map)` per row, in row order.
    pub fn add_fold(&mut self, metrics: &[(f64, f64)]) -> Result<()> {
        if metrics.len() != self.rows.len() {
            return Err(Error::DimensionMismatch {
                context: "retrieval fold metrics",
                expected: self.rows.len(),
                found: metrics.len(),
            });
        }
        for (row, &(m, p)) in self.rows.iter_mut().zip(metrics) {
            row.mrr1.push(m);
            row.map.push(p);
        }
        Ok(())
    }

    pub fn n_folds(&self) -> usize {
        self.rows.first().map_or(0, |r| r.mrr1.len())
    }

    pub fn ks(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.k).collect()
    }

    pub fn row(&self, k: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    /// `k,mrr1_mean,mrr1_std,map_mean,map_std`, values in shortest
    /// round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?}",
                r.k,
                r.mrr1_mean(),
                r.mrr1_std(),
                r.map_mean(),
                r.map_std()
            );
        }
        out
    }

    /// Parses [`RetrievalReport::to_csv`] into `(k, mrr1_mean, mrr1_std, map_mean, map_std)` rows.
    pub fn parse_csv(text: &str) -> Result<Vec<(usize, f64, f64, f64, f64)>> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        if r.headers()?.iter().collect::<Vec<_>>().join(",") != REPORT_CSV_HEADER {
            return Err(Error::Data("unexpected retrieval csv header".into()));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::Data(format!("bad number {:?}", &rec[i])))
            };
            let k = rec[0]
                .parse()
                .map_err(|_| Error::Data(format!("bad k {:?}", &rec[0])))?;
            rows.push((k, f(1)?, f(2)?, f(3)?, f(4)?));
        }
        Ok(rows)
    }

    pub fn render(&self, title: &str) -> String {
        let mut out = format!("{title}\n");
        let _ = writeln!(out, "{:>4}  {:>13}  {:>13}", "k", "MRR1", "MAP");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4}  {:.3} ± {:.3}  {:.3} ± {:.3}",
                r.k,
                r.mrr1_mean(),
                r.mrr1_std(),
                r.map_mean(),
                r.map_std()
            );
        }
        out
    }
}

/// MRR1 and MAP of one fold for each `k`, given full-width projections.
pub fn fold_metrics(
    eeg_proj: ArrayView2<f64>,
    audio_proj: ArrayView2<f64>,
    eeg: &FeatureSet,
    audio: &FeatureSet,
    ks: &[usize],
    metric: Similarity,
) -> Result<Vec<(f64, f64)>> {
    // gallery positions of each audio segment
    let mut audio_pos = BTreeMap::new();
    for (i, id) in audio.ids.iter().enumerate() {
        audio_pos.insert(id.segment, i);
    }
    let relevant_audio: Vec<usize> = eeg
        .ids
        .iter()
        .map(|id| {
            audio_pos.get(&id.segment).copied().ok_or_else(|| {
                Error::Data(format!("no audio for segment {} in this fold", id.segment))
            })
        })
        .collect::<Result<_>>()?;
    let relevant_eeg: Vec<HashSet<usize>> = audio
        .ids
        .iter()
        .map(|a| {
            eeg.ids
                .iter()
                .enumerate()
                .filter(|(_, e)| e.segment == a.segment)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    ks.iter()
        .map(|&k| {
            let e = eeg_proj.slice(s![.., ..k]);
            let a = audio_proj.slice(s![.., ..k]);
            let m = mrr1(&rank_all(e, a, metric)?, &relevant_audio)?;
            let p = map_score(&rank_all(a, e, metric)?, &relevant_eeg)?;
            Ok((m, p))
        })
        .collect()
}

/// Evaluates one fitted shared space per fold on that fold's held-out
/// records, keeping the first `k` components for every `k` in `ks`.
pub fn sweep_components<M: SharedSpace>(
    models: &[M],
    folds: &[FoldData<'_>],
    ks: &[usize],
    metric: Similarity,
) -> Result<RetrievalReport> {
    if models.len() != folds.len() || models.is_empty() {
        return Err(Error::Config(format!(
            "{} models for {} folds",
            models.len(),
            folds.len()
        )));
    }
    let mut report = RetrievalReport::new(ks);
    for (fold, (model, data)) in models.iter().zip(folds).enumerate() {
        if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > model.n_components()) {
            return Err(Error::Config(format!(
                "k = {k} outside the model's {} components",
                model.n_components()
            )));
        }
        let eeg_proj = model
            .project(data.eeg.features.view(), Side::X)
            .map_err(|e| e.in_stage("retrieval", fold))?;
        let audio_proj = model
            .project(data.audio.features.view(), Side::Y)
            .map_err(|e| e.in_stage("retrieval", fold))?;
        let metrics = fold_metrics(eeg_proj.view(), audio_proj.view(), data.eeg, data.audio, ks, metric)
            .map_err(|e| e.in_stage("retrieval", fold))?;
        report.add_fold(&metrics)?;
    }
    Ok(report)
}
