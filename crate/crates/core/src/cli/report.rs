use std::fmt::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::classifiers::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::retrieval::RetrievalReport;

/// Classification scenarios, in accuracy-table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Audio,
    EegSoftmax,
    Eeg,
    Fused,
}

impl Scenario {
    pub const REQUIRED: [Scenario; 3] = [Scenario::Audio, Scenario::Eeg, Scenario::Fused];
    const ORDER: [Scenario; 4] = [Scenario::Audio, Scenario::EegSoftmax, Scenario::Eeg, Scenario::Fused];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Audio => "audio",
            Scenario::EegSoftmax => "eeg_softmax",
            Scenario::Eeg => "eeg",
            Scenario::Fused => "fused",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Scenario::Audio => "Audio (SVM)",
            Scenario::EegSoftmax => "EEG (softmax)",
            Scenario::Eeg => "EEG (SVM)",
            Scenario::Fused => "Fused (SVM)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cca,
    Dcca,
    Cdcca,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cca, Method::Dcca, Method::Cdcca];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cca => "cca",
            Method::Dcca => "dcca",
            Method::Cdcca => "cdcca",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::Cca => "CCA",
            Method::Dcca => "DCCA",
            Method::Cdcca => "C-DCCA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub fold_accuracies: Vec<f64>,
    /// Pooled over folds; rows are true categories.
    pub confusion: Vec<Vec<u64>>,
}

impl ScenarioResult {
    pub fn new(scenario: Scenario, fold_accuracies: Vec<f64>, confusion: &ConfusionMatrix) -> Self {
        ScenarioResult {
            scenario,
            fold_accuracies,
            confusion: confusion.counts.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// Mean of the per-fold accuracies.
    pub fn accuracy(&self) -> f64 {
        self.fold_accuracies.iter().sum::<f64>() / self.fold_accuracies.len().max(1) as f64
    }

    pub fn confusion_matrix(&self) -> Result<ConfusionMatrix> {
        let n = self.confusion.len();
        let flat: Vec<u64> = self.confusion.iter().flatten().copied().collect();
        let counts = Array2::from_shape_vec((n, n), flat)
            .map_err(|_| Error::Data(format!("{} confusion matrix is not square", self.scenario.as_str())))?;
        Ok(ConfusionMatrix { counts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub report: RetrievalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub master_seed: u64,
    pub config_hash: String,
    pub folds: Vec<usize>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub version: String,
}

/// Everything a run reports; serialized as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub categories: Vec<String>,
    pub scenarios: Vec<ScenarioResult>,
    pub retrieval: Vec<MethodReport>,
    pub metadata: RunMetadata,
    /// Output files written next to the summary.
    pub files: Vec<String>,
}

impl ReportBundle {
    pub fn scenario(&self, s: Scenario) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|r| r.scenario == s)
    }

    pub fn method(&self, m: Method) -> Option<&RetrievalReport> {
        self.retrieval.iter().find(|r| r.method == m).map(|r| &r.report)
    }

    /// Fails unless all required scenarios and methods are present and
    /// the methods share one list of component counts.
    pub fn check_complete(&self) -> Result<()> {
        for s in Scenario::REQUIRED {
            if self.scenario(s).is_none() {
                return Err(Error::Data(format!("incomplete report: no {} scenario", s.as_str())));
            }
        }
        let mut ks = None;
        for m in Method::ALL {
            let r = self
                .method(m)
                .ok_or_else(|| Error::Data(format!("incomplete report: no {} retrieval", m.as_str())))?;
            let these = r.ks();
            if these.is_empty() {
                return Err(Error::Data(format!("incomplete report: {} has no rows", m.as_str())));
            }
            if *ks.get_or_insert_with(|| these.clone()) != these {
                return Err(Error::Data("retrieval methods disagree on k values".into()));
            }
        }
        Ok(())
    }
}

fn metric_table(out: &mut String, bundle: &ReportBundle, title: &str, pick: impl Fn(&RetrievalReport, usize) -> (f64, f64)) {
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:>12}", "components");
    for m in Method::ALL {
        let _ = write!(out, "  {:>15}", m.title());
    }
    out.push('\n');
    let first = bundle.method(Method::Cca).expect("checked complete");
    for (i, row) in first.rows.iter().enumerate() {
        let _ = write!(out, "{:>12}", row.k);
        for m in Method::ALL {
            let (mean, std) = pick(bundle.method(m).expect("checked complete"), i);
            let _ = write!(out, "  {:>15}", format!("{mean:.3} ± {std:.3}"));
        }
        out.push('\n');
    }
}

/// Text report: the accuracy table, then MRR1 and MAP tables with one row
/// per component count and one column per method.
pub fn make_report(bundle: &ReportBundle) -> Result<String> {
    bundle.check_complete()?;
    let mut out = String::new();
    let n_folds = bundle.metadata.folds.len();
    let _ = writeln!(out, "Classification accuracy (mean over {n_folds} folds)");
    let present: Vec<&ScenarioResult> = Scenario::ORDER.iter().filter_map(|&s| bundle.scenario(s)).collect();
    for r in &present {
        let _ = write!(out, "  {:>13}", r.scenario.title());
    }
    out.push('\n');
    for r in &present {
        let _ = write!(out, "  {:>13}", format!("{:.1}%", 100.0 * r.accuracy()));
    }
    out.push_str("\n\n");
    metric_table(&mut out, bundle, "MRR1, EEG query against audio gallery", |r, i| {
        (r.rows[i].mrr1_mean(), r.rows[i].mrr1_std())
    });
    out.push('\n');
    metric_table(&mut out, bundle, "MAP, audio query against EEG gallery", |r, i| {
        (r.rows[i].map_mean(), r.rows[i].map_std())
    });
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::retrieval::ReportRow;

    pub(crate) fn bundle(accs: &[(Scenario, f64)]) -> ReportBundle {
        let mut cm = ConfusionMatrix::new(2);
        cm.counts[[0, 0]] = 3;
        cm.counts[[1, 0]] = 1;
        let report = RetrievalReport {
            rows: vec![ReportRow {
                k: 10,
                mrr1: vec![0.3, 0.4],
                map: vec![0.1, 0.2],
            }],
        };
        ReportBundle {
            categories: vec!["a".into(), "b".into()],
            scenarios: accs
                .iter()
                .map(|&(s, a)| ScenarioResult::new(s, vec![a], &cm))
                .collect(),
            retrieval: Method::ALL
                .iter()
                .map(|&method| MethodReport {
                    method,
                    report: report.clone(),
                })
                .collect(),
            metadata: RunMetadata {
                master_seed: 1,
                config_hash: String::new(),
                folds: vec![0, 1],
                started_unix: 0,
                finished_unix: 0,
                version: String::new(),
            },
            files: vec![],
        }
    }

    #[test]
    fn accuracy_row_follows_table_order() {
        let b = bundle(&[(Scenario::Fused, 0.81), (Scenario::Audio, 0.67), (Scenario::Eeg, 0.59)]);
        let text = make_report(&b).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let header: Vec<&str> = lines[1].split("  ").map(str::trim).filter(|s| !s.is_empty()).collect();
        assert_eq!(header, ["Audio (SVM)", "EEG (SVM)", "Fused (SVM)"]);
        let values: Vec<&str> = lines[2].split_whitespace().collect();
        assert_eq!(values, ["67.0%", "59.0%", "81.0%"]);
        assert!(text.contains("0.350 ± 0.071"));
    }

    #[test]
    fn softmax_column_sits_between_audio_and_eeg() {
        let b = bundle(&[
            (Scenario::Audio, 0.67),
            (Scenario::Eeg, 0.59),
            (Scenario::Fused, 0.81),
            (Scenario::EegSoftmax, 0.61),
        ]);
        let text = make_report(&b).unwrap();
        let values: Vec<&str> = text.lines().nth(2).unwrap().split_whitespace().collect();
        assert_eq!(values, ["67.0%", "61.0%", "59.0%", "81.0%"]);
    }

    #[test]
    fn incomplete_bundles_are_rejected() {
        let mut b = bundle(&[(Scenario::Audio, 0.5), (Scenario::Eeg, 0.5), (Scenario::Fused, 0.5)]);
        assert!(make_report(&b).is_ok());
        b.retrieval.clear();
        assert!(matches!(make_report(&b), Err(Error::Data(_))));
        let b = bundle(&[(Scenario::Audio, 0.5), (Scenario::Fused, 0.5)]);
        assert!(make_report(&b).is_err());
        let mut b = bundle(&[(Scenario::Audio, 0.5), (Scenario::Eeg, 0.5), (Scenario::Fused, 0.5)]);
        b.retrieval[1].report.rows[0].k = 15;
        assert!(make_report(&b).is_err());
    }

    #[test]
    fn confusion_survives_json() {
        let b = bundle(&[(Scenario::Audio, 0.5), (Scenario::Eeg, 0.5), (Scenario::Fused, 0.5)]);
        let back: ReportBundle = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(back, b);
        let cm = back.scenarios[0].confusion_matrix().unwrap();
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.trace(), 3);
    }
}
