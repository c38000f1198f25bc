use std::fmt::Write;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Rows are true categories, columns predicted ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: Array2::zeros((n_classes, n_classes)),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts.diag().sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }

    /// Element-wise sum, e.g. to pool folds.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::DimensionMismatch {
                context: "confusion matrix merge",
                expected: self.n_classes(),
                found: other.n_classes(),
            });
        }
        self.counts += &other.counts;
        Ok(())
    }

    /// CSV with a header row of category names, one row per true category.
    pub fn to_csv(&self, categories: &[String]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(categories).expect("in-memory write");
        for row in self.counts.rows() {
            w.write_record(row.iter().map(|c| c.to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Parses [`ConfusionMatrix::to_csv`] output; returns names and matrix.
    pub fn from_csv(text: &str) -> Result<(Vec<String>, ConfusionMatrix)> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let c = names.len();
        let mut cm = ConfusionMatrix::new(c);
        let mut rows = 0;
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if i >= c || rec.len() != c {
                return Err(Error::Data("confusion csv is not square".into()));
            }
            for (j, field) in rec.iter().enumerate() {
                cm.counts[[i, j]] = field
                    .parse()
                    .map_err(|_| Error::Data(format!("bad count {field:?}")))?;
            }
            rows += 1;
        }
        if rows != c {
            return Err(Error::Data("confusion csv is not square".into()));
        }
        Ok((names, cm))
    }

    /// Aligned text rendering with row-normalized percentages.
    pub fn render(&self, categories: &[String]) -> String {
        let width = categories.iter().map(|s| s.len()).max().unwrap_or(0).max(6);
        let mut out = String::new();
        let _ = write!(out, "{:>width$} |", "");
        for j in 0..self.n_classes() {
            let _ = write!(out, " {:>5}", j);
        }
        out.push('\n');
        for (i, row) in self.counts.rows().into_iter().enumerate() {
            let total = row.sum().max(1) as f64;
            let name = categories.get(i).map(String::as_str).unwrap_or("?");
            let _ = write!(out, "{name:>width$} |");
            for &v in row {
                let _ = write!(out, " {:>5.1}", 100.0 * v as f64 / total);
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy and confusion matrix of `y_pred` against `y_true`.
pub fn evaluate(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<(f64, ConfusionMatrix)> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            context: "evaluation labels",
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(n_classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Data(format!("label outside [0, {n_classes})")));
        }
        cm.counts[[t, p]] += 1;
    }
    Ok((cm.accuracy(), cm))
}
