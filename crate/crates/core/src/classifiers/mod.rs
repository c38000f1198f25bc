//! Supervised heads for audio event classification and their evaluation.

mod eval;
mod softmax;
mod svm;

pub use eval::{evaluate, ConfusionMatrix};
pub use softmax::{SoftmaxConfig, SoftmaxModel};
pub use svm::{BinaryMachine, Kernel, KernelChoice, SvmConfig, SvmModel};

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// A fitted multiclass classifier.
pub trait Classifier {
    fn n_classes(&self) -> usize;
    fn input_dim(&self) -> usize;

    /// Per-class scores, `n × C`. Higher is more likely.
    fn scores(&self, x: ArrayView2<f64>) -> Result<ndarray::Array2<f64>>;

    /// Argmax of [`Classifier::scores`], ties resolved to the lowest class.
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.scores(x)?.view()))
    }
}

pub(crate) fn argmax_rows(scores: ArrayView2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub(crate) fn check_dim(expected: usize, x: ArrayView2<f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::DimensionMismatch {
            context: "classifier input",
            expected,
            found: x.ncols(),
        });
    }
    Ok(())
}

/// Checks labels are in range, rows match, every class is present and the
/// features are finite.
pub(crate) fn check_training_set(x: ArrayView2<f64>, y: &[usize], n_classes: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Data(format!("label {bad} outside [0, {n_classes})")));
    }
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!("class {empty} has no training examples")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite training features".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn ties_go_to_lowest_class() {
        let s = array![[0.5, 0.5, 0.5], [0.1, 0.3, 0.3], [0.0, -1.0, 2.0]];
        assert_eq!(argmax_rows(s.view()), vec![0, 1, 2]);
    }
}
