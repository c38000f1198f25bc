use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training_set, Classifier};
use crate::dataset::io::{Container, Persist};
use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftmaxConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Standard deviation of the initial weights; 0 starts from zero.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        SoftmaxConfig {
            epochs: 300,
            learning_rate: 0.5,
            l2: 1e-4,
            init_scale: 0.01,
            seed: 0,
        }
    }
}

/// Linear layer followed by softmax, trained on cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    /// `d × C`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    /// Training loss after the last epoch (cross-entropy plus L2 term).
    pub final_loss: f64,
}

/// Row-wise softmax, shifted by the row max.
pub(crate) fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    logits
}

impl SoftmaxModel {
    pub fn zeros(dim: usize, n_classes: usize) -> Self {
        SoftmaxModel {
            weights: Array2::zeros((dim, n_classes)),
            bias: Array1::zeros(n_classes),
            final_loss: f64::NAN,
        }
    }

    pub fn probabilities(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.weights.nrows(), x)?;
        Ok(softmax_rows(x.dot(&self.weights) + &self.bias))
    }

    /// Mean cross-entropy plus `l2/2·‖W‖²`, with gradients for W and b.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        y: &[usize],
        l2: f64,
    ) -> Result<(f64, Array2<f64>, Array1<f64>)> {
        let n = x.nrows() as f64;
        let mut p = self.probabilities(x)?;
        let mut ce = 0.0;
        for (i, &c) in y.iter().enumerate() {
            ce -= p[[i, c]].max(f64::MIN_POSITIVE).ln();
            p[[i, c]] -= 1.0;
        }
        p /= n;
        let grad_w = x.t().dot(&p) + &self.weights * l2;
        let grad_b = p.sum_axis(Axis(0));
        let reg = 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        Ok((ce / n + reg, grad_w, grad_b))
    }

    /// Full-batch gradient descent on cross-entropy with L2 decay.
    ///
    /// Returns the model and the loss recorded before every update, with the
    /// final loss appended.
    pub fn fit_with_trace(
        x: ArrayView2<f64>,
        y: &[usize],
        n_classes: usize,
        cfg: &SoftmaxConfig,
    ) -> Result<(Self, Vec<f64>)> {
        if x.nrows() < n_classes {
            return Err(Error::Data(format!(
                "softmax needs at least {n_classes} rows, got {}",
                x.nrows()
            )));
        }
        check_training_set(x, y, n_classes)?;
        let mut model = SoftmaxModel::zeros(x.ncols(), n_classes);
        if cfg.init_scale > 0.0 {
            let mut rng = seeds::rng(cfg.seed);
            model
                .weights
                .mapv_inplace(|_| cfg.init_scale * rng.sample::<f64, _>(StandardNormal));
        }
        let mut trace = Vec::with_capacity(cfg.epochs + 1);
        for epoch in 0..cfg.epochs {
            let (loss, gw, gb) = model.loss_and_grad(x, y, cfg.l2)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("softmax loss diverged at epoch {epoch}")));
            }
            trace.push(loss);
            model.weights.scaled_add(-cfg.learning_rate, &gw);
            model.bias.scaled_add(-cfg.learning_rate, &gb);
        }
        let (loss, _, _) = model.loss_and_grad(x, y, cfg.l2)?;
        trace.push(loss);
        model.final_loss = loss;
        Ok((model, trace))
    }

    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, cfg: &SoftmaxConfig) -> Result<Self> {
        Self::fit_with_trace(x, y, n_classes, cfg).map(|(m, _)| m)
    }
}

impl Classifier for SoftmaxModel {
    fn n_classes(&self) -> usize {
        self.bias.len()
    }

    fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn scores(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.probabilities(x)
    }
}

impl Persist for SoftmaxModel {
    fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.push("weights", self.weights.clone());
        c.push_vector("bias", &self.bias);
        c.push_vector("final_loss", &Array1::from(vec![self.final_loss]));
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        let weights = c.matrix("weights")?.clone();
        let bias = c.vector("bias")?;
        if bias.len() != weights.ncols() {
            return Err(Error::Data("inconsistent softmax container".into()));
        }
        Ok(SoftmaxModel {
            weights,
            bias,
            final_loss: c.scalar("final_loss")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn clusters(n_per: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = Array2::from_shape_simple_fn((classes, dim), || 4.0 * rng.random::<f64>() - 2.0);
        let n = n_per * classes;
        let y: Vec<usize> = (0..n).map(|i| i % classes).collect();
        let x = Array2::from_shape_fn((n, dim), |(i, j)| {
            centers[[y[i], j]] + spread * rng.sample::<f64, _>(StandardNormal)
        });
        (x, y)
    }

    #[test]
    fn zero_model_has_uniform_loss() {
        let (x, y) = clusters(5, 8, 4, 1.0, 1);
        let (loss, _, _) = SoftmaxModel::zeros(4, 8).loss_and_grad(x.view(), &y, 0.0).unwrap();
        assert!((loss - 8f64.ln()).abs() < 1e-12);
        assert!((loss - 2.0794).abs() < 1e-4);
    }

    #[test]
    fn separates_clusters() {
        let (x, y) = clusters(40, 8, 6, 0.1, 2);
        let m = SoftmaxModel::fit(x.view(), &y, 8, &SoftmaxConfig::default()).unwrap();
        let pred = m.predict(x.view()).unwrap();
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = clusters(10, 3, 5, 1.0, 3);
        let m = SoftmaxModel::fit(x.view(), &y, 3, &SoftmaxConfig::default()).unwrap();
        let p = m.probabilities((x * 50.0).view()).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = clusters(4, 3, 5, 1.0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = SoftmaxModel::zeros(5, 3);
        m.weights.mapv_inplace(|_| rng.random::<f64>() - 0.5);
        m.bias.mapv_inplace(|_| rng.random::<f64>() - 0.5);
        let l2 = 0.3;
        let (_, gw, gb) = m.loss_and_grad(x.view(), &y, l2).unwrap();
        let h = 1e-5;
        for i in 0..5 {
            for j in 0..3 {
                let mut p = m.clone();
                p.weights[[i, j]] += h;
                let mut q = m.clone();
                q.weights[[i, j]] -= h;
                let fd = (p.loss_and_grad(x.view(), &y, l2).unwrap().0
                    - q.loss_and_grad(x.view(), &y, l2).unwrap().0)
                    / (2.0 * h);
                assert!((fd - gw[[i, j]]).abs() <= 1e-5 * fd.abs().max(1e-3));
            }
        }
        for j in 0..3 {
            let mut p = m.clone();
            p.bias[j] += h;
            let mut q = m.clone();
            q.bias[j] -= h;
            let fd = (p.loss_and_grad(x.view(), &y, l2).unwrap().0
                - q.loss_and_grad(x.view(), &y, l2).unwrap().0)
                / (2.0 * h);
            assert!((fd - gb[j]).abs() <= 1e-5 * fd.abs().max(1e-3));
        }
    }

    #[test]
    fn loss_is_nonincreasing_for_small_steps() {
        let (x, y) = clusters(10, 4, 3, 1.5, 6);
        let cfg = SoftmaxConfig {
            learning_rate: 0.05,
            epochs: 200,
            ..SoftmaxConfig::default()
        };
        let (_, trace) = SoftmaxModel::fit_with_trace(x.view(), &y, 4, &cfg).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn training_errors() {
        let (x, _) = clusters(2, 2, 2, 1.0, 7);
        assert!(SoftmaxModel::fit(x.view(), &[0, 0, 0, 0], 2, &SoftmaxConfig::default()).is_err());
        let mut bad = x.clone();
        bad[[0, 0]] = f64::NAN;
        assert!(SoftmaxModel::fit(bad.view(), &[0, 1, 0, 1], 2, &SoftmaxConfig::default()).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = clusters(5, 3, 4, 1.0, 8);
        let cfg = SoftmaxConfig::default();
        let a = SoftmaxModel::fit(x.view(), &y, 3, &cfg).unwrap();
        let b = SoftmaxModel::fit(x.view(), &y, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
