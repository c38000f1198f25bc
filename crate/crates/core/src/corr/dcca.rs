use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::encoder::{EncoderGrads, EncoderStack};
use super::pairs::category_repair_indices;
use super::{CcaModel, SharedSpace, Side};
use crate::dataset::io::{Container, Persist};
use crate::error::{Error, Result};
use crate::numlin::{center, column_means, inv_sqrt_parts, svd, SymMatrix, EIGEN_FLOOR};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DccaConfig {
    pub hidden: Vec<usize>,
    /// Encoder output width; the objective sums all of its correlations.
    pub output_dim: usize,
    pub ridge: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 penalty on encoder weights (biases are not decayed).
    pub weight_decay: f64,
    pub seed: u64,
    /// Probability of swapping a pair's Y side for a same-category row
    /// (0 gives plain DCCA).
    pub category_pair_prob: f64,
}

impl Default for DccaConfig {
    fn default() -> Self {
        DccaConfig {
            hidden: vec![256, 128],
            output_dim: 40,
            ridge: 1e-4,
            epochs: 60,
            learning_rate: 0.5,
            momentum: 0.9,
            weight_decay: 0.0,
            seed: 0,
            category_pair_prob: 0.0,
        }
    }
}

impl DccaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config("encoder layer widths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.category_pair_prob) {
            return Err(Error::Config(format!(
                "category_pair_prob {} outside [0, 1]",
                self.category_pair_prob
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be ≥ 0".into()));
        }
        if !(self.ridge >= 0.0) || !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(
                "ridge must be ≥ 0, learning rate > 0 and momentum in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn sizes(&self, input: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.hidden);
        s.push(self.output_dim);
        s
    }
}

/// Negative total correlation of two batches with its gradients.
#[derive(Debug, Clone)]
pub struct DccaLoss {
    /// `−Σ_{i<k} σ_i(T)`.
    pub loss: f64,
    pub grad_h1: Array2<f64>,
    pub grad_h2: Array2<f64>,
    /// All singular values of `T`, descending.
    pub correlations: Array1<f64>,
}

/// Loss and gradients of the deep CCA objective.
///
/// `T = (Σ11 + rI)^(-1/2) Σ12 (Σ22 + rI)^(-1/2)` over the batch (divisor
/// `n − 1`); the loss is minus the sum of its top `k` singular values. With
/// `T = U·D·Vᵀ`, `A`, `B` the two inverse square roots and `H̄` the centered
/// batches:
///
/// ```text
/// ∂loss/∂H1 = −(H̄2·(A·U_k·V_kᵀ·B)ᵀ − H̄1·A·U_k·D_k·U_kᵀ·A) / (n − 1)
/// ∂loss/∂H2 = −(H̄1·(A·U_k·V_kᵀ·B)  − H̄2·B·V_k·D_k·V_kᵀ·B) / (n − 1)
/// ```
pub fn dcca_loss_grad(h1: ArrayView2<f64>, h2: ArrayView2<f64>, k: usize, r: f64) -> Result<DccaLoss> {
    let n = h1.nrows();
    if h2.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "dcca paired rows",
            expected: n,
            found: h2.nrows(),
        });
    }
    if n < 3 {
        return Err(Error::Data(format!("dcca batch needs at least 3 rows, got {n}")));
    }
    if k == 0 || k > h1.ncols().min(h2.ncols()) {
        return Err(Error::Config(format!(
            "dcca k = {k} outside [1, {}]",
            h1.ncols().min(h2.ncols())
        )));
    }
    let denom = n as f64 - 1.0;
    let c1 = center(h1, column_means(h1).view());
    let c2 = center(h2, column_means(h2).view());
    let whiten = |c: &Array2<f64>| -> Result<(Array2<f64>, f64)> {
        let e = inv_sqrt_parts(&SymMatrix::symmetrize(c.t().dot(c) / denom), r)?;
        let max = e.values.iter().cloned().fold(0.0, f64::max);
        let min = e.values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok((e.compose(|l| l.powf(-0.5)), min / max))
    };
    let (a, cond1) = whiten(&c1)?;
    let (b, cond2) = whiten(&c2)?;
    if r == 0.0 && cond1.min(cond2) <= EIGEN_FLOOR {
        return Err(Error::Numerical(
            "degenerate output covariance with zero ridge".into(),
        ));
    }
    let s12 = c1.t().dot(&c2) / denom;
    let t = a.dot(&s12).dot(&b);
    let dec = svd(t.view())?;
    let uk = dec.u.slice(s![.., ..k]);
    let vk = dec.v.slice(s![.., ..k]);
    let dk = dec.s.slice(s![..k]);
    let loss = -dk.sum();
    if !loss.is_finite() {
        return Err(Error::Numerical("non-finite dcca loss".into()));
    }

    let au = a.dot(&uk);
    let bv = b.dot(&vk);
    let d12 = au.dot(&bv.t());
    let d11 = (&au * &dk.view().insert_axis(Axis(0))).dot(&au.t());
    let d22 = (&bv * &dk.view().insert_axis(Axis(0))).dot(&bv.t());
    let grad_h1 = (c1.dot(&d11) - c2.dot(&d12.t())) / denom;
    let grad_h2 = (c2.dot(&d22) - c1.dot(&d12)) / denom;
    Ok(DccaLoss {
        loss,
        grad_h1,
        grad_h2,
        correlations: dec.s,
    })
}

/// Two encoders trained on the deep CCA objective, followed by a CCA head
/// fit on their outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DccaModel {
    pub enc_x: EncoderStack,
    pub enc_y: EncoderStack,
    pub head: CcaModel,
    /// Loss before every update, then the final loss.
    pub loss_trace: Vec<f64>,
}

struct Momentum {
    x: EncoderGrads,
    y: EncoderGrads,
}

fn apply(enc: &mut EncoderStack, vel: &mut EncoderGrads, grad: &EncoderGrads, lr: f64, mu: f64, decay: f64) {
    for l in 0..enc.weights.len() {
        vel.weights[l] *= mu;
        vel.weights[l].scaled_add(-lr, &grad.weights[l]);
        if decay > 0.0 {
            vel.weights[l].scaled_add(-lr * decay, &enc.weights[l]);
        }
        enc.weights[l] += &vel.weights[l];
        vel.biases[l] *= mu;
        vel.biases[l].scaled_add(-lr, &grad.biases[l]);
        enc.biases[l] += &vel.biases[l];
    }
}

impl DccaModel {
    /// Trains on row-paired `x` and `y`. `labels` (one per pair) are
    /// required when `cfg.category_pair_prob > 0`.
    pub fn fit(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &DccaConfig, labels: Option<&[usize]>) -> Result<Self> {
        if y.nrows() != x.nrows() {
            return Err(Error::DimensionMismatch {
                context: "dcca paired rows",
                expected: x.nrows(),
                found: y.nrows(),
            });
        }
        let index: Vec<usize> = (0..x.nrows()).collect();
        Self::fit_indexed(x, y, &index, cfg, labels)
    }

    /// Like [`DccaModel::fit`], with pair `i` being `(x[i], y_rows[pair_index[i]])`.
    ///
    /// The Y encoder runs once per distinct row of `y_rows`, which matters
    /// when many X rows share one Y row.
    pub fn fit_indexed(
        x: ArrayView2<f64>,
        y_rows: ArrayView2<f64>,
        pair_index: &[usize],
        cfg: &DccaConfig,
        labels: Option<&[usize]>,
    ) -> Result<Self> {
        cfg.validate()?;
        let n = x.nrows();
        if pair_index.len() != n {
            return Err(Error::DimensionMismatch {
                context: "dcca pair index",
                expected: n,
                found: pair_index.len(),
            });
        }
        if pair_index.iter().any(|&j| j >= y_rows.nrows()) {
            return Err(Error::Data("dcca pair index out of range".into()));
        }
        if cfg.output_dim > n.saturating_sub(1) {
            return Err(Error::Config(format!(
                "output_dim {} needs more than {n} pairs",
                cfg.output_dim
            )));
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::DimensionMismatch {
                    context: "dcca labels",
                    expected: n,
                    found: l.len(),
                })
            }
            Some(l) => Some(l),
            None if cfg.category_pair_prob > 0.0 => {
                return Err(Error::Config(
                    "category re-pairing requires category labels".into(),
                ))
            }
            None => None,
        };

        let mut rng = seeds::rng(cfg.seed);
        let mut enc_x = EncoderStack::init(&cfg.sizes(x.ncols()), &mut rng)?;
        let mut enc_y = EncoderStack::init(&cfg.sizes(y_rows.ncols()), &mut rng)?;
        enc_x.standardize_on(x);
        let used: Vec<usize> = {
            let mut u = pair_index.to_vec();
            u.sort_unstable();
            u.dedup();
            u
        };
        enc_y.standardize_on(y_rows.select(Axis(0), &used).view());

        let mut vel = Momentum {
            x: EncoderGrads::zeros_like(&enc_x),
            y: EncoderGrads::zeros_like(&enc_y),
        };
        let k = cfg.output_dim;
        let mut trace = Vec::with_capacity(cfg.epochs + 1);
        // standardized once; each epoch borrows them back from the activations
        let mut sx = enc_x.standardize(x)?;
        let mut sy = enc_y.standardize(y_rows)?;
        for epoch in 0..cfg.epochs {
            let index = match labels {
                Some(l) if cfg.category_pair_prob > 0.0 => {
                    let swap = category_repair_indices(l, cfg.category_pair_prob, &mut rng)?;
                    swap.iter().map(|&j| pair_index[j]).collect()
                }
                _ => pair_index.to_vec(),
            };
            let mut ax = enc_x.forward_standardized(std::mem::take(&mut sx));
            let mut ay = enc_y.forward_standardized(std::mem::take(&mut sy));
            let h2 = ay.last().unwrap().select(Axis(0), &index);
            let step = dcca_loss_grad(ax.last().unwrap().view(), h2.view(), k, cfg.ridge)
                .map_err(|e| Error::Numerical(format!("dcca epoch {epoch}: {e}")))?;
            if !step.loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite dcca loss at epoch {epoch}")));
            }
            trace.push(step.loss);
            let mut gy = Array2::zeros((y_rows.nrows(), k));
            for (i, &j) in index.iter().enumerate() {
                let mut row = gy.row_mut(j);
                row += &step.grad_h2.row(i);
            }
            let grads_x = enc_x.backward(&ax, &step.grad_h1);
            let grads_y = enc_y.backward(&ay, &gy);
            sx = std::mem::take(&mut ax[0]);
            sy = std::mem::take(&mut ay[0]);
            apply(&mut enc_x, &mut vel.x, &grads_x, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
            apply(&mut enc_y, &mut vel.y, &grads_y, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
            if !enc_x.is_finite() || !enc_y.is_finite() {
                return Err(Error::Numerical(format!("encoder weights diverged at epoch {epoch}")));
            }
        }

        let hx = enc_x.forward(x)?;
        let hy = enc_y.forward(y_rows)?.select(Axis(0), pair_index);
        let final_loss = dcca_loss_grad(hx.view(), hy.view(), k, cfg.ridge)?.loss;
        trace.push(final_loss);
        let head = CcaModel::fit(hx.view(), hy.view(), k, cfg.ridge, cfg.ridge)?;
        log::debug!("dcca finished: loss {final_loss:.4} after {} epochs", cfg.epochs);
        Ok(DccaModel {
            enc_x,
            enc_y,
            head,
            loss_trace: trace,
        })
    }

    /// Sum of the head's canonical correlations.
    pub fn total_correlation(&self) -> f64 {
        self.head.correlations.sum()
    }
}

impl SharedSpace for DccaModel {
    fn n_components(&self) -> usize {
        self.head.n_components()
    }

    fn project(&self, data: ArrayView2<f64>, side: Side) -> Result<Array2<f64>> {
        let enc = match side {
            Side::X => &self.enc_x,
            Side::Y => &self.enc_y,
        };
        self.head.project(enc.forward(data)?.view(), side)
    }
}

impl Persist for DccaModel {
    fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.extend_prefixed("x", self.enc_x.to_container());
        c.extend_prefixed("y", self.enc_y.to_container());
        c.extend_prefixed("head", self.head.to_container());
        c.push_vector("loss_trace", &Array1::from(self.loss_trace.clone()));
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        Ok(DccaModel {
            enc_x: EncoderStack::from_container(&c.sub("x"))?,
            enc_y: EncoderStack::from_container(&c.sub("y"))?,
            head: CcaModel::from_container(&c.sub("head"))?,
            loss_trace: c.vector("loss_trace")?.to_vec(),
        })
    }
}
