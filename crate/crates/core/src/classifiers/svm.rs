//! One-vs-rest kernel SVM trained by sequential minimal optimization.
//!
//! Each binary problem is the standard dual
//! `min ½αᵀQα − eᵀα  s.t. 0 ≤ α ≤ C, yᵀα = 0` with `Q_ij = y_i y_j K_ij`.
//! Working pairs use maximal-violation selection for the first index and
//! second-order gain for the second. The solver stops once the
//! maximal KKT violation drops below `tol`.

use std::borrow::Cow;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_dim, check_training_set, Classifier};
use crate::dataset::io::{Container, Persist};
use crate::error::{Error, Result};
use crate::seeds;

const TAU: f64 = 1e-12;

/// Largest training set for which the full kernel matrix is cached.
const FULL_GRAM_LIMIT: usize = 12_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// `K(A_i, B_j)` for all row pairs.
    pub fn matrix(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
        let dots = a.dot(&b.t());
        match *self {
            Kernel::Linear => dots,
            Kernel::Rbf { gamma } => {
                let na: Array1<f64> = a.rows().into_iter().map(|r| r.dot(&r)).collect();
                let nb: Array1<f64> = b.rows().into_iter().map(|r| r.dot(&r)).collect();
                let mut k = dots;
                for ((i, j), v) in k.indexed_iter_mut() {
                    let d2 = (na[i] + nb[j] - 2.0 * *v).max(0.0);
                    *v = (-gamma * d2).exp();
                }
                k
            }
        }
    }
}

/// Kernel as configured; an RBF without `gamma` uses
/// `1 / (dim · mean per-feature variance)` of the training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Rbf { gamma: Option<f64> },
}

impl KernelChoice {
    pub fn resolve(&self, x: ArrayView2<f64>) -> Kernel {
        match *self {
            KernelChoice::Linear => Kernel::Linear,
            KernelChoice::Rbf { gamma: Some(g) } => Kernel::Rbf { gamma: g },
            KernelChoice::Rbf { gamma: None } => {
                let var = x.var_axis(Axis(0), 0.0).mean().unwrap_or(0.0);
                let scale = x.ncols() as f64 * var;
                let gamma = if scale > 0.0 { 1.0 / scale } else { 1.0 };
                Kernel::Rbf { gamma }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub kernel: KernelChoice,
    pub c_reg: f64,
    pub tol: f64,
    /// Iteration budget per binary machine, in multiples of the sample count.
    pub max_passes: usize,
    /// Fixes the scan order used to break ties between equal violators.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: KernelChoice::Rbf { gamma: None },
            c_reg: 1.0,
            tol: 1e-3,
            max_passes: 200,
            seed: 0,
        }
    }
}

/// One binary machine of the one-vs-rest ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    /// Rows of the training set with α > 0.
    pub support_indices: Vec<usize>,
    pub support_vectors: Array2<f64>,
    /// α of each support vector, in `(0, C]`.
    pub alpha: Array1<f64>,
    /// ±1 label of each support vector.
    pub y: Array1<f64>,
    /// Decision value is `Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinaryMachine {
    pub fn decision(&self, kernel: &Kernel, x: ArrayView2<f64>) -> Array1<f64> {
        if self.alpha.is_empty() {
            return Array1::from_elem(x.nrows(), -self.rho);
        }
        let coef = &self.alpha * &self.y;
        kernel.matrix(x, self.support_vectors.view()).dot(&coef) - self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c_reg: f64,
    pub dim: usize,
    /// One machine per class, class `c` against the rest.
    pub machines: Vec<BinaryMachine>,
}

enum Gram<'a> {
    Full(Array2<f64>),
    Lazy { x: ArrayView2<'a, f64>, kernel: Kernel },
}

impl Gram<'_> {
    fn column(&self, i: usize) -> Cow<'_, [f64]> {
        match self {
            Gram::Full(k) => match k.row(i).to_slice() {
                Some(row) => Cow::Borrowed(row),
                None => Cow::Owned(k.row(i).to_vec()),
            },
            Gram::Lazy { x, kernel } => {
                let xi = x.row(i);
                Cow::Owned(x.rows().into_iter().map(|r| kernel.eval(xi, r)).collect())
            }
        }
    }

    fn diag(&self, i: usize) -> f64 {
        match self {
            Gram::Full(k) => k[[i, i]],
            Gram::Lazy { x, kernel } => kernel.eval(x.row(i), x.row(i)),
        }
    }
}

struct Solution {
    alpha: Vec<f64>,
    rho: f64,
    iterations: usize,
    converged: bool,
}

fn solve_binary(gram: &Gram, y: &[f64], c: f64, tol: f64, max_iter: usize, order: &[usize]) -> Solution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let diag: Vec<f64> = (0..n).map(|i| gram.diag(i)).collect();
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for &t in order {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = gram.column(i);
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for &t in order {
            if in_low(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let mut a = diag[i] + diag[t] - 2.0 * ki[t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj < best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if gmax - gmin < tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let kj = gram.column(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = diag[i] + diag[j] - 2.0 * ki[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai.clamp(0.0, c);
        alpha[j] = aj.clamp(0.0, c);
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    // rho: mean of y·G over free vectors, else midpoint of the feasible range
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    Solution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

impl SvmModel {
    pub fn fit(x: ArrayView2<f64>, labels: &[usize], n_classes: usize, cfg: &SvmConfig) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Data("svm needs at least two categories".into()));
        }
        if !(cfg.c_reg > 0.0) || !(cfg.tol > 0.0) {
            return Err(Error::Config("svm c_reg and tol must be positive".into()));
        }
        check_training_set(x, labels, n_classes)?;
        let n = x.nrows();
        let kernel = cfg.kernel.resolve(x);
        let gram = if n <= FULL_GRAM_LIMIT {
            Gram::Full(kernel.matrix(x, x).as_standard_layout().into_owned())
        } else {
            Gram::Lazy { x, kernel }
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeds::rng(cfg.seed));
        let max_iter = cfg.max_passes.saturating_mul(n.max(100));

        let mut machines = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let sol = solve_binary(&gram, &y, cfg.c_reg, cfg.tol, max_iter, &order);
            if !sol.converged {
                log::warn!(
                    "svm machine for class {class} stopped after {} iterations without meeting tol {}",
                    sol.iterations,
                    cfg.tol
                );
            }
            let support_indices: Vec<usize> = (0..n).filter(|&t| sol.alpha[t] > 0.0).collect();
            machines.push(BinaryMachine {
                support_vectors: x.select(Axis(0), &support_indices),
                alpha: support_indices.iter().map(|&t| sol.alpha[t]).collect(),
                y: support_indices.iter().map(|&t| y[t]).collect(),
                support_indices,
                rho: sol.rho,
                iterations: sol.iterations,
                converged: sol.converged,
            });
        }
        Ok(SvmModel {
            kernel,
            c_reg: cfg.c_reg,
            dim: x.ncols(),
            machines,
        })
    }

    /// Decision value of every machine, `n × C`.
    pub fn decision_values(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.dim, x)?;
        let mut out = Array2::zeros((x.nrows(), self.machines.len()));
        for (c, m) in self.machines.iter().enumerate() {
            out.column_mut(c).assign(&m.decision(&self.kernel, x));
        }
        Ok(out)
    }
}

impl Classifier for SvmModel {
    fn n_classes(&self) -> usize {
        self.machines.len()
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.decision_values(x)
    }
}

impl Persist for SvmModel {
    fn to_container(&self) -> Container {
        let (code, gamma) = match self.kernel {
            Kernel::Linear => (0.0, 0.0),
            Kernel::Rbf { gamma } => (1.0, gamma),
        };
        let mut c = Container::new();
        c.push_vector(
            "params",
            &Array1::from(vec![code, gamma, self.c_reg, self.dim as f64, self.machines.len() as f64]),
        );
        for (k, m) in self.machines.iter().enumerate() {
            c.push(format!("class{k}.sv"), m.support_vectors.clone());
            c.push_vector(format!("class{k}.alpha"), &m.alpha);
            c.push_vector(format!("class{k}.y"), &m.y);
            c.push_vector(
                format!("class{k}.index"),
                &m.support_indices.iter().map(|&i| i as f64).collect(),
            );
            c.push_vector(
                format!("class{k}.rho"),
                &Array1::from(vec![m.rho, m.iterations as f64, if m.converged { 1.0 } else { 0.0 }]),
            );
        }
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        let p = c.vector("params")?;
        if p.len() != 5 {
            return Err(Error::Data("bad svm params entry".into()));
        }
        let kernel = match p[0] as u8 {
            0 => Kernel::Linear,
            1 => Kernel::Rbf { gamma: p[1] },
            other => return Err(Error::Data(format!("unknown kernel code {other}"))),
        };
        let dim = p[3] as usize;
        let mut machines = Vec::new();
        for k in 0..p[4] as usize {
            let rho = c.vector(&format!("class{k}.rho"))?;
            let support_vectors = c.matrix(&format!("class{k}.sv"))?.clone();
            if support_vectors.nrows() > 0 && support_vectors.ncols() != dim {
                return Err(Error::Data("svm support vectors have the wrong width".into()));
            }
            machines.push(BinaryMachine {
                support_vectors,
                alpha: c.vector(&format!("class{k}.alpha"))?,
                y: c.vector(&format!("class{k}.y"))?,
                support_indices: c
                    .vector(&format!("class{k}.index"))?
                    .iter()
                    .map(|&v| v as usize)
                    .collect(),
                rho: rho[0],
                iterations: rho[1] as usize,
                converged: rho[2] != 0.0,
            });
        }
        Ok(SvmModel {
            kernel,
            c_reg: p[2],
            dim,
            machines,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn linear_kernel_matrix_is_gram() {
        let a = array![[1.0, 2.0], [0.0, -1.0]];
        assert_eq!(Kernel::Linear.matrix(a.view(), a.view()), a.dot(&a.t()));
        let k = Kernel::Rbf { gamma: 0.5 }.matrix(a.view(), a.view());
        assert!((k[[0, 1]] - (-0.5f64 * 10.0).exp()).abs() < 1e-15);
        assert_eq!(k[[1, 1]], 1.0);
    }

    #[test]
    fn default_gamma_scales_with_variance() {
        let x = array![[0.0, 0.0], [2.0, 4.0]];
        // per-feature variances 1 and 4, mean 2.5, dim 2 → gamma = 1/5
        match (KernelChoice::Rbf { gamma: None }).resolve(x.view()) {
            Kernel::Rbf { gamma } => assert!((gamma - 0.2).abs() < 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_category_rejected() {
        let x = array![[0.0], [1.0]];
        assert!(SvmModel::fit(x.view(), &[0, 0], 1, &SvmConfig::default()).is_err());
        assert!(SvmModel::fit(x.view(), &[0, 0], 2, &SvmConfig::default()).is_err());
    }

    #[test]
    fn persist_round_trip() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]];
        let m = SvmModel::fit(x.view(), &[0, 0, 1, 1], 2, &SvmConfig::default()).unwrap();
        let back = SvmModel::from_container(&m.to_container()).unwrap();
        assert_eq!(back, m);
    }
}
