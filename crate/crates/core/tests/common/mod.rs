#![allow(dead_code)]

use std::path::Path;

use eeg_audio::cli::ExperimentConfig;
use eeg_audio::dataset::DatasetManifest;

/// A run small enough for the debug test profile: 4 categories, 32
/// segments, 2 of 4 folds, short DCCA training.
pub fn small_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.manifest = DatasetManifest::build(
        ["dog", "rain", "engine", "speech"].iter().map(|s| s.to_string()).collect(),
        32,
        3,
        2,
        48,
        32,
    )
    .unwrap();
    c.n_folds = 4;
    c.folds = Some(vec![0, 1]);
    c.classifier.pca_dim = 8;
    c.correlation.ks = vec![2, 4, 6];
    for d in [&mut c.correlation.dcca, &mut c.correlation.cdcca] {
        d.hidden = vec![24];
        d.output_dim = 6;
        d.epochs = 8;
    }
    c.output_dir = out.to_path_buf();
    c.master_seed = 17;
    c
}

use eeg_audio::classifiers::{BinaryMachine, Kernel, SvmModel};
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView1, ArrayView2};

pub fn to_na(a: ArrayView2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Sample cross-covariance with the `n − 1` divisor.
pub fn cov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() as f64;
    let ca = a - DMatrix::from_fn(a.nrows(), a.ncols(), |_, j| a.column(j).mean());
    let cb = b - DMatrix::from_fn(b.nrows(), b.ncols(), |_, j| b.column(j).mean());
    ca.transpose() * cb / (n - 1.0)
}

/// Canonical correlations from the generalized eigenproblem
/// `Sxy·Syy⁻¹·Syx·w = ρ²·Sxx·w`, reduced with `Sxx = L·Lᵀ` to the symmetric
/// `L⁻¹·Sxy·Syy⁻¹·Syx·L⁻ᵀ`. Both covariances get `r·I`. Descending.
pub fn oracle_correlations(x: ArrayView2<f64>, y: ArrayView2<f64>, r: f64) -> Vec<f64> {
    let (x, y) = (to_na(x), to_na(y));
    let sxx = cov(&x, &x) + DMatrix::identity(x.ncols(), x.ncols()) * r;
    let syy = cov(&y, &y) + DMatrix::identity(y.ncols(), y.ncols()) * r;
    let sxy = cov(&x, &y);
    let linv = sxx.cholesky().expect("spd").l().try_inverse().unwrap();
    let syy_inv = syy.try_inverse().unwrap();
    let m = &linv * &sxy * syy_inv * sxy.transpose() * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn kernel_value(kernel: &Kernel, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match *kernel {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf { gamma } => (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp(),
    }
}

/// `Σ αᵢ·yᵢ·K(svᵢ, x) − ρ`, summed point by point.
pub fn oracle_decision(m: &BinaryMachine, kernel: &Kernel, x: ArrayView1<f64>) -> f64 {
    let mut s = 0.0;
    for (i, sv) in m.support_vectors.rows().into_iter().enumerate() {
        s += m.alpha[i] * m.y[i] * kernel_value(kernel, sv, x);
    }
    s - m.rho
}

/// Largest KKT violation over the training set on the `y·f(x)` scale:
/// `α = 0` needs `y·f ≥ 1`, free multipliers `y·f = 1`, `α = C` needs `y·f ≤ 1`.
pub fn kkt_residual(model: &SvmModel, x: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for (class, m) in model.machines.iter().enumerate() {
        let mut alpha = vec![0.0; x.nrows()];
        for (k, &i) in m.support_indices.iter().enumerate() {
            alpha[i] = m.alpha[k];
        }
        for (i, row) in x.rows().into_iter().enumerate() {
            let y = if labels[i] == class { 1.0 } else { -1.0 };
            let margin = y * oracle_decision(m, &model.kernel, row);
            let r = if alpha[i] == 0.0 {
                1.0 - margin
            } else if alpha[i] >= model.c_reg {
                margin - 1.0
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(r);
        }
    }
    worst
}

use num_bigint::BigUint;

/// A non-negative rational `num / den` with unreduced big integers.
#[derive(Debug, Clone)]
pub struct Ratio {
    pub num: BigUint,
    pub den: BigUint,
}

impl Ratio {
    pub fn zero() -> Self {
        Ratio { num: BigUint::from(0u8), den: BigUint::from(1u8) }
    }

    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num: num.into(), den: den.into() }
    }

    /// The exact value of a positive finite double.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite() && x >= 0.0);
        if x == 0.0 {
            return Ratio::zero();
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1 << 52) - 1);
        let (m, e) = if biased == 0 { (frac, -1074) } else { (frac | 1 << 52, biased - 1075) };
        if e >= 0 {
            Ratio { num: BigUint::from(m) << e as usize, den: 1u8.into() }
        } else {
            Ratio { num: m.into(), den: BigUint::from(1u8) << (-e) as usize }
        }
    }

    pub fn add(&self, other: &Ratio) -> Ratio {
        Ratio {
            num: &self.num * &other.den + &other.num * &self.den,
            den: &self.den * &other.den,
        }
    }

    pub fn div_int(&self, d: u64) -> Ratio {
        Ratio { num: self.num.clone(), den: &self.den * BigUint::from(d) }
    }

    /// Rounded to the nearest double, ties to even. Normal range only.
    pub fn to_f64(&self) -> f64 {
        if self.num.bits() == 0 {
            return 0.0;
        }
        let mut e = self.num.bits() as i64 - self.den.bits() as i64 - 53;
        loop {
            let (n, d) = if e >= 0 {
                (self.num.clone(), &self.den << e as usize)
            } else {
                (&self.num << (-e) as usize, self.den.clone())
            };
            let q = &n / &d;
            match q.bits() {
                54.. => e += 1,
                ..=52 => e -= 1,
                _ => {
                    let r = &n - &q * &d;
                    let twice = &r << 1usize;
                    let odd = q.bit(0);
                    let q = if twice > d || (twice == d && odd) { q + 1u8 } else { q };
                    let m: u64 = q.try_into().unwrap();
                    return m as f64 * 2f64.powi(e as i32);
                }
            }
        }
    }
}

/// 1-based rank by counting: items scoring strictly higher, plus equal
/// scores with a smaller id.
pub fn counted_rank(scores: &[f64], id: usize) -> usize {
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(i, &s)| s > scores[id] || (s == scores[id] && i < id))
        .count()
}

/// Exact mean of `1 / rank`, rounded once.
pub fn exact_mrr1(rows: &[Vec<f64>], target: &[usize]) -> f64 {
    let mut sum = Ratio::zero();
    for (r, &t) in rows.iter().zip(target) {
        sum = sum.add(&Ratio::new(1, counted_rank(r, t) as u64));
    }
    sum.div_int(rows.len() as u64).to_f64()
}

/// Exact average precision, rounded once.
pub fn exact_ap(scores: &[f64], relevant: &std::collections::HashSet<usize>) -> f64 {
    let mut ranks: Vec<usize> = relevant.iter().map(|&r| counted_rank(scores, r)).collect();
    ranks.sort_unstable();
    let mut sum = Ratio::zero();
    for (i, &r) in ranks.iter().enumerate() {
        sum = sum.add(&Ratio::new(i as u64 + 1, r as u64));
    }
    sum.div_int(ranks.len() as u64).to_f64()
}

/// Exact mean of the rounded per-query average precisions, rounded once.
pub fn exact_map(rows: &[Vec<f64>], relevant: &[std::collections::HashSet<usize>]) -> f64 {
    let mut sum = Ratio::zero();
    for (r, rel) in rows.iter().zip(relevant) {
        sum = sum.add(&Ratio::from_f64(exact_ap(r, rel)));
    }
    sum.div_int(rows.len() as u64).to_f64()
}
