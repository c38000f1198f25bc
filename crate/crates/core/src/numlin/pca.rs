use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{center, column_means, covariance, sym_eigen, SymMatrix, EIGEN_FLOOR};
use crate::dataset::io::{Container, Persist};
use crate::error::{Error, Result};

/// Linear projection onto the leading principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `d × k`, orthonormal columns.
    pub components: Array2<f64>,
    /// Sample variance along each component, descending.
    pub variances: Array1<f64>,
}

impl PcaModel {
    /// Fits the top `k` eigenvectors of the sample covariance of `x`.
    ///
    /// When there are fewer rows than columns the eigenproblem is solved on
    /// the `n × n` Gram matrix instead, which yields the same axes.
    pub fn fit(x: ArrayView2<f64>, k: usize) -> Result<Self> {
        let (n, d) = x.dim();
        if n < 2 {
            return Err(Error::Config(format!("pca needs at least 2 rows, got {n}")));
        }
        if k == 0 || k > (n - 1).min(d) {
            return Err(Error::Config(format!(
                "pca component count {k} outside [1, {}]",
                (n - 1).min(d)
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("pca input contains non-finite values".into()));
        }
        let mean = column_means(x);
        if n < d {
            if let Some(model) = Self::fit_gram(x, &mean, k) {
                return Ok(model);
            }
        }
        let eig = sym_eigen(&covariance(x)?)?;
        let components = eig.vectors.slice(ndarray::s![.., ..k]).to_owned();
        let variances = eig.values.slice(ndarray::s![..k]).mapv(|v| v.max(0.0));
        Ok(PcaModel {
            mean,
            components,
            variances,
        })
    }

    fn fit_gram(x: ArrayView2<f64>, mean: &Array1<f64>, k: usize) -> Option<Self> {
        let n = x.nrows();
        let xc = center(x, mean.view());
        let gram = SymMatrix::symmetrize(xc.dot(&xc.t()) / (n as f64 - 1.0));
        let eig = sym_eigen(&gram).ok()?;
        let top = eig.values[0];
        if !(top > 0.0) || eig.values[k - 1] <= EIGEN_FLOOR * top * 1e3 {
            return None;
        }
        let d = x.ncols();
        let mut components = Array2::zeros((d, k));
        for j in 0..k {
            let lambda = eig.values[j];
            let axis = xc.t().dot(&eig.vectors.column(j)) / ((n as f64 - 1.0) * lambda).sqrt();
            components.column_mut(j).assign(&axis);
        }
        super::canonical_signs(&mut components, None);
        Some(PcaModel {
            mean: mean.clone(),
            components,
            variances: eig.values.slice(ndarray::s![..k]).to_owned(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    /// `(X − mean)·components`.
    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "pca transform",
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(center(x, self.mean.view()).dot(&self.components))
    }

    /// `mean + Y·componentsᵀ`.
    pub fn inverse_transform(&self, y: ArrayView2<f64>) -> Result<Array2<f64>> {
        if y.ncols() != self.n_components() {
            return Err(Error::DimensionMismatch {
                context: "pca inverse transform",
                expected: self.n_components(),
                found: y.ncols(),
            });
        }
        Ok(y.dot(&self.components.t()) + &self.mean.view().insert_axis(Axis(0)))
    }
}

impl Persist for PcaModel {
    fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.push_vector("mean", &self.mean);
        c.push("components", self.components.clone());
        c.push_vector("variances", &self.variances);
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        let mean = c.vector("mean")?;
        let components = c.matrix("components")?.clone();
        let variances = c.vector("variances")?;
        if components.nrows() != mean.len() || components.ncols() != variances.len() {
            return Err(Error::Data("inconsistent pca container".into()));
        }
        Ok(PcaModel {
            mean,
            components,
            variances,
        })
    }
}
