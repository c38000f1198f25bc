use ndarray::{s, Array1, Array2, ArrayView2};

use super::SharedSpace;
use crate::dataset::io::{Container, Persist};
use crate::error::{Error, Result};
use crate::numlin::{center, column_means, covariance, cross_covariance, inv_sqrt_sym, svd};

/// Which view a matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

/// Regularized canonical correlation analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    /// `dx × k`
    pub proj_x: Array2<f64>,
    /// `dy × k`
    pub proj_y: Array2<f64>,
    /// Canonical correlations in `[0, 1]`, descending.
    pub correlations: Array1<f64>,
    pub mean_x: Array1<f64>,
    pub mean_y: Array1<f64>,
    pub rx: f64,
    pub ry: f64,
}

impl CcaModel {
    /// Whitens each view with `(Σ + r·I)^(-1/2)`, then takes the top `k`
    /// singular pairs of the whitened cross-covariance.
    pub fn fit(x: ArrayView2<f64>, y: ArrayView2<f64>, k: usize, rx: f64, ry: f64) -> Result<Self> {
        let n = x.nrows();
        if y.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "cca paired rows",
                expected: n,
                found: y.nrows(),
            });
        }
        if n < 3 {
            return Err(Error::Config(format!("cca needs at least 3 rows, got {n}")));
        }
        let kmax = x.ncols().min(y.ncols()).min(n - 1);
        if k == 0 || k > kmax {
            return Err(Error::Config(format!("cca component count {k} outside [1, {kmax}]")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("cca input contains non-finite values".into()));
        }
        let wx = inv_sqrt_sym(&covariance(x)?, rx)?.into_array();
        let wy = inv_sqrt_sym(&covariance(y)?, ry)?.into_array();
        let t = wx.dot(&cross_covariance(x, y)?).dot(&wy);
        let dec = svd(t.view())?;
        Ok(CcaModel {
            proj_x: wx.dot(&dec.u.slice(s![.., ..k])),
            proj_y: wy.dot(&dec.v.slice(s![.., ..k])),
            correlations: dec.s.slice(s![..k]).mapv(|c| c.clamp(0.0, 1.0)),
            mean_x: column_means(x),
            mean_y: column_means(y),
            rx,
            ry,
        })
    }

    pub fn dim(&self, side: Side) -> usize {
        match side {
            Side::X => self.proj_x.nrows(),
            Side::Y => self.proj_y.nrows(),
        }
    }

    /// Keeps only the first `k` components.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n_components() {
            return Err(Error::Config(format!(
                "cannot keep {k} of {} components",
                self.n_components()
            )));
        }
        Ok(CcaModel {
            proj_x: self.proj_x.slice(s![.., ..k]).to_owned(),
            proj_y: self.proj_y.slice(s![.., ..k]).to_owned(),
            correlations: self.correlations.slice(s![..k]).to_owned(),
            ..self.clone()
        })
    }
}

impl SharedSpace for CcaModel {
    fn n_components(&self) -> usize {
        self.correlations.len()
    }

    /// `(data − mean_side)·proj_side`.
    fn project(&self, data: ArrayView2<f64>, side: Side) -> Result<Array2<f64>> {
        let (mean, proj) = match side {
            Side::X => (&self.mean_x, &self.proj_x),
            Side::Y => (&self.mean_y, &self.proj_y),
        };
        if data.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                context: "cca projection",
                expected: mean.len(),
                found: data.ncols(),
            });
        }
        Ok(center(data, mean.view()).dot(proj))
    }
}

impl Persist for CcaModel {
    fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.push("proj_x", self.proj_x.clone());
        c.push("proj_y", self.proj_y.clone());
        c.push_vector("correlations", &self.correlations);
        c.push_vector("mean_x", &self.mean_x);
        c.push_vector("mean_y", &self.mean_y);
        c.push_vector("ridge", &Array1::from(vec![self.rx, self.ry]));
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        let ridge = c.vector("ridge")?;
        let m = CcaModel {
            proj_x: c.matrix("proj_x")?.clone(),
            proj_y: c.matrix("proj_y")?.clone(),
            correlations: c.vector("correlations")?,
            mean_x: c.vector("mean_x")?,
            mean_y: c.vector("mean_y")?,
            rx: ridge[0],
            ry: ridge[1],
        };
        let k = m.correlations.len();
        if m.proj_x.ncols() != k
            || m.proj_y.ncols() != k
            || m.proj_x.nrows() != m.mean_x.len()
            || m.proj_y.nrows() != m.mean_y.len()
        {
            return Err(Error::Data("inconsistent cca container".into()));
        }
        Ok(m)
    }
}
