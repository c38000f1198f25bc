//! Dense linear algebra used by every downstream stage.
//!
//! Data travels as `ndarray` matrices (rows = observations). Factorizations
//! are delegated to `faer` and converted back, with a deterministic sign
//! convention applied to every returned basis vector.

mod pca;

pub use pca::PcaModel;

use faer::Mat;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest one are floored.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// A square symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    /// Wraps `a` after checking it is square and symmetric within 1e-12
    /// relative to its largest entry.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix",
                expected: r,
                found: c,
            });
        }
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..r {
            for j in (i + 1)..r {
                if (a[[i, j]] - a[[j, i]]).abs() > 1e-12 * scale {
                    return Err(Error::Data(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        a[[i, j]],
                        a[[j, i]]
                    )));
                }
            }
        }
        Ok(SymMatrix(a))
    }

    /// Wraps `a` without validation, averaging it with its transpose so
    /// round-off asymmetry cannot leak into the factorizations.
    pub fn symmetrize(a: Array2<f64>) -> Self {
        let t = a.t().to_owned();
        SymMatrix((a + t) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }
}

/// Symmetric eigendecomposition, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: Array2<f64>,
}

/// Thin SVD `A = U·diag(s)·Vᵀ`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
}

pub(crate) fn to_faer(a: ArrayView2<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Flips the sign of column `j` (and of `partner`'s column `j`, when given)
/// so that the largest-magnitude entry of `basis[:, j]` is positive.
fn canonical_signs(basis: &mut Array2<f64>, mut partner: Option<&mut Array2<f64>>) {
    for j in 0..basis.ncols() {
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for &v in basis.column(j).iter() {
            if v.abs() > best {
                best = v.abs();
                sign = v.signum();
            }
        }
        if sign < 0.0 {
            basis.column_mut(j).mapv_inplace(|v| -v);
            if let Some(p) = partner.as_deref_mut() {
                p.column_mut(j).mapv_inplace(|v| -v);
            }
        }
    }
}

/// Eigendecomposition of a symmetric matrix.
pub fn sym_eigen(s: &SymMatrix) -> Result<SymEigen> {
    let n = s.dim();
    if n == 0 {
        return Ok(SymEigen {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let evd = to_faer(s.as_array().view())
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition did not converge: {e:?}")))?;
    let vals = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending order
    let values = Array1::from_shape_fn(n, |i| vals[n - 1 - i]);
    let mut vectors = Array2::from_shape_fn((n, n), |(i, j)| u[(i, n - 1 - j)]);
    canonical_signs(&mut vectors, None);
    Ok(SymEigen { values, vectors })
}

/// Thin singular value decomposition.
pub fn svd(a: ArrayView2<f64>) -> Result<Svd> {
    let (m, n) = a.dim();
    let p = m.min(n);
    if p == 0 {
        return Ok(Svd {
            u: Array2::zeros((m, 0)),
            s: Array1::zeros(0),
            v: Array2::zeros((n, 0)),
        });
    }
    let dec = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd did not converge: {e:?}")))?;
    let sv = dec.S().column_vector();
    let s = Array1::from_shape_fn(p, |i| sv[i]);
    let mut u = from_faer(dec.U());
    let mut v = from_faer(dec.V());
    canonical_signs(&mut u, Some(&mut v));
    Ok(Svd { u, s, v })
}

/// Inverse square root `(S + eps·I)^(-1/2)`.
///
/// Eigenvalues below `EIGEN_FLOOR · λ_max` are floored to that value.
/// Fails when the ridged matrix has a clearly negative eigenvalue or is
/// identically zero.
pub fn inv_sqrt_sym(s: &SymMatrix, eps: f64) -> Result<SymMatrix> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Config(format!("ridge must be nonnegative, got {eps}")));
    }
    let eig = inv_sqrt_parts(s, eps)?;
    Ok(SymMatrix::symmetrize(eig.compose(|l| l.powf(-0.5))))
}

/// Eigendecomposition of `S + eps·I` with floored eigenvalues.
pub(crate) struct RidgedEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl RidgedEigen {
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let scaled = &self.vectors * &self.values.mapv(f).view().insert_axis(Axis(0));
        scaled.dot(&self.vectors.t())
    }
}

pub(crate) fn inv_sqrt_parts(s: &SymMatrix, eps: f64) -> Result<RidgedEigen> {
    if s.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in covariance".into()));
    }
    let SymEigen { values, vectors } = sym_eigen(s)?;
    let values = values.mapv(|l| l + eps);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Numerical(
            "matrix is not positive definite after ridge (largest eigenvalue ≤ 0)".into(),
        ));
    }
    let floor = EIGEN_FLOOR * max;
    if let Some(&min) = values.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -floor {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite after ridge (eigenvalue {min:e})"
            )));
        }
    }
    let values = values.mapv(|l| l.max(floor));
    Ok(RidgedEigen { values, vectors })
}

/// Column means.
pub fn column_means(x: ArrayView2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()))
}

/// Subtracts `mean` from every row.
pub fn center(x: ArrayView2<f64>, mean: ArrayView1<f64>) -> Array2<f64> {
    &x - &mean.insert_axis(Axis(0))
}

/// Sample cross-covariance `XcᵀYc / (n−1)` of row-paired data.
pub fn cross_covariance(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "paired rows",
            expected: n,
            found: y.nrows(),
        });
    }
    if n < 2 {
        return Err(Error::Data("covariance needs at least two rows".into()));
    }
    let xc = center(x, column_means(x).view());
    let yc = center(y, column_means(y).view());
    Ok(xc.t().dot(&yc) / (n as f64 - 1.0))
}

/// Sample covariance with divisor `n − 1`.
pub fn covariance(x: ArrayView2<f64>) -> Result<SymMatrix> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Data("covariance needs at least two rows".into()));
    }
    let xc = center(x, column_means(x).view());
    Ok(SymMatrix::symmetrize(xc.t().dot(&xc) / (n as f64 - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn random_spd(n: usize, seed: u64) -> SymMatrix {
        let a = random(n, n, seed);
        SymMatrix::symmetrize(a.dot(&a.t()) + Array2::<f64>::eye(n) * 0.1)
    }

    fn random_orthogonal(n: usize, seed: u64) -> Array2<f64> {
        svd(random(n, n, seed).view()).unwrap().u
    }

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn inv_sqrt_of_identity_is_identity() {
        let r = inv_sqrt_sym(&SymMatrix::new(Array2::eye(4)).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(r.as_array(), &Array2::<f64>::eye(4), epsilon = 1e-14);
    }

    #[test]
    fn inv_sqrt_of_diagonal() {
        let s = SymMatrix::new(array![[4.0, 0.0], [0.0, 9.0]]).unwrap();
        let r = inv_sqrt_sym(&s, 0.0).unwrap();
        assert_abs_diff_eq!(r.as_array(), &array![[0.5, 0.0], [0.0, 1.0 / 3.0]], epsilon = 1e-14);
    }

    #[test]
    fn inv_sqrt_multiplies_back_to_identity() {
        for (n, seed) in [(5, 1), (30, 2), (80, 3)] {
            let s = random_spd(n, seed);
            let r = inv_sqrt_sym(&s, 0.0).unwrap();
            let back = r.as_array().dot(s.as_array()).dot(r.as_array());
            assert!(max_abs(&(back - Array2::<f64>::eye(n))) < 1e-10);
            let r = r.as_array();
            assert!(max_abs(&(r - &r.t())) < 1e-12);
        }
    }

    #[test]
    fn inv_sqrt_applies_ridge() {
        let s = SymMatrix::new(array![[0.0, 0.0], [0.0, 3.0]]).unwrap();
        let r = inv_sqrt_sym(&s, 1.0).unwrap();
        assert_abs_diff_eq!(r.as_array(), &array![[1.0, 0.0], [0.0, 0.5]], epsilon = 1e-14);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let s = SymMatrix::new(array![[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!(matches!(inv_sqrt_sym(&s, 0.0), Err(Error::Numerical(_))));
        let z = SymMatrix::new(Array2::zeros((3, 3))).unwrap();
        assert!(matches!(inv_sqrt_sym(&z, 0.0), Err(Error::Numerical(_))));
    }

    #[test]
    fn inv_sqrt_is_rotation_equivariant() {
        let s = random_spd(12, 9);
        let q = random_orthogonal(12, 10);
        let rotated = SymMatrix::symmetrize(q.dot(s.as_array()).dot(&q.t()));
        let lhs = inv_sqrt_sym(&rotated, 0.0).unwrap().into_array();
        let rhs = q.dot(inv_sqrt_sym(&s, 0.0).unwrap().as_array()).dot(&q.t());
        assert!(max_abs(&(lhs - rhs)) < 1e-9);
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(SymMatrix::new(array![[1.0, 2.0], [0.0, 1.0]]).is_err());
        assert!(SymMatrix::new(Array2::zeros((2, 3))).is_err());
    }

    #[test]
    fn svd_reconstructs() {
        for (m, n, seed) in [(200, 200, 4), (50, 120, 5), (120, 7, 6)] {
            let a = random(m, n, seed);
            let Svd { u, s, v } = svd(a.view()).unwrap();
            let back = (&u * &s.view().insert_axis(Axis(0))).dot(&v.t());
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let resid = (&a - &back).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(resid / norm < 1e-10);
            assert!(s.windows(2).into_iter().all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigen_reconstructs_and_sorts() {
        let s = random_spd(200, 7);
        let e = sym_eigen(&s).unwrap();
        assert!(e.values.windows(2).into_iter().all(|w| w[0] >= w[1]));
        let back = (&e.vectors * &e.values.view().insert_axis(Axis(0))).dot(&e.vectors.t());
        let norm = s.as_array().iter().map(|x| x * x).sum::<f64>().sqrt();
        let resid = (s.as_array() - &back).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(resid / norm < 1e-10);
        for j in 0..e.vectors.ncols() {
            let col = e.vectors.column(j);
            let big = col.iter().cloned().fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn covariance_uses_unbiased_divisor() {
        let x = array![[1.0], [3.0]];
        assert_abs_diff_eq!(covariance(x.view()).unwrap().as_array()[[0, 0]], 2.0);
        assert!(covariance(array![[1.0, 2.0]].view()).is_err());
    }
}
