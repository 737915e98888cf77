//! Whitening with dimension reduction: center, rotate onto the covariance
//! eigenbasis, rescale each axis to unit variance and keep the leading axes.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Axis};

use super::EmbeddingSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues below this are floored before inversion.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct WhiteningTransform<T> {
    pub mean: Array1<T>,
    /// `d_in x d_out`, columns ordered by descending eigenvalue.
    pub projection: Array2<T>,
    /// Eigenvalues of the kept directions, descending, before flooring.
    pub eigenvalues: Array1<T>,
}

impl<T: Scalar> WhiteningTransform<T> {
    pub fn in_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.projection.ncols()
    }
}

/// Population covariance (divides by `N`).
pub(crate) fn covariance<T: Scalar>(x: &Array2<T>, mean: &Array1<T>) -> Array2<T> {
    let centered = x - mean;
    centered.t().dot(&centered) / T::of(x.nrows() as f64)
}

pub fn fit_whitening<T: Scalar>(embeddings: &EmbeddingSet<T>, out_dim: usize) -> Result<WhiteningTransform<T>> {
    let x = embeddings.matrix();
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::invalid(format!("whitening needs at least 2 rows, got {n}")));
    }
    if out_dim == 0 || out_dim > d {
        return Err(Error::invalid(format!("whitening output dim {out_dim} not in 1..={d}")));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let cov = covariance(x, &mean);
    // decomposed in double precision whatever T is: single-precision Jacobi
    // sweeps on wide, rank-deficient covariances do not reliably converge
    let cov = DMatrix::from_fn(d, d, |i, j| 0.5 * (cov[[i, j]].as_f64() + cov[[j, i]].as_f64()));
    let eig = cov.symmetric_eigen();
    if eig
        .eigenvalues
        .iter()
        .chain(eig.eigenvectors.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::invalid("covariance eigendecomposition did not converge"));
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order.truncate(out_dim);

    let mut projection = Array2::zeros((d, out_dim));
    let mut eigenvalues = Array1::zeros(out_dim);
    for (col, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        eigenvalues[col] = T::of(lambda);
        let scale = 1.0 / lambda.max(EIGEN_FLOOR).sqrt();
        for row in 0..d {
            projection[[row, col]] = T::of(eig.eigenvectors[(row, k)] * scale);
        }
    }
    Ok(WhiteningTransform {
        mean,
        projection,
        eigenvalues,
    })
}

pub fn apply_whitening<T: Scalar>(
    transform: &WhiteningTransform<T>,
    embeddings: &EmbeddingSet<T>,
) -> Result<EmbeddingSet<T>> {
    if embeddings.dim() != transform.in_dim() {
        return Err(Error::DimMismatch {
            expected: transform.in_dim(),
            actual: embeddings.dim(),
        });
    }
    let out = (embeddings.matrix() - &transform.mean).dot(&transform.projection);
    EmbeddingSet::new(out)
}
