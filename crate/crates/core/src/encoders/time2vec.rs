//! Time2Vec: one linear and `k` cosine components of a scalar time.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;

use crate::kg::Month;
use crate::rng::Rng;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Time2VecParams<T> {
    /// Frequencies, `k + 1` entries; entry 0 is the linear slope.
    pub omega: Array1<T>,
    /// Phases, `k + 1` entries.
    pub phi: Array1<T>,
}

impl<T: Scalar> Time2VecParams<T> {
    pub fn new(omega: Array1<T>, phi: Array1<T>) -> Self {
        assert_eq!(omega.len(), phi.len(), "omega and phi lengths differ");
        assert!(omega.len() >= 2, "need at least one periodic component");
        Self { omega, phi }
    }

    /// Frequencies log-uniform over `[1/months, 1]`, phases uniform over `[0, 2pi)`.
    pub fn random(k: usize, months: usize, rng: &mut Rng) -> Self {
        let lo = (1.0 / months.max(1) as f64).ln();
        let omega = (0..=k).map(|_| T::of(rng.random_range(lo..=0.0).exp())).collect();
        let phi = (0..=k).map(|_| T::of(rng.random_range(0.0..2.0 * PI))).collect();
        Self::new(omega, phi)
    }

    /// Number of periodic components.
    pub fn k(&self) -> usize {
        self.omega.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn encode(&self, t: T) -> Array1<T> {
        let mut out = Array1::zeros(self.dim());
        self.encode_into(t, out.view_mut().into_slice().unwrap());
        out
    }

    fn encode_into(&self, t: T, out: &mut [T]) {
        out[0] = self.omega[0] * t + self.phi[0];
        for i in 1..self.dim() {
            out[i] = num_traits::Float::cos(self.omega[i] * t + self.phi[i]);
        }
    }

    /// `months x (k + 1)` table of the encoding of every month index.
    pub fn table(&self, months: usize) -> Array2<T> {
        let mut table = Array2::zeros((months, self.dim()));
        for (m, mut row) in table.rows_mut().into_iter().enumerate() {
            self.encode_into(T::of(m as f64), row.as_slice_mut().unwrap());
        }
        table
    }
}

pub fn time2vec<T: Scalar>(t: T, params: &Time2VecParams<T>) -> Array1<T> {
    params.encode(t)
}

/// Sum of the encodings of the active months, before projection.
pub fn summed_encoding<T: Scalar>(months: &[Month], table: &Array2<T>) -> Array1<T> {
    let mut acc = Array1::zeros(table.ncols());
    for &m in months {
        acc += &table.row(m as usize);
    }
    acc
}

/// Time embedding of one entity from its binary occurrence vector:
/// `(sum of t2v(i) over active i) . projection`. An all-zero vector maps to zero.
pub fn entity_time_embedding<T: Scalar>(
    time_vector: ArrayView1<'_, u8>,
    params: &Time2VecParams<T>,
    projection: &Array2<T>,
) -> Array1<T> {
    assert_eq!(projection.nrows(), params.dim(), "projection rows must equal k + 1");
    let mut acc = Array1::<T>::zeros(params.dim());
    for (i, &b) in time_vector.iter().enumerate() {
        if b != 0 {
            acc += &params.encode(T::of(i as f64));
        }
    }
    acc.dot(projection)
}
