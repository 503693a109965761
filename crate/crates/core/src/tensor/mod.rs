//! Dense third-order tensors and the t-product algebra.
//!
//! A [`Tensor3`] of shape `n1 × n2 × n` stores its frontal slices one after
//! another, each slice column-major, so element `(i, j, k)` lives at flat
//! offset `k·n1·n2 + j·n1 + i`. Frontal slices are therefore contiguous
//! `n1 × n2` column-major matrices, which is the access pattern of every
//! solver in this crate.
//!
//! The t-product is available through two independent routes: the Fourier
//! route ([`t_product`], slice-wise products after a DFT along the third
//! mode) and the dense block-circulant route ([`bcirc`] with [`unfold`] and
//! [`fold`]). The second exists for verification and is size-gated.

mod fourier;
pub mod io;
pub(crate) mod kernels;
mod norm;
mod product;

pub use fourier::{dft_slices, direct_dft, idft_slices, FourierSlices};
pub use norm::{op_norm, power_iteration_hermitian, spectral_norm, OP_NORM_MAX_ITERS, OP_NORM_STALL, OP_NORM_TOL};
pub use product::{bcirc, fold, identity_tensor, t_product, t_transpose, unfold, BlockCirculant, BCIRC_MAX_DIM};

use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Dense real tensor of shape `n1 × n2 × n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n: usize) -> Self {
        assert!(n1 > 0 && n2 > 0 && n > 0, "tensor dimensions must be positive");
        Tensor3 { n1, n2, n, data: vec![0.0; n1 * n2 * n] }
    }

    /// Wraps externally supplied data, rejecting bad lengths and non-finite entries.
    pub fn from_vec(n1: usize, n2: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n == 0 {
            return Err(Error::dims(format!("dimensions must be positive, got {n1}x{n2}x{n}")));
        }
        if data.len() != n1 * n2 * n {
            return Err(Error::dims(format!(
                "{}x{}x{} tensor needs {} entries, got {}",
                n1,
                n2,
                n,
                n1 * n2 * n,
                data.len()
            )));
        }
        if let Some(offset) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { offset });
        }
        Ok(Tensor3 { n1, n2, n, data })
    }

    pub fn from_fn(n1: usize, n2: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(n1, n2, n);
        for k in 0..n {
            for j in 0..n2 {
                for i in 0..n1 {
                    t.data[k * n1 * n2 + j * n1 + i] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Builds a tensor from frontal slices given as column-major `n1 × n2` buffers.
    pub fn from_slices(n1: usize, n2: usize, slices: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.len() != n1 * n2 {
                return Err(Error::dims(format!("slice {k} has {} entries, expected {}", s.len(), n1 * n2)));
            }
            data.extend_from_slice(s);
        }
        Tensor3::from_vec(n1, n2, slices.len(), data)
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n)
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Length of the third mode (number of frontal slices).
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn slice_len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.n1 * self.n2 + j * self.n1 + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Frontal slice `k` (0-based) as a column-major `n1 × n2` buffer.
    #[inline]
    pub fn slice(&self, k: usize) -> &[f64] {
        let len = self.slice_len();
        &self.data[k * len..(k + 1) * len]
    }

    #[inline]
    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.slice_len();
        &mut self.data[k * len..(k + 1) * len]
    }

    pub fn slice_is_zero(&self, k: usize) -> bool {
        self.slice(k).iter().all(|&v| v == 0.0)
    }

    /// 0-based indices of the frontal slices holding at least one nonzero.
    pub fn nonzero_slices(&self) -> Vec<usize> {
        (0..self.n).filter(|&k| !self.slice_is_zero(k)).collect()
    }

    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sq().sqrt()
    }

    /// Frobenius norm of frontal slice `k`.
    pub fn slice_fro_norm(&self, k: usize) -> f64 {
        self.slice(k).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Tensor3 {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: f64, x: &Tensor3) {
        assert_eq!(self.dims(), x.dims(), "axpy dimension mismatch");
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims(), other.dims(), "distance dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F / max(‖other‖_F, tiny)`.
    pub fn rel_error(&self, reference: &Tensor3) -> f64 {
        let denom = reference.fro_norm().max(f64::MIN_POSITIVE);
        self.distance(reference) / denom
    }

    /// Row slice `i` (0-based) as a `1 × n2 × n` tensor.
    pub fn row_slice(&self, i: usize) -> Tensor3 {
        Tensor3::from_fn(1, self.n2, self.n, |_, j, k| self.get(i, j, k))
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;

    fn add(self, rhs: &Tensor3) -> Tensor3 {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;

    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_slice_major_column_within_slice() {
        let t = Tensor3::from_fn(3, 2, 4, |i, j, k| (100 * k + 10 * j + i) as f64);
        assert_eq!(t.data()[6 + 3 + 2], 112.0);
        assert_eq!(t.slice(2), &[200.0, 201.0, 202.0, 210.0, 211.0, 212.0]);
    }

    #[test]
    fn from_vec_rejects_non_finite_and_bad_len() {
        assert!(matches!(Tensor3::from_vec(1, 1, 2, vec![0.0]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(
            Tensor3::from_vec(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { offset: 1 })
        ));
    }

    #[test]
    fn fro_norm_of_identity_is_sqrt_n1() {
        let id = identity_tensor(3, 2);
        assert!((id.fro_norm() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(Tensor3::zeros(2, 2, 2).fro_norm(), 0.0);
    }

    #[test]
    fn fro_norm_matches_unfolded_matrix() {
        let t = Tensor3::from_fn(3, 2, 4, |i, j, k| ((i * 7 + j * 3 + k) as f64).sin());
        let u = unfold(&t);
        assert!((t.fro_norm() - u.norm()).abs() <= 1e-15 * t.fro_norm());
    }
}
