use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fourier::{dft_slices, idft_slices, FourierSlices};
use super::kernels::zgemm_nn;
use super::Tensor3;
use crate::error::{Error, Result};

/// Largest row or column count of a dense block-circulant matrix [`bcirc`] will build.
pub const BCIRC_MAX_DIM: usize = 4096;

/// Dense `n1·n × n2·n` block-circulant matrix of a tensor.
#[derive(Clone, Debug)]
pub struct BlockCirculant {
    n1: usize,
    n2: usize,
    n: usize,
    matrix: DMatrix<f64>,
}

impl BlockCirculant {
    /// Shape of the tensor the matrix was built from.
    pub fn source_dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Block `(r, c)`, 0-based, as an `n1 × n2` matrix.
    pub fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        self.matrix.view((r * self.n1, c * self.n2), (self.n1, self.n2)).into_owned()
    }
}

/// Stacks the frontal slices vertically into an `n1·n × n2` matrix.
pub fn unfold(a: &Tensor3) -> DMatrix<f64> {
    let (n1, n2, n) = a.dims();
    DMatrix::from_fn(n1 * n, n2, |r, j| a.get(r % n1, j, r / n1))
}

/// Inverse of [`unfold`]: splits the rows of `m` into `n` frontal slices.
pub fn fold(m: &DMatrix<f64>, n: usize) -> Result<Tensor3> {
    if n == 0 || !m.nrows().is_multiple_of(n) || m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::dims(format!("cannot fold a {}x{} matrix into {n} slices", m.nrows(), m.ncols())));
    }
    let n1 = m.nrows() / n;
    Ok(Tensor3::from_fn(n1, m.ncols(), n, |i, j, k| m[(k * n1 + i, j)]))
}

/// Dense block-circulant matrix whose block `(r, c)` is slice `(r − c) mod n`.
///
/// Only for verification: refuses to build matrices with a side above
/// [`BCIRC_MAX_DIM`].
pub fn bcirc(a: &Tensor3) -> Result<BlockCirculant> {
    let (n1, n2, n) = a.dims();
    if n1 * n > BCIRC_MAX_DIM || n2 * n > BCIRC_MAX_DIM {
        return Err(Error::config(format!(
            "block-circulant matrix of {}x{} exceeds the {BCIRC_MAX_DIM} size gate",
            n1 * n,
            n2 * n
        )));
    }
    let matrix = DMatrix::from_fn(n1 * n, n2 * n, |r, c| {
        let (br, i) = (r / n1, r % n1);
        let (bc, j) = (c / n2, c % n2);
        a.get(i, j, (br + n - bc) % n)
    });
    Ok(BlockCirculant { n1, n2, n, matrix })
}

/// Identity tensor: slice 0 is `I_{n1}`, every other slice is zero.
pub fn identity_tensor(n1: usize, n: usize) -> Tensor3 {
    let mut t = Tensor3::zeros(n1, n1, n);
    for i in 0..n1 {
        t.set(i, i, 0, 1.0);
    }
    t
}

/// Tensor transpose: transposes every slice and reverses slices `1..n`.
pub fn t_transpose(a: &Tensor3) -> Tensor3 {
    let (n1, n2, n) = a.dims();
    Tensor3::from_fn(n2, n1, n, |i, j, k| a.get(j, i, (n - k) % n))
}

/// t-product `A * X` through slice-wise products in the Fourier domain.
pub fn t_product(a: &Tensor3, x: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n) = a.dims();
    let (m2, n3, m) = x.dims();
    if n2 != m2 || n != m {
        return Err(Error::dims(format!("cannot multiply {n1}x{n2}x{n} by {m2}x{n3}x{m}")));
    }
    let fa = dft_slices(a);
    let fx = dft_slices(x);
    let mut out = FourierSlices::zeros(n1, n3, n);
    for k in 0..=n / 2 {
        let mut c = vec![Complex64::new(0.0, 0.0); n1 * n3];
        zgemm_nn(n1, n2, n3, fa.slice(k), fx.slice(k), &mut c);
        out.slice_mut(k).copy_from_slice(&c);
    }
    out.fill_conjugate_half();
    idft_slices(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n1: usize, n2: usize, n: usize, salt: usize) -> Tensor3 {
        Tensor3::from_fn(n1, n2, n, |i, j, k| (((i + 1) * 13 + (j + 2) * 7 + (k + 3) * 5 + salt) as f64 * 0.731).sin())
    }

    fn oracle(a: &Tensor3, x: &Tensor3) -> Tensor3 {
        let m = bcirc(a).unwrap().into_matrix() * unfold(x);
        fold(&m, a.n()).unwrap()
    }

    #[test]
    fn unfold_of_single_slice_is_the_slice() {
        let a = sample(3, 2, 1, 0);
        let u = unfold(&a);
        assert_eq!(u.as_slice(), a.slice(0));
    }

    #[test]
    fn unfold_identity_and_fold_round_trip() {
        let id = identity_tensor(2, 2);
        let u = unfold(&id);
        let expected = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(u, expected);
        assert_eq!(fold(&u, 2).unwrap(), id);
        let a = sample(3, 2, 4, 1);
        assert_eq!(fold(&unfold(&a), 4).unwrap(), a);
        assert_eq!(fold(&DMatrix::zeros(6, 2), 3).unwrap(), Tensor3::zeros(2, 2, 3));
        assert!(matches!(fold(&DMatrix::zeros(5, 2), 2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bcirc_block_pattern() {
        let a = sample(2, 3, 3, 2);
        let bc = bcirc(&a).unwrap();
        let s = |k: usize| DMatrix::from_column_slice(2, 3, a.slice(k));
        // [[A1,A3,A2],[A2,A1,A3],[A3,A2,A1]]
        let pattern = [[0, 2, 1], [1, 0, 2], [2, 1, 0]];
        for (r, row) in pattern.iter().enumerate() {
            for (c, &k) in row.iter().enumerate() {
                assert_eq!(bc.block(r, c), s(k));
            }
        }
        let b = sample(2, 2, 2, 3);
        let bb = bcirc(&b).unwrap();
        assert_eq!(bb.block(0, 1), bb.block(1, 0));
        assert_eq!(bb.block(0, 0), bb.block(1, 1));
        assert_eq!(bcirc(&identity_tensor(2, 3)).unwrap().into_matrix(), DMatrix::identity(6, 6));
    }

    #[test]
    fn bcirc_is_size_gated() {
        let a = Tensor3::zeros(1, 4097, 1);
        assert!(bcirc(&a).is_err());
    }

    #[test]
    fn matrix_vector_case() {
        let a = sample(3, 2, 1, 4);
        let x = sample(2, 1, 1, 5);
        let y = t_product(&a, &x).unwrap();
        for i in 0..3 {
            let expect = a.get(i, 0, 0) * x.get(0, 0, 0) + a.get(i, 1, 0) * x.get(1, 0, 0);
            assert!((y.get(i, 0, 0) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_is_neutral() {
        let a = sample(3, 2, 4, 6);
        let left = t_product(&identity_tensor(3, 4), &a).unwrap();
        let right = t_product(&a, &identity_tensor(2, 4)).unwrap();
        assert!(left.rel_error(&a) < 1e-14);
        assert!(right.rel_error(&a) < 1e-14);
        assert_eq!(t_transpose(&identity_tensor(3, 4)), identity_tensor(3, 4));
    }

    #[test]
    fn fourier_path_matches_block_circulant() {
        let a = sample(3, 2, 4, 7);
        let x = sample(2, 2, 4, 8);
        let y = t_product(&a, &x).unwrap();
        assert!(y.rel_error(&oracle(&a, &x)) < 1e-12);
    }

    #[test]
    fn transpose_rules() {
        let a = sample(3, 2, 4, 9);
        let b = sample(2, 2, 4, 10);
        assert_eq!(t_transpose(&t_transpose(&a)), a);
        let lhs = t_transpose(&t_product(&a, &b).unwrap());
        let rhs = t_product(&t_transpose(&b), &t_transpose(&a)).unwrap();
        assert!(lhs.rel_error(&rhs) < 1e-12);
        let m = sample(3, 2, 1, 11);
        let mt = t_transpose(&m);
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(mt.get(j, i, 0), m.get(i, j, 0));
            }
        }
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let a = sample(3, 2, 4, 0);
        assert!(t_product(&a, &sample(3, 2, 4, 0)).is_err());
        assert!(t_product(&a, &sample(2, 2, 3, 0)).is_err());
    }
}
