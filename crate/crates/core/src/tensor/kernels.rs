//! Column-major dense kernels shared by the slice products.
//!
//! Every kernel walks its operands in a fixed order, so repeated calls with
//! the same inputs are bit-identical.

use num_complex::Complex64;

/// `c (m×n) += scale · a (m×k) · b (k×n)`.
pub(crate) fn gemm_nn(m: usize, k: usize, n: usize, scale: f64, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for j in 0..n {
        let col = &mut c[j * m..(j + 1) * m];
        for l in 0..k {
            let coef = scale * b[l + j * k];
            if coef == 0.0 {
                continue;
            }
            let a_col = &a[l * m..(l + 1) * m];
            for (ci, ai) in col.iter_mut().zip(a_col) {
                *ci += coef * ai;
            }
        }
    }
}

/// `c (m×n) += scale · aᵀ · b` where `a` is `k×m` and `b` is `k×n`.
pub(crate) fn gemm_tn(m: usize, k: usize, n: usize, scale: f64, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for j in 0..n {
        let b_col = &b[j * k..(j + 1) * k];
        for i in 0..m {
            let a_col = &a[i * k..(i + 1) * k];
            let dot: f64 = a_col.iter().zip(b_col).map(|(x, y)| x * y).sum();
            c[i + j * m] += scale * dot;
        }
    }
}

/// `c (m×n) += a (m×k) · b (k×n)` over complex entries.
pub(crate) fn zgemm_nn(m: usize, k: usize, n: usize, a: &[Complex64], b: &[Complex64], c: &mut [Complex64]) {
    for j in 0..n {
        let col = &mut c[j * m..(j + 1) * m];
        for l in 0..k {
            let coef = b[l + j * k];
            if coef.re == 0.0 && coef.im == 0.0 {
                continue;
            }
            let a_col = &a[l * m..(l + 1) * m];
            for (ci, ai) in col.iter_mut().zip(a_col) {
                *ci += coef * ai;
            }
        }
    }
}

/// `y (m) = a (m×k) · x (k)` over complex entries.
pub(crate) fn zgemv(m: usize, k: usize, a: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    for (l, &coef) in x.iter().enumerate().take(k) {
        let a_col = &a[l * m..(l + 1) * m];
        for (yi, ai) in y.iter_mut().zip(a_col) {
            *yi += coef * ai;
        }
    }
}

/// `y (k) = aᴴ · x` where `a` is `m×k` and `x` has length `m`.
pub(crate) fn zgemv_h(m: usize, k: usize, a: &[Complex64], x: &[Complex64], y: &mut [Complex64]) {
    for (l, yl) in y.iter_mut().enumerate().take(k) {
        let a_col = &a[l * m..(l + 1) * m];
        *yl = a_col.iter().zip(x).map(|(ai, xi)| ai.conj() * xi).sum();
    }
}
