use num_complex::Complex64;

use super::fourier::dft_slices;
use super::kernels::{zgemv, zgemv_h};
use super::Tensor3;
use crate::error::{Error, Result};

/// Power iteration stops once `‖aᴴa·v − λv‖ ≤ OP_NORM_TOL·λ`.
pub const OP_NORM_TOL: f64 = 1e-10;
/// Power iteration also stops once the Rayleigh quotient moves by at most
/// `OP_NORM_STALL·λ` in one step, which happens inside tight eigenvalue clusters.
pub const OP_NORM_STALL: f64 = 1e-15;
/// Iteration cap for power iteration.
pub const OP_NORM_MAX_ITERS: usize = 10_000;

fn start_vector(len: usize) -> Vec<f64> {
    let phi = 0.618_033_988_749_894_9;
    let v: Vec<f64> = (0..len).map(|j| 0.5 + ((j as f64 + 1.0) * phi).fract()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Largest singular value of a real column-major `m × k` matrix by power
/// iteration on `aᵀa`.
pub fn spectral_norm(m: usize, k: usize, a: &[f64]) -> Result<f64> {
    assert_eq!(a.len(), m * k, "matrix buffer length");
    if a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut v = start_vector(k);
    let mut w = vec![0.0; m];
    let mut u = vec![0.0; k];
    let mut lambda = 0.0f64;
    for _ in 0..OP_NORM_MAX_ITERS {
        w.iter_mut().for_each(|x| *x = 0.0);
        for (l, &vl) in v.iter().enumerate() {
            for (wi, ai) in w.iter_mut().zip(&a[l * m..(l + 1) * m]) {
                *wi += vl * ai;
            }
        }
        let next: f64 = w.iter().map(|x| x * x).sum();
        for (l, ul) in u.iter_mut().enumerate() {
            *ul = a[l * m..(l + 1) * m].iter().zip(&w).map(|(x, y)| x * y).sum();
        }
        let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if un == 0.0 {
            return Ok(next.sqrt());
        }
        let resid = u.iter().zip(&v).map(|(ul, vl)| (ul - next * vl).powi(2)).sum::<f64>().sqrt();
        for (vl, ul) in v.iter_mut().zip(&u) {
            *vl = ul / un;
        }
        if resid <= OP_NORM_TOL * next || (next - lambda).abs() <= OP_NORM_STALL * next {
            return Ok(next.max(lambda).sqrt());
        }
        lambda = next;
    }
    Err(Error::ConvergenceFailure { iterations: OP_NORM_MAX_ITERS })
}

/// Largest singular value of a complex column-major `m × k` matrix by power
/// iteration on `aᴴa`.
pub fn power_iteration_hermitian(m: usize, k: usize, a: &[Complex64]) -> Result<f64> {
    assert_eq!(a.len(), m * k, "matrix buffer length");
    if a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok(0.0);
    }
    let mut v: Vec<Complex64> = start_vector(k).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    let mut u = vec![Complex64::new(0.0, 0.0); k];
    let mut lambda = 0.0f64;
    for _ in 0..OP_NORM_MAX_ITERS {
        zgemv(m, k, a, &v, &mut w);
        let next: f64 = w.iter().map(|z| z.norm_sqr()).sum();
        zgemv_h(m, k, a, &w, &mut u);
        let un = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if un == 0.0 {
            return Ok(next.sqrt());
        }
        let resid = u.iter().zip(&v).map(|(ul, vl)| (ul - vl * next).norm_sqr()).sum::<f64>().sqrt();
        for (vl, ul) in v.iter_mut().zip(&u) {
            *vl = ul / un;
        }
        if resid <= OP_NORM_TOL * next || (next - lambda).abs() <= OP_NORM_STALL * next {
            return Ok(next.max(lambda).sqrt());
        }
        lambda = next;
    }
    Err(Error::ConvergenceFailure { iterations: OP_NORM_MAX_ITERS })
}

/// Operator norm `sup ‖A*X‖_F / ‖X‖_F`, the 2-norm of `bcirc(A)`.
///
/// Evaluated as the largest singular value over the Fourier slices. A tensor
/// with a single nonzero slice has identical Fourier slices up to a phase, so
/// that slice is used directly.
pub fn op_norm(a: &Tensor3) -> Result<f64> {
    let (n1, n2, n) = a.dims();
    let nonzero = a.nonzero_slices();
    match nonzero.len() {
        0 => return Ok(0.0),
        1 => return spectral_norm(n1, n2, a.slice(nonzero[0])),
        _ => {}
    }
    let f = dft_slices(a);
    let mut best = 0.0f64;
    for k in 0..=n / 2 {
        best = best.max(power_iteration_hermitian(n1, n2, f.slice(k))?);
    }
    Ok(best)
}
