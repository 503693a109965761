use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::Tensor3;
use crate::error::{Error, Result};

/// Relative bound on the imaginary residue accepted by [`idft_slices`].
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// Frontal slices of a tensor after a DFT along the third mode.
///
/// Slice `k` holds the Fourier coefficient `k` of every tube, laid out as a
/// column-major `n1 × n2` complex matrix.
#[derive(Clone, Debug)]
pub struct FourierSlices {
    n1: usize,
    n2: usize,
    n: usize,
    data: Vec<Complex64>,
}

impl FourierSlices {
    pub fn zeros(n1: usize, n2: usize, n: usize) -> Self {
        FourierSlices { n1, n2, n, data: vec![Complex64::new(0.0, 0.0); n1 * n2 * n] }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n)
    }

    pub fn slice(&self, k: usize) -> &[Complex64] {
        let len = self.n1 * self.n2;
        &self.data[k * len..(k + 1) * len]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [Complex64] {
        let len = self.n1 * self.n2;
        &mut self.data[k * len..(k + 1) * len]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest `|slice(n−k) − conj(slice(k))|` relative to the largest coefficient.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 1..self.n {
            let a = self.slice(k);
            let b = self.slice(self.n - k);
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y.conj()).norm());
            }
        }
        worst / scale
    }

    /// Copies `slice(k)` conjugated into `slice(n−k)` for every `k` in the
    /// lower half, restoring exact conjugate symmetry.
    pub(crate) fn fill_conjugate_half(&mut self) {
        let len = self.n1 * self.n2;
        for k in 1..self.n.div_ceil(2) {
            let (lo, hi) = self.data.split_at_mut((self.n - k) * len);
            let src = &lo[k * len..(k + 1) * len];
            for (d, s) in hi[..len].iter_mut().zip(src) {
                *d = s.conj();
            }
        }
    }
}

/// Transforms every tube `A(i, j, :)` with a forward DFT.
pub fn dft_slices(a: &Tensor3) -> FourierSlices {
    let (n1, n2, n) = a.dims();
    let tubes = n1 * n2;
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); tubes * n];
    for k in 0..n {
        let s = a.slice(k);
        for (t, &v) in s.iter().enumerate() {
            buf[t * n + k] = Complex64::new(v, 0.0);
        }
    }
    if n > 1 {
        let fft = FftPlanner::new().plan_fft_forward(n);
        fft.process(&mut buf);
    }
    let mut out = FourierSlices::zeros(n1, n2, n);
    for k in 0..n {
        let dst = out.slice_mut(k);
        for (t, d) in dst.iter_mut().enumerate() {
            *d = buf[t * n + k];
        }
    }
    out
}

/// Inverse of [`dft_slices`].
///
/// Fails with [`Error::ImaginaryResidue`] when the inverse transform carries an
/// imaginary part above `1e-9·‖result‖_F`, which means the input was not the
/// transform of a real tensor.
pub fn idft_slices(f: &FourierSlices) -> Result<Tensor3> {
    let (n1, n2, n) = f.dims();
    let tubes = n1 * n2;
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); tubes * n];
    for k in 0..n {
        for (t, &z) in f.slice(k).iter().enumerate() {
            buf[t * n + k] = z;
        }
    }
    if n > 1 {
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        ifft.process(&mut buf);
    }
    let inv_n = 1.0 / n as f64;
    let mut out = Tensor3::zeros(n1, n2, n);
    let mut residue = 0.0f64;
    for k in 0..n {
        let dst = out.slice_mut(k);
        for (t, d) in dst.iter_mut().enumerate() {
            let z = buf[t * n + k] * inv_n;
            residue = residue.max(z.im.abs());
            *d = z.re;
        }
    }
    let limit = IMAG_RESIDUE_TOL * out.fro_norm();
    if residue > limit && residue > f64::MIN_POSITIVE {
        return Err(Error::ImaginaryResidue { residue, limit });
    }
    Ok(out)
}

/// Direct `O(n²)` DFT of one complex sequence, `sign = -1` forward and
/// `sign = +1` for the unnormalized inverse.
pub fn direct_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    let theta = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    v * Complex64::new(theta.cos(), theta.sin())
                })
                .sum()
        })
        .collect()
}
