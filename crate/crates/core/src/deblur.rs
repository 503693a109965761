//! Gaussian deblurring with a banded t-product blur operator.
//!
//! An `H × W` grayscale image becomes the `H × 1 × W` tensor `X(i, 0, k) =
//! pixel(i, k)`; `F` frames become `H × F × W`. With the `N × N × N`
//! operator from [`build_blur_operator`] and `N = H = W`, the observation
//! `B = A * X` blurs both spatial axes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{solve, SolveConfig, SolverKind};
use crate::tensor::{t_product, Tensor3};

/// PSNR reported for a perfect reconstruction, and the cap applied to every PSNR.
pub const PSNR_CAP_DB: f64 = 99.0;
pub const SSIM_C1: f64 = 1e-4;
pub const SSIM_C2: f64 = 9e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurSpec {
    /// Operator size `N`; the operator is `N × N × N`.
    pub size: usize,
    /// Number of Gaussian taps `B`.
    pub band: usize,
    pub sigma: f64,
}

impl BlurSpec {
    pub fn new(size: usize, band: usize, sigma: f64) -> Self {
        BlurSpec { size, band, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        if self.band == 0 || self.band > self.size {
            return Err(Error::config(format!("band {} must lie in 1..={}", self.band, self.size)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// `z1[k] = exp(−k²/(2σ²))` for `k < B`, zero afterwards.
    pub fn taps(&self) -> Vec<f64> {
        (0..self.size)
            .map(|k| if k < self.band { (-((k * k) as f64) / (2.0 * self.sigma * self.sigma)).exp() } else { 0.0 })
            .collect()
    }

    /// `1/(σ√(2π))`.
    pub fn scale(&self) -> f64 {
        1.0 / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// Banded blur operator: with `A1 = c·toeplitz(z1, [z1[0], reverse(z1[1..])])`
/// and `A2 = c·toeplitz(z1)`, slice `i` is `A1[i, 1]·A2 = c·z1[i−1]·A2`.
pub fn build_blur_operator(spec: &BlurSpec) -> Result<Tensor3> {
    spec.validate()?;
    let n = spec.size;
    let z1 = spec.taps();
    let c = spec.scale();
    let a2 = DMatrix::from_fn(n, n, |i, j| c * z1[i.abs_diff(j)]);
    let mut a = Tensor3::zeros(n, n, n);
    for (p, &tap) in z1.iter().enumerate() {
        // A1[p, 0] = c·z1[p]: the first column of the Toeplitz factor.
        let coef = c * tap;
        if coef == 0.0 {
            continue;
        }
        for (dst, src) in a.slice_mut(p).iter_mut().zip(a2.as_slice()) {
            *dst = coef * src;
        }
    }
    Ok(a)
}

/// The dense `A1` factor whose first column scales the operator slices.
pub fn blur_column_factor(spec: &BlurSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.size;
    let z1 = spec.taps();
    let mut z2 = vec![z1[0]];
    z2.extend(z1[1..].iter().rev());
    let c = spec.scale();
    Ok(DMatrix::from_fn(n, n, |i, j| c * if i >= j { z1[i - j] } else { z2[j - i] }))
}

/// `σ_max / σ_min` of frontal slice `p`; infinite for a singular slice.
pub fn slice_condition_number(a: &Tensor3, p: usize) -> f64 {
    let m = DMatrix::from_column_slice(a.n1(), a.n2(), a.slice(p));
    let sv = m.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn blur(a: &Tensor3, x: &Tensor3) -> Result<Tensor3> {
    t_product(a, x)
}

/// Grayscale image with intensities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::dims(format!("{width}x{height} image with {} pixels", pixels.len())));
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        GrayImage { width, height, pixels: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Checkerboard of `square × square` tiles, top-left tile black.
pub fn checkerboard(width: usize, height: usize, square: usize) -> GrayImage {
    let sq = square.max(1);
    let pixels = (0..height)
        .flat_map(|r| (0..width).map(move |c| if (r / sq + c / sq) % 2 == 1 { 1.0 } else { 0.0 }))
        .collect();
    GrayImage { width, height, pixels }
}

/// Anisotropic total variation `Σ |∇_x| + |∇_y|`.
pub fn total_variation(img: &GrayImage) -> f64 {
    let mut tv = 0.0;
    for r in 0..img.height {
        for c in 0..img.width {
            if c + 1 < img.width {
                tv += (img.get(r, c + 1) - img.get(r, c)).abs();
            }
            if r + 1 < img.height {
                tv += (img.get(r + 1, c) - img.get(r, c)).abs();
            }
        }
    }
    tv
}

fn next_token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(Error::Format("unexpected end of PGM header".into()));
        }
        match byte[0] {
            b'#' if tok.is_empty() => {
                let mut line = Vec::new();
                r.read_until(b'\n', &mut line)?;
            }
            b if b.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    return Ok(tok);
                }
            }
            b => tok.push(b as char),
        }
    }
}

fn header_number<R: BufRead>(r: &mut R, what: &str) -> Result<usize> {
    let tok = next_token(r)?;
    tok.parse().map_err(|_| Error::Format(format!("bad PGM {what} {tok:?}")))
}

/// Reads a binary (`P5`) PGM with maxval up to 65535.
pub fn read_pgm<R: Read>(reader: R) -> Result<GrayImage> {
    let mut r = BufReader::new(reader);
    let magic = next_token(&mut r)?;
    if magic != "P5" {
        return Err(Error::Format(format!("expected P5 magic, found {magic:?}")));
    }
    let width = header_number(&mut r, "width")?;
    let height = header_number(&mut r, "height")?;
    let maxval = header_number(&mut r, "maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("bad PGM header {width}x{height} maxval {maxval}")));
    }
    let wide = maxval > 255;
    let count = width * height;
    let mut raw = vec![0u8; count * if wide { 2 } else { 1 }];
    r.read_exact(&mut raw).map_err(|_| Error::Format("truncated PGM raster".into()))?;
    let max = maxval as f64;
    let pixels = if wide {
        raw.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / max).collect()
    } else {
        raw.iter().map(|&b| b as f64 / max).collect()
    };
    let img = GrayImage { width, height, pixels };
    if img.pixels.iter().any(|&v| v > 1.0) {
        return Err(Error::Format("PGM sample exceeds maxval".into()));
    }
    Ok(img)
}

/// Writes an 8-bit binary PGM, clamping intensities to `[0, 1]`.
pub fn write_pgm<W: Write>(img: &GrayImage, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
    let bytes: Vec<u8> = img.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    read_pgm(File::open(path)?)
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(img, File::create(path)?)
}

/// Stacks frames into an `H × F × W` tensor.
pub fn frames_to_tensor(frames: &[GrayImage]) -> Result<Tensor3> {
    let first = frames.first().ok_or_else(|| Error::config("no frames"))?;
    let (h, w) = (first.height, first.width);
    if frames.iter().any(|f| f.height != h || f.width != w) {
        return Err(Error::dims("frames differ in size"));
    }
    Ok(Tensor3::from_fn(h, frames.len(), w, |i, j, k| frames[j].get(i, k)))
}

pub fn image_to_tensor(img: &GrayImage) -> Tensor3 {
    frames_to_tensor(std::slice::from_ref(img)).expect("single frame")
}

/// Frame `j` of an `H × F × W` tensor, values left unclamped.
pub fn tensor_frame(x: &Tensor3, j: usize) -> GrayImage {
    let (h, _, w) = x.dims();
    let pixels = (0..h).flat_map(|i| (0..w).map(move |k| x.get(i, j, k))).collect();
    GrayImage { width: w, height: h, pixels }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameQuality {
    pub frame: usize,
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub frames: Vec<FrameQuality>,
    pub mean_mse: f64,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl QualityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame,mse,psnr,ssim\n");
        for f in &self.frames {
            s.push_str(&format!("{},{},{},{}\n", f.frame, f.mse, f.psnr, f.ssim));
        }
        s
    }
}

/// `10·log10(1/mse)` with peak 1, capped at [`PSNR_CAP_DB`].
pub fn psnr(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// Global-statistics SSIM of two equally sized samples.
pub fn ssim_global(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    vx /= m;
    vy /= m;
    cxy /= m;
    ((2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2)) / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2))
}

/// Per-frame MSE, PSNR and SSIM of `rec` against `reference`, frames indexed
/// by the second mode.
pub fn score(reference: &Tensor3, rec: &Tensor3) -> Result<QualityReport> {
    if reference.dims() != rec.dims() {
        return Err(Error::dims(format!("cannot score {:?} against {:?}", rec.dims(), reference.dims())));
    }
    let frames: Vec<FrameQuality> = (0..reference.n2())
        .map(|j| {
            let x = tensor_frame(reference, j).pixels;
            let y = tensor_frame(rec, j).pixels;
            let mse = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
            FrameQuality { frame: j, mse, psnr: psnr(mse), ssim: ssim_global(&x, &y) }
        })
        .collect();
    let f = frames.len() as f64;
    Ok(QualityReport {
        mean_mse: frames.iter().map(|q| q.mse).sum::<f64>() / f,
        mean_psnr: frames.iter().map(|q| q.psnr).sum::<f64>() / f,
        mean_ssim: frames.iter().map(|q| q.ssim).sum::<f64>() / f,
        frames,
    })
}

/// Blurred observation, reconstruction and both quality reports.
#[derive(Clone, Debug)]
pub struct DeblurOutcome {
    pub blurred: Tensor3,
    pub recovered: Tensor3,
    pub blurred_quality: QualityReport,
    pub recovered_quality: QualityReport,
}

/// Blurs `x` with `a`, reconstructs it with `kind`, and scores both.
pub fn deblur(a: &Tensor3, x: &Tensor3, kind: SolverKind, cfg: &SolveConfig) -> Result<DeblurOutcome> {
    let blurred = blur(a, x)?;
    let (recovered, _) = solve(kind, a, &blurred, cfg)?;
    Ok(DeblurOutcome {
        blurred_quality: score(x, &blurred)?,
        recovered_quality: score(x, &recovered)?,
        blurred,
        recovered,
    })
}
