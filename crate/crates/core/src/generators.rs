//! Seeded synthetic systems `A * X* + B_e = B`.
//!
//! Randomness comes from `ChaCha20Rng::seed_from_u64(seed)`, which is
//! portable across platforms. The stream is consumed in a fixed order: the
//! entries of `A` (slice by slice, column-major within a slice), then `X*`,
//! then `B_e`.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{compute_kappa, compute_mu, margin_slice};
use crate::error::{Error, Result};
use crate::tensor::io::{load_tns3, save_tns3};
use crate::tensor::{t_product, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Family {
    Gaussian,
    Uniform01,
    /// Entrywise sum of a standard normal and a `U[0, 1]` draw.
    Mixture,
    /// Square frontal slices with `N(0, 1)` diagonals; needs `n1 == n2`.
    DiagonalSlices,
    /// Slice `p` is supported on its own band of `⌊n1/n⌋` rows, so
    /// `A_pᵀ A_q = 0` for `p ≠ q`. Needs `n1 ≥ n`.
    OrthogonalSlices,
    /// Orthogonal slices plus a dense Gaussian term scaled so that
    /// `max_{i≠j} |⟨A_i, A_j⟩_F| ≤ threshold`.
    NearOrthogonal { threshold: f64 },
    /// Orthogonal (or diagonal) slices plus `scale` times a Gaussian tensor;
    /// `scale` defaults to `1/n³`.
    PerturbedOrthogonal {
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        diagonal_base: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub n: usize,
    pub family: Family,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub normalize_x: bool,
    #[serde(default)]
    pub row_normalize_a: bool,
    /// Target `‖B_e‖_F`; zero gives a consistent system.
    #[serde(default)]
    pub noise_norm: f64,
}

fn default_true() -> bool {
    true
}

impl SystemSpec {
    pub fn new(dims: (usize, usize, usize, usize), family: Family, seed: u64) -> Self {
        SystemSpec {
            n1: dims.0,
            n2: dims.1,
            n3: dims.2,
            n: dims.3,
            family,
            seed,
            normalize_x: true,
            row_normalize_a: false,
            noise_norm: 0.0,
        }
    }

    pub fn with_noise(mut self, noise_norm: f64) -> Self {
        self.noise_norm = noise_norm;
        self
    }

    pub fn with_row_normalization(mut self, on: bool) -> Self {
        self.row_normalize_a = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let SystemSpec { n1, n2, n3, n, .. } = *self;
        if n1 == 0 || n2 == 0 || n3 == 0 || n == 0 {
            return Err(Error::config(format!("dimensions must be positive, got ({n1},{n2},{n3},{n})")));
        }
        if !(self.noise_norm >= 0.0 && self.noise_norm.is_finite()) {
            return Err(Error::config(format!("noise_norm must be finite and non-negative, got {}", self.noise_norm)));
        }
        match self.family {
            Family::DiagonalSlices | Family::PerturbedOrthogonal { diagonal_base: true, .. } if n1 != n2 => {
                Err(Error::config(format!("diagonal slices need n1 == n2, got {n1} and {n2}")))
            }
            Family::OrthogonalSlices | Family::NearOrthogonal { .. } | Family::PerturbedOrthogonal { diagonal_base: false, .. }
                if n1 < n =>
            {
                Err(Error::config(format!("orthogonal slices need n1 >= n, got n1 = {n1}, n = {n}")))
            }
            Family::NearOrthogonal { threshold } if !(threshold > 0.0) => {
                Err(Error::config(format!("near-orthogonal threshold must be positive, got {threshold}")))
            }
            Family::PerturbedOrthogonal { scale: Some(c), .. } if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::config(format!("perturbation scale must be non-negative, got {c}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedSystem {
    pub a: Tensor3,
    pub x_star: Tensor3,
    pub b: Tensor3,
    pub b_e: Option<Tensor3>,
    pub spec: SystemSpec,
}

fn gaussian(rng: &mut ChaCha20Rng, n1: usize, n2: usize, n: usize) -> Tensor3 {
    let data: Vec<f64> = (0..n1 * n2 * n).map(|_| rng.sample(StandardNormal)).collect();
    Tensor3::from_vec(n1, n2, n, data).expect("finite Gaussian draws")
}

fn orthogonal_slices(rng: &mut ChaCha20Rng, n1: usize, n2: usize, n: usize) -> Tensor3 {
    let rows = n1 / n;
    let mut a = Tensor3::zeros(n1, n2, n);
    for p in 0..n {
        for j in 0..n2 {
            for i in p * rows..(p + 1) * rows {
                a.set(i, j, p, rng.sample(StandardNormal));
            }
        }
    }
    a
}

fn diagonal_slices(rng: &mut ChaCha20Rng, n1: usize, n: usize) -> Tensor3 {
    let mut a = Tensor3::zeros(n1, n1, n);
    for p in 0..n {
        for i in 0..n1 {
            a.set(i, i, p, rng.sample(StandardNormal));
        }
    }
    a
}

/// `max_{i≠j} |⟨A_i, A_j⟩_F|` over frontal slices.
pub fn max_slice_inner_product(a: &Tensor3) -> f64 {
    let mut best = 0.0f64;
    for p in 0..a.n() {
        for q in p + 1..a.n() {
            let ip: f64 = a.slice(p).iter().zip(a.slice(q)).map(|(x, y)| x * y).sum();
            best = best.max(ip.abs());
        }
    }
    best
}

/// Largest `c ∈ (0, 1]` found by halving then bisection with
/// `max |⟨·,·⟩| ≤ threshold` for `base + c·noise`.
fn near_orthogonal(base: Tensor3, noise: &Tensor3, threshold: f64) -> Result<Tensor3> {
    let combine = |c: f64| {
        let mut t = base.clone();
        t.axpy(c, noise);
        t
    };
    let fits = |c: f64| max_slice_inner_product(&combine(c)) <= threshold;
    if max_slice_inner_product(&base) > threshold {
        return Err(Error::config("base tensor already violates the inner-product threshold"));
    }
    let mut lo = 1.0;
    let mut halvings = 0;
    while !fits(lo) {
        lo *= 0.5;
        halvings += 1;
        if halvings > 200 {
            return Ok(base);
        }
    }
    let mut hi = if halvings == 0 { lo } else { 2.0 * lo };
    for _ in 0..40 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(combine(lo))
}

/// Rescales every row slice `A_{i::}` to unit Frobenius norm.
pub fn row_normalize(a: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n) = a.dims();
    let mut norms = vec![0.0f64; n1];
    for k in 0..n {
        let s = a.slice(k);
        for j in 0..n2 {
            for (i, nrm) in norms.iter_mut().enumerate() {
                *nrm += s[j * n1 + i].powi(2);
            }
        }
    }
    if let Some(row) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroRowSlice { row: row + 1 });
    }
    let inv: Vec<f64> = norms.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut out = a.clone();
    for k in 0..n {
        let s = out.slice_mut(k);
        for j in 0..n2 {
            for (i, f) in inv.iter().enumerate() {
                s[j * n1 + i] *= f;
            }
        }
    }
    Ok(out)
}

pub fn generate(spec: &SystemSpec) -> Result<GeneratedSystem> {
    spec.validate()?;
    let SystemSpec { n1, n2, n3, n, .. } = *spec;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut a = match spec.family {
        Family::Gaussian => gaussian(&mut rng, n1, n2, n),
        Family::Uniform01 => {
            let data: Vec<f64> = (0..n1 * n2 * n).map(|_| rng.random::<f64>()).collect();
            Tensor3::from_vec(n1, n2, n, data)?
        }
        Family::Mixture => {
            let data: Vec<f64> = (0..n1 * n2 * n)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    g + rng.random::<f64>()
                })
                .collect();
            Tensor3::from_vec(n1, n2, n, data)?
        }
        Family::DiagonalSlices => diagonal_slices(&mut rng, n1, n),
        Family::OrthogonalSlices => orthogonal_slices(&mut rng, n1, n2, n),
        Family::NearOrthogonal { threshold } => {
            let base = orthogonal_slices(&mut rng, n1, n2, n);
            let noise = gaussian(&mut rng, n1, n2, n);
            near_orthogonal(base, &noise, threshold)?
        }
        Family::PerturbedOrthogonal { scale, diagonal_base } => {
            let mut base =
                if diagonal_base { diagonal_slices(&mut rng, n1, n) } else { orthogonal_slices(&mut rng, n1, n2, n) };
            let noise = gaussian(&mut rng, n1, n2, n);
            base.axpy(scale.unwrap_or(1.0 / (n as f64).powi(3)), &noise);
            base
        }
    };
    if spec.row_normalize_a {
        a = row_normalize(&a)?;
    }
    let mut x_star = gaussian(&mut rng, n2, n3, n);
    if spec.normalize_x {
        let norm = x_star.fro_norm();
        x_star.scale(1.0 / norm);
    }
    let mut b = t_product(&a, &x_star)?;
    let b_e = if spec.noise_norm > 0.0 {
        let mut e = gaussian(&mut rng, n1, n3, n);
        let norm = e.fro_norm();
        e.scale(spec.noise_norm / norm);
        b.axpy(1.0, &e);
        Some(e)
    } else {
        None
    };
    Ok(GeneratedSystem { a, x_star, b, b_e, spec: spec.clone() })
}

/// `(α, κ + αμ(n−1) − 1)` for each `α`.
pub fn alpha_feasibility_sweep(a: &Tensor3, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mu = compute_mu(a)?;
    alphas
        .iter()
        .map(|&alpha| Ok((alpha, margin_slice(compute_kappa(a, alpha)?, mu, alpha, a.n()))))
        .collect()
}

/// Writes `A.tns`, `X_star.tns`, `B.tns`, optionally `B_e.tns`, and `system.json`
/// into `dir`.
pub fn save_system(sys: &GeneratedSystem, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    save_tns3(&sys.a, dir.join("A.tns"))?;
    save_tns3(&sys.x_star, dir.join("X_star.tns"))?;
    save_tns3(&sys.b, dir.join("B.tns"))?;
    if let Some(e) = &sys.b_e {
        save_tns3(e, dir.join("B_e.tns"))?;
    }
    fs::write(dir.join("system.json"), serde_json::to_string_pretty(&sys.spec)?)?;
    Ok(())
}

pub fn load_system(dir: impl AsRef<Path>) -> Result<GeneratedSystem> {
    let dir = dir.as_ref();
    let spec: SystemSpec = serde_json::from_str(&fs::read_to_string(dir.join("system.json"))?)?;
    let b_e_path = dir.join("B_e.tns");
    Ok(GeneratedSystem {
        a: load_tns3(dir.join("A.tns"))?,
        x_star: load_tns3(dir.join("X_star.tns"))?,
        b: load_tns3(dir.join("B.tns"))?,
        b_e: if b_e_path.exists() { Some(load_tns3(b_e_path)?) } else { None },
        spec,
    })
}
