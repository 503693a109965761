//! Convergence constants, bound sequences and the per-iteration cost model.
//!
//! For a learning rate `α` and padded slices `Ã_i`:
//!
//! * `κ = max_i ‖I − α Ã_iᵀ * Ã_i‖_op`
//! * `μ = max_{i≠j} ‖Ã_iᵀ * Ã_j‖_op`
//!
//! Cyclic slice descent converges whenever `κ + αμ(n−1) < 1`, with
//! `E(t) ≤ ε_t E(0)` for the sequence built by [`epsilon_sequence`]. The block
//! variants `κ(s)`, `μ(s)` replace slices with blocks of `s` slices.
//!
//! A product of two padded slices has a single nonzero frontal slice, so its
//! operator norm is the 2-norm of one `n2 × n2` matrix. Those norms come from
//! a dense SVD, which stays accurate when `I − α A_iᵀ A_i` has a clustered
//! spectrum; block products go through [`op_norm`].

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slicing::{add_gram, check_block_size, frontal_block, gram_tensor};
use crate::tensor::kernels::gemm_tn;
use crate::tensor::{op_norm, Tensor3};

/// Above this many slices, [`theory_report`] estimates `μ` from a sample of pairs.
pub const EXACT_PAIR_LIMIT: usize = 64;

/// `‖I − α Ã_iᵀ * Ã_i‖_op` for the 0-based slice `p`.
fn slice_contraction(a: &Tensor3, alpha: f64, p: usize) -> Result<f64> {
    let n2 = a.n2();
    let mut m = vec![0.0; n2 * n2];
    gemm_tn(n2, a.n1(), n2, -alpha, a.slice(p), a.slice(p), &mut m);
    for i in 0..n2 {
        m[i * n2 + i] += 1.0;
    }
    Ok(dense_norm(n2, &m))
}

fn dense_norm(n2: usize, m: &[f64]) -> f64 {
    DMatrix::from_column_slice(n2, n2, m).singular_values().max()
}

/// `‖Ã_pᵀ * Ã_q‖_op` for 0-based slices, the 2-norm of `A_pᵀ A_q`.
fn slice_coupling(a: &Tensor3, p: usize, q: usize) -> Result<f64> {
    let n2 = a.n2();
    let mut m = vec![0.0; n2 * n2];
    gemm_tn(n2, a.n1(), n2, 1.0, a.slice(p), a.slice(q), &mut m);
    Ok(dense_norm(n2, &m))
}

/// `κ_i = ‖I − α Ã_iᵀ * Ã_i‖_op` for every slice, in slice order.
pub fn slice_kappas(a: &Tensor3, alpha: f64) -> Result<Vec<f64>> {
    (0..a.n()).map(|p| slice_contraction(a, alpha, p)).collect()
}

pub fn compute_kappa(a: &Tensor3, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::config(format!("learning rate must be positive, got {alpha}")));
    }
    Ok(slice_kappas(a, alpha)?.into_iter().fold(0.0, f64::max))
}

/// `μ` over all pairs. `‖Ã_jᵀ * Ã_i‖_op = ‖Ã_iᵀ * Ã_j‖_op`, so only `i < j` is visited.
pub fn compute_mu(a: &Tensor3) -> Result<f64> {
    let n = a.n();
    let mut best = 0.0f64;
    for p in 0..n {
        for q in p + 1..n {
            best = best.max(slice_coupling(a, p, q)?);
        }
    }
    Ok(best)
}

/// `μ` estimated from `pairs` distinct unordered pairs drawn with a seeded
/// generator. Returns the estimate and whether it is exact.
pub fn compute_mu_sampled(a: &Tensor3, pairs: usize, seed: u64) -> Result<(f64, bool)> {
    let n = a.n();
    let total = n * n.saturating_sub(1) / 2;
    if pairs >= total {
        return Ok((compute_mu(a)?, true));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for idx in sample(&mut rng, total, pairs) {
        let (p, q) = unrank_pair(idx, n);
        best = best.max(slice_coupling(a, p, q)?);
    }
    Ok((best, false))
}

/// Maps `0..n(n−1)/2` onto pairs `p < q` in row-major order.
fn unrank_pair(mut idx: usize, n: usize) -> (usize, usize) {
    let mut p = 0;
    while idx >= n - 1 - p {
        idx -= n - 1 - p;
        p += 1;
    }
    (p, p + 1 + idx)
}

/// `(κ(s), μ(s))`: the constants for blocks of `s` consecutive slices.
pub fn compute_block_constants(a: &Tensor3, alpha: f64, s: usize) -> Result<(f64, f64)> {
    check_block_size(a.n(), s)?;
    let blocks = a.n() / s;
    let n2 = a.n2();
    let mut kappa = 0.0f64;
    for b in 1..=blocks {
        let blk = frontal_block(a, b, s)?;
        let mut g = gram_tensor(&blk, &blk)?;
        g.scale(-alpha);
        for i in 0..n2 {
            let v = g.get(i, i, 0);
            g.set(i, i, 0, v + 1.0);
        }
        kappa = kappa.max(op_norm(&g)?);
    }
    let mut mu = 0.0f64;
    for b in 0..blocks {
        for c in b + 1..blocks {
            let mut g = Tensor3::zeros(n2, n2, a.n());
            add_gram(a, b * s..(b + 1) * s, a, c * s..(c + 1) * s, &mut g);
            mu = mu.max(op_norm(&g)?);
        }
    }
    Ok((kappa, mu))
}

/// `κ + αμ(n−1) − 1`; negative margins satisfy the cyclic condition.
pub fn margin_slice(kappa: f64, mu: f64, alpha: f64, n: usize) -> f64 {
    kappa + alpha * mu * (n as f64 - 1.0) - 1.0
}

/// `κ(s) + αμ(s)(n/s − 1) − 1`.
pub fn margin_block(kappa_s: f64, mu_s: f64, alpha: f64, n: usize, s: usize) -> f64 {
    kappa_s + alpha * mu_s * ((n / s) as f64 - 1.0) - 1.0
}

/// `κ + αμ(n−1) + (α/E(0))η_e − 1`.
pub fn margin_noise(kappa: f64, mu: f64, alpha: f64, n: usize, eta_e: f64, e0: f64) -> f64 {
    margin_slice(kappa, mu, alpha, n) + alpha / e0 * eta_e
}

/// Constants of the two-slice rate `M(k+1) ≤ C·M(k)` with
/// `M(k) = max{E(2k), E(2k+1)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N2Constants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub mu: f64,
    /// `C = max{κ₂ + αμ, κ₁κ₂ + (1 + κ₁)αμ}`.
    pub rate: f64,
    /// `min{(1 − κ₂)/μ, (1 − κ₁κ₂)/(μ(1 + κ₂))}`; `None` when `μ = 0`.
    pub alpha_bound: Option<f64>,
    /// `α` is below the bound and `C < 1`.
    pub condition: bool,
}

pub fn n2_rate(a: &Tensor3, alpha: f64) -> Result<N2Constants> {
    if a.n() != 2 {
        return Err(Error::config(format!("the two-slice rate needs n = 2, got n = {}", a.n())));
    }
    let kappa1 = slice_contraction(a, alpha, 0)?;
    let kappa2 = slice_contraction(a, alpha, 1)?;
    let mu = slice_coupling(a, 0, 1)?;
    Ok(n2_constants(kappa1, kappa2, mu, alpha))
}

pub fn n2_constants(kappa1: f64, kappa2: f64, mu: f64, alpha: f64) -> N2Constants {
    let rate = (kappa2 + alpha * mu).max(kappa1 * kappa2 + (1.0 + kappa1) * alpha * mu);
    let alpha_bound = (mu > 0.0).then(|| ((1.0 - kappa2) / mu).min((1.0 - kappa1 * kappa2) / (mu * (1.0 + kappa2))));
    let below = alpha_bound.is_none_or(|bound| alpha < bound);
    N2Constants { kappa1, kappa2, mu, rate, alpha_bound, condition: below && rate < 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConstants {
    pub eta_e: f64,
    pub e0: f64,
    pub margin: f64,
    pub condition: bool,
}

/// Theory constants and condition verdicts for one system and learning rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub kappa: f64,
    pub mu: f64,
    pub kappa_s: f64,
    pub mu_s: f64,
    pub alpha: f64,
    pub n: usize,
    pub s: usize,
    pub condition_slice: bool,
    pub margin_slice: f64,
    pub block_condition: bool,
    pub block_margin: f64,
    /// `μ` came from a sample of slice pairs.
    pub estimated: bool,
    pub n2_constants: Option<N2Constants>,
    pub noise: Option<NoiseConstants>,
}

impl TheoryReport {
    /// Fills the margins and verdicts from raw constants.
    pub fn from_constants(kappa: f64, mu: f64, kappa_s: f64, mu_s: f64, alpha: f64, n: usize, s: usize) -> Self {
        let mut r = TheoryReport {
            kappa,
            mu,
            kappa_s,
            mu_s,
            alpha,
            n,
            s,
            condition_slice: false,
            margin_slice: 0.0,
            block_condition: false,
            block_margin: 0.0,
            estimated: false,
            n2_constants: None,
            noise: None,
        };
        check_sufficient_condition(&mut r);
        r
    }

    /// Attaches the noisy-system constants for `η_e` and `E(0)`.
    pub fn with_noise(mut self, eta_e: f64, e0: f64) -> Self {
        let margin = margin_noise(self.kappa, self.mu, self.alpha, self.n, eta_e, e0);
        self.noise = Some(NoiseConstants { eta_e, e0, margin, condition: margin < 0.0 });
        self
    }
}

/// Recomputes every margin and verdict of `r` from its constants.
pub fn check_sufficient_condition(r: &mut TheoryReport) {
    r.margin_slice = margin_slice(r.kappa, r.mu, r.alpha, r.n);
    r.condition_slice = r.margin_slice < 0.0;
    r.block_margin = margin_block(r.kappa_s, r.mu_s, r.alpha, r.n, r.s);
    r.block_condition = r.block_margin < 0.0;
    if let Some(noise) = &mut r.noise {
        noise.margin = margin_noise(r.kappa, r.mu, r.alpha, r.n, noise.eta_e, noise.e0);
        noise.condition = noise.margin < 0.0;
    }
}

/// Full theory report for `A` at learning rate `alpha` and block size `s`.
pub fn theory_report(a: &Tensor3, alpha: f64, s: usize) -> Result<TheoryReport> {
    let kappa = compute_kappa(a, alpha)?;
    let n = a.n();
    let (mu, exact) = if n > EXACT_PAIR_LIMIT {
        compute_mu_sampled(a, EXACT_PAIR_LIMIT * (EXACT_PAIR_LIMIT - 1) / 2, 0)?
    } else {
        (compute_mu(a)?, true)
    };
    let (kappa_s, mu_s) = if s == 1 { (kappa, mu) } else { compute_block_constants(a, alpha, s)? };
    let mut r = TheoryReport::from_constants(kappa, mu, kappa_s, mu_s, alpha, n, s);
    r.estimated = !exact;
    if n == 2 {
        r.n2_constants = Some(n2_rate(a, alpha)?);
    }
    Ok(r)
}

/// `η_e = max_i ‖Ã_i‖_op · ‖B_e‖_F`.
pub fn compute_eta_e(a: &Tensor3, b_e: &Tensor3) -> Result<f64> {
    if a.n1() != b_e.n1() || a.n() != b_e.n() {
        return Err(Error::dims("noise tensor does not match the rows of A"));
    }
    let best = (0..a.n())
        .map(|p| DMatrix::from_column_slice(a.n1(), a.n2(), a.slice(p)).singular_values().max())
        .fold(0.0, f64::max);
    Ok(best * b_e.fro_norm())
}

/// A bound sequence with the parameters that produced it; `values[t]` is the
/// bound for iteration `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSequence {
    pub values: Vec<f64>,
    pub kappa: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n: usize,
}

impl BoundSequence {
    pub fn get(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `ε_0 … ε_T` with `ε_t = κ^t + αμ Σ_{j=0}^{t−1} κ^j S_{t−1−j}`, where
/// `S_u = Σ_{i=1}^{n−1} ε_{u−i}` and `ε_u = 1` for `u ≤ 0`.
pub fn epsilon_sequence(kappa: f64, mu: f64, alpha: f64, n: usize, t_max: usize) -> BoundSequence {
    let eps_at = |eps: &[f64], u: isize| if u <= 0 { 1.0 } else { eps[u as usize] };
    let mut eps = vec![1.0; t_max + 1];
    let mut window = vec![0.0; t_max + 1];
    let mut pow = vec![1.0; t_max + 1];
    for t in 1..=t_max {
        pow[t] = pow[t - 1] * kappa;
    }
    for t in 1..=t_max {
        let u = t - 1;
        window[u] = (1..n).map(|i| eps_at(&eps, u as isize - i as isize)).sum();
        let tail: f64 = (0..t).map(|j| pow[j] * window[t - 1 - j]).sum();
        eps[t] = pow[t] + alpha * mu * tail;
    }
    BoundSequence { values: eps, kappa, mu, alpha, n }
}

/// `η_t = ε_t + (α/E(0))·η_e` for `t ≥ 1` and `η_0 = 1`.
pub fn eta_sequence(kappa: f64, mu: f64, alpha: f64, n: usize, eta_e: f64, e0: f64, t_max: usize) -> BoundSequence {
    let mut seq = epsilon_sequence(kappa, mu, alpha, n, t_max);
    for v in seq.values.iter_mut().skip(1) {
        *v += alpha / e0 * eta_e;
    }
    seq
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Algorithm {
    TProduct,
    FullGd,
    BlockFsd,
    RandomFsd,
    /// Slice descent when only `nonzero` frontal slices of `A` are nonzero.
    SparseFsd { nonzero: usize },
}

/// Leading-order flop and storage counts of one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub flops_leading: f64,
    pub storage_leading: f64,
}

pub fn cost_model(n1: usize, n2: usize, n3: usize, n: usize, s: usize, algorithm: Algorithm) -> Cost {
    let (n1, n2, n3, n, s) = (n1 as f64, n2 as f64, n3 as f64, n as f64, s as f64);
    let flops = n1 * n2 * n3 * n;
    let storage = match algorithm {
        Algorithm::TProduct => n1 * n2 * n + n2 * n3 * n + n1 * n3 * n,
        Algorithm::FullGd => n1 * n2 * n + n1 * n3 * n + n2 * n3 * n,
        Algorithm::BlockFsd => n1 * n2 * s + n2 * n3 * n * n / s + n1 * n3 * n,
        Algorithm::RandomFsd => n1 * n2 + n2 * n3 * n * n + n1 * n3 * n,
        Algorithm::SparseFsd { nonzero } => {
            let k = nonzero as f64;
            n1 * n2 + n2 * n3 * k * k + n1 * n3 * n
        }
    };
    Cost { flops_leading: flops, storage_leading: storage }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::identity_tensor;

    #[test]
    fn identity_has_kappa_one_and_mu_zero() {
        let id = identity_tensor(3, 4);
        assert!((compute_kappa(&id, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(compute_mu(&id).unwrap(), 0.0);
    }

    #[test]
    fn margin_example() {
        assert!((margin_slice(0.9, 0.0, 0.3, 17) + 0.1).abs() < 1e-15);
        let r = TheoryReport::from_constants(0.9, 0.0, 0.9, 0.0, 0.3, 17, 1);
        assert!(r.condition_slice && r.block_condition);
    }

    #[test]
    fn epsilon_examples() {
        let seq = epsilon_sequence(0.5, 0.1, 0.1, 3, 4);
        assert!((seq.get(1) - (0.5 + 0.01 * 2.0)).abs() < 1e-15);
        assert!((seq.get(2) - 0.28).abs() < 1e-15);
        let eta = eta_sequence(0.5, 0.1, 0.1, 3, 0.5, 1.0, 4);
        assert_eq!(eta.get(0), 1.0);
        assert!((eta.get(2) - 0.33).abs() < 1e-15);
        let pure = epsilon_sequence(0.7, 0.0, 0.1, 5, 10);
        for t in 0..=10 {
            assert!((pure.get(t) - 0.7f64.powi(t as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn n2_arithmetic() {
        let c = n2_constants(0.5, 0.5, 1.0, 0.1);
        assert!((c.rate - 0.6).abs() < 1e-15);
        assert!(c.condition);
        let orth = n2_constants(0.4, 0.7, 0.0, 0.1);
        assert_eq!(orth.rate, 0.7);
        assert!(orth.alpha_bound.is_none() && orth.condition);
        assert!(!n2_constants(0.5, 0.5, 1.0, 0.9).condition);
    }

    #[test]
    fn n2_needs_two_slices() {
        assert!(matches!(n2_rate(&identity_tensor(2, 3), 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn eta_e_single_slice() {
        let mut a = Tensor3::zeros(2, 2, 3);
        a.set(0, 0, 0, 2.0);
        let mut be = Tensor3::zeros(2, 1, 3);
        be.set(1, 0, 2, 3.0);
        assert!((compute_eta_e(&a, &be).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(compute_eta_e(&a, &Tensor3::zeros(2, 1, 3)).unwrap(), 0.0);
    }

    #[test]
    fn cost_model_examples() {
        let full = cost_model(7, 5, 3, 8, 8, Algorithm::FullGd);
        let block = cost_model(7, 5, 3, 8, 8, Algorithm::BlockFsd);
        assert_eq!(full.storage_leading, block.storage_leading);
        let one = cost_model(7, 5, 3, 8, 1, Algorithm::BlockFsd);
        assert_eq!(one.storage_leading, cost_model(7, 5, 3, 8, 1, Algorithm::RandomFsd).storage_leading);
        let doubled = cost_model(7, 5, 3, 16, 1, Algorithm::TProduct);
        assert_eq!(doubled.flops_leading, 2.0 * cost_model(7, 5, 3, 8, 1, Algorithm::TProduct).flops_leading);
    }

    #[test]
    fn pair_unranking_covers_all_pairs() {
        let n = 6;
        let pairs: Vec<_> = (0..n * (n - 1) / 2).map(|i| unrank_pair(i, n)).collect();
        let mut expect = Vec::new();
        for p in 0..n {
            for q in p + 1..n {
                expect.push((p, q));
            }
        }
        assert_eq!(pairs, expect);
    }
}
