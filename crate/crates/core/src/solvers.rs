//! Iterative solvers for `A * X = B`.
//!
//! * [`FullGd`]: gradient descent with the exact residual.
//! * [`CyclicFsd`]: frontal-slice descent over blocks of `s` slices in cyclic
//!   order, with an approximate residual maintained from lagged iterates.
//! * [`RandomFsd`]: the same update with slices drawn at random.
//! * [`Trk`]: tensor randomized Kaczmarz over row slices.
//!
//! Each solver is a stepper implementing [`IterativeSolver`]; [`run`] drives
//! one to completion and records a [`ConvergenceTrace`].

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slicing::{check_block_size, shifted_apply_into, shifted_apply_transpose_into};
use crate::tensor::{dft_slices, idft_slices, t_product, t_transpose, FourierSlices, Tensor3};

/// Iterates whose Frobenius norm exceeds `DIVERGENCE_FACTOR·(1 + ‖B‖_F)` abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// Relative cutoff below which a Fourier coefficient of a row Gram tube
/// is treated as zero by [`Trk`].
pub const TRK_PINV_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Cyclic,
    UniformRandom,
    WeightedRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    FullGd,
    Cyclic,
    Random,
    Weighted,
    Trk,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::FullGd => "full_gd",
            SolverKind::Cyclic => "cyclic",
            SolverKind::Random => "random",
            SolverKind::Weighted => "weighted",
            SolverKind::Trk => "trk",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub alpha: f64,
    pub block_size: usize,
    pub max_iters: usize,
    /// Stop once the tracked residual norm falls to this value.
    pub stop_tol: f64,
    pub schedule: Schedule,
    pub rng_seed: u64,
    /// Reference solution for the `err_norm` trace column.
    pub track_error_against: Option<Tensor3>,
}

impl SolveConfig {
    pub fn new(alpha: f64) -> Self {
        SolveConfig {
            alpha,
            block_size: 1,
            max_iters: 1000,
            stop_tol: 0.0,
            schedule: Schedule::Cyclic,
            rng_seed: 0,
            track_error_against: None,
        }
    }

    pub fn with_block_size(mut self, s: usize) -> Self {
        self.block_size = s;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_reference(mut self, x_star: Tensor3) -> Self {
        self.track_error_against = Some(x_star);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.alpha)));
        }
        if self.block_size == 0 {
            return Err(Error::config("block size must be positive"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::config(format!("stop_tol must be non-negative, got {}", self.stop_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    /// 1-based slice, block or row index used by the step; 0 on the initial row
    /// and for full gradient descent.
    pub index: usize,
    pub res_norm: f64,
    /// `E(t) = ‖X(t) − X*‖_F` when a reference solution was supplied.
    pub err_norm: Option<f64>,
    /// Wall-clock time of the update step.
    pub nanos: u64,
}

/// One row per iteration plus the initial state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str = "t,index,res_norm,err_norm,nanos";

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    /// `E(t)` for every row, when tracked.
    pub fn err_norms(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.err_norm).collect()
    }

    /// `E(t)²`, the squared error.
    pub fn err_norms_sq(&self) -> Option<Vec<f64>> {
        self.err_norms().map(|v| v.into_iter().map(|e| e * e).collect())
    }

    pub fn res_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.res_norm).collect()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.err_norm)
    }

    pub fn final_residual(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.res_norm)
    }

    /// Median of the per-step times, excluding the initial row.
    pub fn median_step_nanos(&self) -> Option<u64> {
        let mut v: Vec<u64> = self.rows.iter().skip(1).map(|r| r.nanos).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_unstable();
        Some(v[v.len() / 2])
    }

    fn render(&self, with_timing: bool) -> String {
        let mut s = String::new();
        if with_timing {
            s.push_str(TRACE_HEADER);
        } else {
            s.push_str("t,index,res_norm,err_norm");
        }
        s.push('\n');
        for r in &self.rows {
            let err = r.err_norm.map(|e| format!("{e:e}")).unwrap_or_default();
            write!(s, "{},{},{:e},{}", r.t, r.index, r.res_norm, err).unwrap();
            if with_timing {
                write!(s, ",{}", r.nanos).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        self.render(true)
    }

    /// The CSV with the `nanos` column dropped, for determinism comparisons.
    pub fn to_csv_without_timing(&self) -> String {
        self.render(false)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// A solver advanced one iteration at a time.
pub trait IterativeSolver {
    /// Performs one update and returns the 1-based index it used.
    fn step(&mut self) -> Result<usize>;

    /// Number of completed updates.
    fn iteration(&self) -> usize;

    /// Norm of the residual the solver tracks.
    fn residual_norm(&self) -> f64;

    fn iterate_norm(&self) -> f64;

    /// `‖X(t) − x_star‖_F`.
    fn error_norm(&self, x_star: &Tensor3) -> f64;

    /// The current iterate `X(t)`.
    fn solution(&self) -> Result<Tensor3>;
}

/// Drives `solver` for `cfg.max_iters` steps or until the tracked residual
/// reaches `cfg.stop_tol`.
pub fn run<S: IterativeSolver + ?Sized>(solver: &mut S, cfg: &SolveConfig, b_norm: f64) -> Result<(Tensor3, ConvergenceTrace)> {
    let mut trace = ConvergenceTrace::default();
    let x = run_into(solver, cfg, b_norm, &mut trace)?;
    Ok((x, trace))
}

/// Like [`run`], appending rows to `trace` as they are produced so that the
/// rows before a failure are kept.
pub fn run_into<S: IterativeSolver + ?Sized>(
    solver: &mut S,
    cfg: &SolveConfig,
    b_norm: f64,
    trace: &mut ConvergenceTrace,
) -> Result<Tensor3> {
    let limit = DIVERGENCE_FACTOR * (1.0 + b_norm);
    let reference = cfg.track_error_against.as_ref();
    trace.rows.push(TraceRow {
        t: 0,
        index: 0,
        res_norm: solver.residual_norm(),
        err_norm: reference.map(|x| solver.error_norm(x)),
        nanos: 0,
    });
    for _ in 0..cfg.max_iters {
        let start = Instant::now();
        let index = solver.step()?;
        let nanos = start.elapsed().as_nanos() as u64;
        let t = solver.iteration();
        let norm = solver.iterate_norm();
        if !norm.is_finite() || norm > limit {
            return Err(Error::Divergence { iteration: t, norm });
        }
        let res_norm = solver.residual_norm();
        trace.rows.push(TraceRow { t, index, res_norm, err_norm: reference.map(|x| solver.error_norm(x)), nanos });
        if res_norm <= cfg.stop_tol {
            break;
        }
    }
    solver.solution()
}

fn check_system(a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.n1() != b.n1() || a.n() != b.n() {
        return Err(Error::dims(format!(
            "A is {}x{}x{} but B is {}x{}x{}",
            a.n1(),
            a.n2(),
            a.n(),
            b.n1(),
            b.n2(),
            b.n()
        )));
    }
    Ok(())
}

/// `B − A * X`.
pub fn residual_exact(a: &Tensor3, x: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_system(a, b)?;
    let ax = t_product(a, x)?;
    if ax.dims() != b.dims() {
        return Err(Error::dims("A * X and B differ in shape"));
    }
    Ok(b - &ax)
}

/// `∇F(X) = Aᵀ * (A * X − B)` for `F(X) = ½‖A * X − B‖_F²`.
pub fn gradient(a: &Tensor3, x: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    let mut r = residual_exact(a, x, b)?;
    r.scale(-1.0);
    t_product(&t_transpose(a), &r)
}

/// Gradient descent `X ← X + α Aᵀ * (B − A * X)` with the residual
/// recomputed exactly every step.
pub struct FullGd<'a> {
    a: &'a Tensor3,
    b: &'a Tensor3,
    slices: Vec<usize>,
    alpha: f64,
    x: Tensor3,
    r: Tensor3,
    g: Tensor3,
    t: usize,
}

impl<'a> FullGd<'a> {
    pub fn new(a: &'a Tensor3, b: &'a Tensor3, alpha: f64) -> Result<Self> {
        check_system(a, b)?;
        let (_, n2, n) = a.dims();
        let n3 = b.n2();
        Ok(FullGd {
            a,
            b,
            slices: a.nonzero_slices(),
            alpha,
            x: Tensor3::zeros(n2, n3, n),
            r: b.clone(),
            g: Tensor3::zeros(n2, n3, n),
            t: 0,
        })
    }

    pub fn x(&self) -> &Tensor3 {
        &self.x
    }

    /// `B − A * X(t−1)`, the residual used by the last step.
    pub fn residual(&self) -> &Tensor3 {
        &self.r
    }
}

impl IterativeSolver for FullGd<'_> {
    fn step(&mut self) -> Result<usize> {
        self.r.data_mut().copy_from_slice(self.b.data());
        shifted_apply_into(self.a, self.slices.iter().copied(), -1.0, &self.x, &mut self.r);
        self.g.fill_zero();
        shifted_apply_transpose_into(self.a, self.slices.iter().copied(), 1.0, &self.r, &mut self.g);
        self.x.axpy(self.alpha, &self.g);
        self.t += 1;
        Ok(0)
    }

    fn iteration(&self) -> usize {
        self.t
    }

    fn residual_norm(&self) -> f64 {
        self.r.fro_norm()
    }

    fn iterate_norm(&self) -> f64 {
        self.x.fro_norm()
    }

    fn error_norm(&self, x_star: &Tensor3) -> f64 {
        self.x.distance(x_star)
    }

    fn solution(&self) -> Result<Tensor3> {
        Ok(self.x.clone())
    }
}

/// Shared update of the slice-descent solvers: given the slices of the chosen
/// block and the iterate last used with it, refreshes the residual and takes
/// the descent step.
struct SliceDescent<'a> {
    a: &'a Tensor3,
    alpha: f64,
    x: Tensor3,
    r: Tensor3,
    d: Tensor3,
    g: Tensor3,
}

impl<'a> SliceDescent<'a> {
    fn new(a: &'a Tensor3, b: &Tensor3, alpha: f64) -> Self {
        let (_, n2, n) = a.dims();
        let n3 = b.n2();
        SliceDescent {
            a,
            alpha,
            x: Tensor3::zeros(n2, n3, n),
            r: b.clone(),
            d: Tensor3::zeros(n2, n3, n),
            g: Tensor3::zeros(n2, n3, n),
        }
    }

    fn update(&mut self, slices: std::ops::Range<usize>, snapshot: &mut Option<Tensor3>) {
        // R ← R − Ã_b * (X(t) − X_snapshot)
        self.d.data_mut().copy_from_slice(self.x.data());
        match snapshot {
            Some(prev) => {
                self.d.axpy(-1.0, prev);
                prev.data_mut().copy_from_slice(self.x.data());
            }
            None => *snapshot = Some(self.x.clone()),
        }
        shifted_apply_into(self.a, slices.clone(), -1.0, &self.d, &mut self.r);
        // X ← X + α Ã_bᵀ * R
        self.g.fill_zero();
        shifted_apply_transpose_into(self.a, slices, 1.0, &self.r, &mut self.g);
        self.x.axpy(self.alpha, &self.g);
    }
}

/// Frontal-slice descent over blocks of `s` consecutive slices in cyclic
/// order.
///
/// The residual follows `R(t+1) = R(t) − Ã_b * (X(t) − X(t − n/s))`, where the
/// lagged iterate is the one in use the previous time block `b` was visited
/// (zero before the first visit). All-zero blocks are skipped.
pub struct CyclicFsd<'a> {
    core: SliceDescent<'a>,
    block_size: usize,
    active: Vec<usize>,
    snapshots: Vec<Option<Tensor3>>,
    t: usize,
}

impl<'a> CyclicFsd<'a> {
    pub fn new(a: &'a Tensor3, b: &'a Tensor3, alpha: f64, block_size: usize) -> Result<Self> {
        check_system(a, b)?;
        check_block_size(a.n(), block_size)?;
        let blocks = a.n() / block_size;
        let active: Vec<usize> = (0..blocks)
            .filter(|&blk| (blk * block_size..(blk + 1) * block_size).any(|p| !a.slice_is_zero(p)))
            .collect();
        let active = if active.is_empty() { vec![0] } else { active };
        Ok(CyclicFsd {
            core: SliceDescent::new(a, b, alpha),
            block_size,
            snapshots: vec![None; blocks],
            active,
            t: 0,
        })
    }

    pub fn x(&self) -> &Tensor3 {
        &self.core.x
    }

    /// The approximate residual `R(t)`.
    pub fn residual(&self) -> &Tensor3 {
        &self.core.r
    }

    /// 1-based block indices visited in order.
    pub fn active_blocks(&self) -> Vec<usize> {
        self.active.iter().map(|b| b + 1).collect()
    }
}

impl IterativeSolver for CyclicFsd<'_> {
    fn step(&mut self) -> Result<usize> {
        let blk = self.active[self.t % self.active.len()];
        let s = self.block_size;
        self.core.update(blk * s..(blk + 1) * s, &mut self.snapshots[blk]);
        self.t += 1;
        Ok(blk + 1)
    }

    fn iteration(&self) -> usize {
        self.t
    }

    fn residual_norm(&self) -> f64 {
        self.core.r.fro_norm()
    }

    fn iterate_norm(&self) -> f64 {
        self.core.x.fro_norm()
    }

    fn error_norm(&self, x_star: &Tensor3) -> f64 {
        self.core.x.distance(x_star)
    }

    fn solution(&self) -> Result<Tensor3> {
        Ok(self.core.x.clone())
    }
}

enum Sampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

/// Frontal-slice descent with single slices drawn at random, either uniformly
/// or with probability proportional to `‖A_i‖_F²`.
///
/// Each slice keeps the iterate in use the last time it was drawn.
pub struct RandomFsd<'a> {
    core: SliceDescent<'a>,
    sampler: Sampler,
    rng: ChaCha20Rng,
    snapshots: Vec<Option<Tensor3>>,
    t: usize,
}

impl<'a> RandomFsd<'a> {
    pub fn new(a: &'a Tensor3, b: &'a Tensor3, alpha: f64, schedule: Schedule, seed: u64) -> Result<Self> {
        check_system(a, b)?;
        let n = a.n();
        let sampler = match schedule {
            Schedule::UniformRandom => Sampler::Uniform(n),
            Schedule::WeightedRandom => {
                let weights: Vec<f64> = (0..n).map(|k| a.slice_fro_norm(k).powi(2)).collect();
                Sampler::Weighted(
                    WeightedIndex::new(&weights)
                        .map_err(|e| Error::config(format!("cannot weight slices by mass: {e}")))?,
                )
            }
            Schedule::Cyclic => return Err(Error::config("random slice descent needs a random schedule")),
        };
        Ok(RandomFsd {
            core: SliceDescent::new(a, b, alpha),
            sampler,
            rng: ChaCha20Rng::seed_from_u64(seed),
            snapshots: vec![None; n],
            t: 0,
        })
    }

    pub fn x(&self) -> &Tensor3 {
        &self.core.x
    }

    pub fn residual(&self) -> &Tensor3 {
        &self.core.r
    }
}

impl IterativeSolver for RandomFsd<'_> {
    fn step(&mut self) -> Result<usize> {
        let p = match &self.sampler {
            Sampler::Uniform(n) => self.rng.random_range(0..*n),
            Sampler::Weighted(w) => w.sample(&mut self.rng),
        };
        self.core.update(p..p + 1, &mut self.snapshots[p]);
        self.t += 1;
        Ok(p + 1)
    }

    fn iteration(&self) -> usize {
        self.t
    }

    fn residual_norm(&self) -> f64 {
        self.core.r.fro_norm()
    }

    fn iterate_norm(&self) -> f64 {
        self.core.x.fro_norm()
    }

    fn error_norm(&self, x_star: &Tensor3) -> f64 {
        self.core.x.distance(x_star)
    }

    fn solution(&self) -> Result<Tensor3> {
        Ok(self.core.x.clone())
    }
}

/// Tensor randomized Kaczmarz: projects onto one uniformly drawn row slice per
/// step,
/// `X ← X + A_{i::}ᵀ * (A_{i::} * A_{i::}ᵀ)^† * (B_{i::} − A_{i::} * X)`.
///
/// Works in the Fourier domain, where the tubal pseudoinverse is a
/// coefficient-wise reciprocal.
pub struct Trk<'a> {
    a: &'a Tensor3,
    fa: FourierSlices,
    fb: FourierSlices,
    fx: FourierSlices,
    rng: ChaCha20Rng,
    t: usize,
    res_norm: f64,
}

impl<'a> Trk<'a> {
    pub fn new(a: &'a Tensor3, b: &'a Tensor3, seed: u64) -> Result<Self> {
        check_system(a, b)?;
        let (_, n2, n) = a.dims();
        Ok(Trk {
            a,
            fa: dft_slices(a),
            fb: dft_slices(b),
            fx: FourierSlices::zeros(n2, b.n2(), n),
            rng: ChaCha20Rng::seed_from_u64(seed),
            t: 0,
            res_norm: b.fro_norm(),
        })
    }

    fn parseval(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.a.n();
        let total: f64 = (0..n).map(f).sum();
        (total / n as f64).sqrt()
    }

    fn refresh_residual(&mut self) {
        let (n1, n2, _) = self.a.dims();
        let n3 = self.fx.dims().1;
        let fa = &self.fa;
        let fx = &self.fx;
        let fb = &self.fb;
        self.res_norm = self.parseval(|k| {
            let (ak, xk, bk) = (fa.slice(k), fx.slice(k), fb.slice(k));
            let mut acc = 0.0;
            for j in 0..n3 {
                for i in 0..n1 {
                    let mut v = bk[j * n1 + i];
                    for l in 0..n2 {
                        v -= ak[l * n1 + i] * xk[j * n2 + l];
                    }
                    acc += v.norm_sqr();
                }
            }
            acc
        });
    }
}

impl IterativeSolver for Trk<'_> {
    fn step(&mut self) -> Result<usize> {
        let (n1, n2, n) = self.a.dims();
        let n3 = self.fx.dims().1;
        let i = self.rng.random_range(0..n1);
        let grams: Vec<f64> = (0..=n / 2)
            .map(|k| {
                let ak = self.fa.slice(k);
                (0..n2).map(|l| ak[l * n1 + i].norm_sqr()).sum()
            })
            .collect();
        let max_g = grams.iter().fold(0.0f64, |m, &g| m.max(g));
        if max_g <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateRow { row: i + 1 });
        }
        let mut coef = vec![Complex64::new(0.0, 0.0); n3];
        for (k, &g) in grams.iter().enumerate() {
            if g <= TRK_PINV_TOL * max_g {
                continue;
            }
            let ginv = 1.0 / g;
            let ak = self.fa.slice(k);
            let bk = self.fb.slice(k);
            let xk = self.fx.slice(k);
            for (j, c) in coef.iter_mut().enumerate() {
                let mut v = bk[j * n1 + i];
                for l in 0..n2 {
                    v -= ak[l * n1 + i] * xk[j * n2 + l];
                }
                *c = v * ginv;
            }
            let xk = self.fx.slice_mut(k);
            for (j, c) in coef.iter().enumerate() {
                for l in 0..n2 {
                    xk[j * n2 + l] += ak[l * n1 + i].conj() * c;
                }
            }
        }
        self.fx.fill_conjugate_half();
        self.t += 1;
        self.refresh_residual();
        Ok(i + 1)
    }

    fn iteration(&self) -> usize {
        self.t
    }

    fn residual_norm(&self) -> f64 {
        self.res_norm
    }

    fn iterate_norm(&self) -> f64 {
        let fx = &self.fx;
        self.parseval(|k| fx.slice(k).iter().map(|z| z.norm_sqr()).sum())
    }

    fn error_norm(&self, x_star: &Tensor3) -> f64 {
        let fs = dft_slices(x_star);
        let fx = &self.fx;
        self.parseval(|k| fx.slice(k).iter().zip(fs.slice(k)).map(|(a, b)| (a - b).norm_sqr()).sum())
    }

    fn solution(&self) -> Result<Tensor3> {
        idft_slices(&self.fx)
    }
}

pub fn solve_full_gd(a: &Tensor3, b: &Tensor3, cfg: &SolveConfig) -> Result<(Tensor3, ConvergenceTrace)> {
    solve(SolverKind::FullGd, a, b, cfg)
}

pub fn solve_fsd_cyclic(a: &Tensor3, b: &Tensor3, cfg: &SolveConfig) -> Result<(Tensor3, ConvergenceTrace)> {
    solve(SolverKind::Cyclic, a, b, cfg)
}

/// Random slice descent with the schedule in `cfg.schedule`.
pub fn solve_fsd_random(a: &Tensor3, b: &Tensor3, cfg: &SolveConfig) -> Result<(Tensor3, ConvergenceTrace)> {
    let kind = match cfg.schedule {
        Schedule::WeightedRandom => SolverKind::Weighted,
        Schedule::UniformRandom => SolverKind::Random,
        Schedule::Cyclic => return Err(Error::config("random slice descent needs a random schedule")),
    };
    solve(kind, a, b, cfg)
}

/// Tensor randomized Kaczmarz; `cfg.alpha` is not used.
pub fn solve_trk(a: &Tensor3, b: &Tensor3, cfg: &SolveConfig) -> Result<(Tensor3, ConvergenceTrace)> {
    solve(SolverKind::Trk, a, b, cfg)
}

/// Builds the stepper for `kind`. The random kinds pick their schedule from
/// `kind`, not from `cfg.schedule`.
pub fn build_solver<'a>(
    kind: SolverKind,
    a: &'a Tensor3,
    b: &'a Tensor3,
    cfg: &SolveConfig,
) -> Result<Box<dyn IterativeSolver + 'a>> {
    cfg.validate()?;
    if matches!(kind, SolverKind::Random | SolverKind::Weighted) && cfg.block_size != 1 {
        return Err(Error::config("random slice descent uses single slices (block size 1)"));
    }
    Ok(match kind {
        SolverKind::FullGd => Box::new(FullGd::new(a, b, cfg.alpha)?),
        SolverKind::Cyclic => Box::new(CyclicFsd::new(a, b, cfg.alpha, cfg.block_size)?),
        SolverKind::Random => Box::new(RandomFsd::new(a, b, cfg.alpha, Schedule::UniformRandom, cfg.rng_seed)?),
        SolverKind::Weighted => Box::new(RandomFsd::new(a, b, cfg.alpha, Schedule::WeightedRandom, cfg.rng_seed)?),
        SolverKind::Trk => Box::new(Trk::new(a, b, cfg.rng_seed)?),
    })
}

pub fn solve(kind: SolverKind, a: &Tensor3, b: &Tensor3, cfg: &SolveConfig) -> Result<(Tensor3, ConvergenceTrace)> {
    let mut trace = ConvergenceTrace::default();
    let x = solve_into(kind, a, b, cfg, &mut trace)?;
    Ok((x, trace))
}

/// [`solve`] writing into a caller-owned trace, which keeps the rows recorded
/// before a divergence.
pub fn solve_into(
    kind: SolverKind,
    a: &Tensor3,
    b: &Tensor3,
    cfg: &SolveConfig,
    trace: &mut ConvergenceTrace,
) -> Result<Tensor3> {
    let mut solver = build_solver(kind, a, b, cfg)?;
    run_into(solver.as_mut(), cfg, b.fro_norm(), trace)
}
