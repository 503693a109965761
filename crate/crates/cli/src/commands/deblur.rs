use rayon::prelude::*;
use serde::Serialize;
use tensor_fsd::deblur::{
    blur, build_blur_operator, checkerboard, frames_to_tensor, load_pgm, save_pgm, score, tensor_frame, BlurSpec,
    QualityReport,
};
use tensor_fsd::solvers::{solve_into, ConvergenceTrace, SolveConfig, SolverKind};
use tensor_fsd::tensor::io::load_tns3;
use tensor_fsd::{Error, Tensor3};

use super::cell_seed;
use crate::config::{DeblurExperiment, ImageSource, RunContext};
use crate::error::{CliError, CliResult};
use crate::output::{thread_pool, OutDir};

#[derive(Clone, Debug, Serialize)]
pub struct SolverOutcome {
    pub solver: SolverKind,
    pub status: String,
    pub iterations: usize,
    pub quality: Option<QualityReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeblurSummary {
    pub blur: BlurSpec,
    pub frames: usize,
    pub alpha: f64,
    pub max_iters: usize,
    pub blurred: QualityReport,
    pub solvers: Vec<SolverOutcome>,
}

fn load_frames(src: &ImageSource, size: usize) -> CliResult<Tensor3> {
    let frames = match src {
        ImageSource::Checkerboard { square } => vec![checkerboard(size, size, *square)],
        ImageSource::Pgm { paths } => paths
            .iter()
            .map(|p| {
                load_pgm(p).map_err(|e| match e {
                    Error::Io(source) => CliError::io(p, source),
                    other => other.into(),
                })
            })
            .collect::<CliResult<_>>()?,
    };
    for (j, f) in frames.iter().enumerate() {
        if f.width != size || f.height != size {
            return Err(CliError::config(format!(
                "frame {j} is {}x{}, the operator needs {size}x{size}",
                f.width, f.height
            )));
        }
    }
    Ok(frames_to_tensor(&frames)?)
}

fn save_frames(dir: &OutDir, prefix: &str, x: &Tensor3) -> CliResult<()> {
    for j in 0..x.n2() {
        let path = dir.path(format!("{prefix}_f{j}.pgm"));
        save_pgm(&tensor_frame(x, j), &path).map_err(|e| match e {
            Error::Io(source) => CliError::io(&path, source),
            other => other.into(),
        })?;
    }
    Ok(())
}

pub fn run(exp: &DeblurExperiment, ctx: &RunContext) -> CliResult<DeblurSummary> {
    let a = build_blur_operator(&exp.blur)?;
    let x = load_frames(&exp.input, exp.blur.size)?;
    let b = match &exp.observed {
        Some(p) => {
            let b = load_tns3(p).map_err(|e| match e {
                Error::Io(source) => CliError::io(p, source),
                other => other.into(),
            })?;
            if b.dims() != x.dims() {
                return Err(CliError::config(format!("observation has dims {:?}, expected {:?}", b.dims(), x.dims())));
            }
            b
        }
        None => blur(&a, &x)?,
    };
    let out = OutDir::create(&ctx.out)?;
    let frames = out.subdir("frames")?;
    save_frames(&frames, "original", &x)?;
    save_frames(&frames, "blurred", &b)?;
    let blurred = score(&x, &b)?;
    out.write("quality_blurred.csv", blurred.to_csv())?;

    let pool = thread_pool(ctx.threads)?;
    let outcomes: Vec<SolverOutcome> = pool.install(|| {
        exp.solvers
            .par_iter()
            .enumerate()
            .map(|(cell, &solver)| {
                let block = if solver == SolverKind::Cyclic { exp.block_size } else { 1 };
                let cfg = SolveConfig::new(exp.alpha)
                    .with_block_size(block)
                    .with_max_iters(exp.max_iters)
                    .with_stop_tol(exp.stop_tol)
                    .with_seed(cell_seed(ctx.seed, cell))
                    .with_reference(x.clone());
                let mut trace = ConvergenceTrace::default();
                let result = solve_into(solver, &a, &b, &cfg, &mut trace);
                out.write(format!("trace_{}.csv", solver.name()), trace.to_csv())?;
                let iterations = trace.iterations();
                match result {
                    Ok(rec) => {
                        save_frames(&frames, &format!("recovered_{}", solver.name()), &rec)?;
                        let q = score(&x, &rec)?;
                        out.write(format!("quality_{}.csv", solver.name()), q.to_csv())?;
                        Ok(SolverOutcome { solver, status: "ok".into(), iterations, quality: Some(q) })
                    }
                    Err(Error::Divergence { .. }) => {
                        Ok(SolverOutcome { solver, status: "diverged".into(), iterations, quality: None })
                    }
                    Err(e) => Err(e.into()),
                }
            })
            .collect::<CliResult<_>>()
    })?;

    let summary = DeblurSummary {
        blur: exp.blur,
        frames: x.n2(),
        alpha: exp.alpha,
        max_iters: exp.max_iters,
        blurred,
        solvers: outcomes,
    };
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}
