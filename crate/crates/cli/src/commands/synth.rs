use std::fmt::Write as _;

use rayon::prelude::*;
use tensor_fsd::generators::{generate, GeneratedSystem, SystemSpec};
use tensor_fsd::solvers::{solve_into, ConvergenceTrace, SolveConfig, SolverKind};
use tensor_fsd::Error;

use super::{cell_seed, derived_system};
use crate::config::{RunContext, SynthSweep};
use crate::error::CliResult;
use crate::output::{family_label, opt_num, thread_pool, OutDir};

pub const SUMMARY_HEADER: &str =
    "cell,system,repeat,n1,n2,n3,n,family,system_seed,solver,alpha,solver_seed,status,iterations,final_residual,final_error,median_step_nanos,trace";
pub const MEAN_HEADER: &str = "system,solver,alpha,runs,converged,mean_final_error,std_final_error";

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: usize,
    pub system: usize,
    pub repeat: usize,
    pub spec: SystemSpec,
    pub solver: SolverKind,
    pub alpha: f64,
    pub solver_seed: u64,
    pub diverged: bool,
    pub trace: ConvergenceTrace,
    pub trace_file: String,
}

impl CellResult {
    fn status(&self) -> &'static str {
        if self.diverged {
            "diverged"
        } else {
            "ok"
        }
    }

    /// `E(T)` of a finished run.
    pub fn final_error(&self) -> Option<f64> {
        if self.diverged {
            None
        } else {
            self.trace.final_error()
        }
    }
}

pub fn trace_file_name(system: usize, repeat: usize, solver: SolverKind, alpha_idx: usize) -> String {
    format!("trace_s{system}_r{repeat}_{}_a{alpha_idx}.csv", solver.name())
}

/// Runs one cell, keeping the trace up to a divergence.
fn run_cell(sys: &GeneratedSystem, solver: SolverKind, cfg: &SolveConfig) -> CliResult<(ConvergenceTrace, bool)> {
    let mut trace = ConvergenceTrace::default();
    match solve_into(solver, &sys.a, &sys.b, cfg, &mut trace) {
        Ok(_) => Ok((trace, false)),
        Err(Error::Divergence { .. }) => Ok((trace, true)),
        Err(e) => Err(e.into()),
    }
}

pub fn run(sweep: &SynthSweep, ctx: &RunContext) -> CliResult<Vec<CellResult>> {
    let out = OutDir::create(&ctx.out)?;
    let traces = out.subdir("traces")?;
    let pool = thread_pool(ctx.threads)?;

    let sys_cells: Vec<(usize, usize)> =
        (0..sweep.systems.len()).flat_map(|s| (0..sweep.repeats).map(move |r| (s, r))).collect();
    let systems: Vec<GeneratedSystem> = pool.install(|| {
        sys_cells
            .par_iter()
            .map(|&(s, r)| generate(&derived_system(&sweep.systems[s], ctx.seed, r)))
            .collect::<Result<_, _>>()
    })?;

    let (ns, na) = (sweep.solvers.len(), sweep.alphas.len());
    let cells: Vec<(usize, usize, usize)> = (0..sys_cells.len())
        .flat_map(|sc| (0..ns).flat_map(move |si| (0..na).map(move |ai| (sc, si, ai))))
        .collect();
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(cell, &(sc, si, ai))| {
                let sys = &systems[sc];
                let (system, repeat) = sys_cells[sc];
                let solver = sweep.solvers[si];
                let alpha = sweep.alphas[ai];
                let solver_seed = cell_seed(ctx.seed, cell);
                let block = if solver == SolverKind::Cyclic { sweep.block_size } else { 1 };
                let cfg = SolveConfig::new(alpha)
                    .with_block_size(block)
                    .with_max_iters(sweep.max_iters)
                    .with_stop_tol(sweep.stop_tol)
                    .with_seed(solver_seed)
                    .with_reference(sys.x_star.clone());
                let (trace, diverged) = run_cell(sys, solver, &cfg)?;
                let trace_file = trace_file_name(system, repeat, solver, ai);
                traces.write(&trace_file, trace.to_csv())?;
                Ok(CellResult {
                    cell,
                    system,
                    repeat,
                    spec: sys.spec.clone(),
                    solver,
                    alpha,
                    solver_seed,
                    diverged,
                    trace,
                    trace_file,
                })
            })
            .collect::<CliResult<_>>()
    })?;

    out.write("summary.csv", summary_csv(&results))?;
    out.write("summary_mean.csv", mean_csv(sweep, &results))?;
    Ok(results)
}

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for c in results {
        let sp = &c.spec;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:e},{},{},traces/{}",
            c.cell,
            c.system,
            c.repeat,
            sp.n1,
            sp.n2,
            sp.n3,
            sp.n,
            family_label(&sp.family),
            sp.seed,
            c.solver.name(),
            c.alpha,
            c.solver_seed,
            c.status(),
            c.trace.iterations(),
            c.trace.final_residual(),
            opt_num(c.final_error()),
            c.trace.median_step_nanos().map(|v| v.to_string()).unwrap_or_default(),
            c.trace_file,
        )
        .unwrap();
    }
    s
}

/// Mean and population standard deviation of `E(T)` over the repeats of
/// each system × solver × `α`, over the runs that did not diverge.
pub fn mean_csv(sweep: &SynthSweep, results: &[CellResult]) -> String {
    let mut s = String::from(MEAN_HEADER);
    s.push('\n');
    for system in 0..sweep.systems.len() {
        for &solver in &sweep.solvers {
            for &alpha in &sweep.alphas {
                let group: Vec<&CellResult> = results
                    .iter()
                    .filter(|c| c.system == system && c.solver == solver && c.alpha == alpha)
                    .collect();
                let errs: Vec<f64> = group.iter().filter_map(|c| c.final_error()).collect();
                let (mean, std) = if errs.is_empty() {
                    (None, None)
                } else {
                    let m = errs.iter().sum::<f64>() / errs.len() as f64;
                    let v = errs.iter().map(|e| (e - m).powi(2)).sum::<f64>() / errs.len() as f64;
                    (Some(m), Some(v.sqrt()))
                };
                writeln!(
                    s,
                    "{system},{},{alpha},{},{},{},{}",
                    solver.name(),
                    group.len(),
                    errs.len(),
                    opt_num(mean),
                    opt_num(std)
                )
                .unwrap();
            }
        }
    }
    s
}
