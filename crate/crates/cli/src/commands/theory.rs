use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use tensor_fsd::analysis::{compute_eta_e, theory_report, TheoryReport};
use tensor_fsd::generators::{generate, GeneratedSystem, SystemSpec};
use tensor_fsd::solvers::{solve_into, ConvergenceTrace, SolveConfig, SolverKind};
use tensor_fsd::Error;

use super::{cell_seed, derived_system};
use crate::config::{RunContext, TheoryCheck};
use crate::error::CliResult;
use crate::output::{family_label, opt_num, thread_pool, OutDir};

pub const SCATTER_HEADER: &str =
    "system,family,alpha,kappa,mu,margin_slice,condition_slice,kappa_s,mu_s,margin_block,condition_block,status,final_error";

#[derive(Clone, Debug, Serialize)]
pub struct SystemReports {
    pub system: SystemSpec,
    pub reports: Vec<TheoryReport>,
}

#[derive(Clone, Debug)]
pub struct TheoryPoint {
    pub system: usize,
    pub report: TheoryReport,
    pub final_error: Option<f64>,
}

fn report_for(sys: &GeneratedSystem, alpha: f64, s: usize) -> CliResult<TheoryReport> {
    let mut r = theory_report(&sys.a, alpha, s)?;
    if let Some(b_e) = &sys.b_e {
        r = r.with_noise(compute_eta_e(&sys.a, b_e)?, sys.x_star.fro_norm());
    }
    Ok(r)
}

pub fn run(check: &TheoryCheck, ctx: &RunContext) -> CliResult<Vec<TheoryPoint>> {
    let out = OutDir::create(&ctx.out)?;
    let pool = thread_pool(ctx.threads)?;
    let systems: Vec<GeneratedSystem> = pool.install(|| {
        check.systems.par_iter().map(|spec| generate(&derived_system(spec, ctx.seed, 0))).collect::<Result<_, _>>()
    })?;
    let na = check.alphas.len();
    let cells: Vec<(usize, usize)> = (0..systems.len()).flat_map(|s| (0..na).map(move |a| (s, a))).collect();
    let points: Vec<TheoryPoint> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(cell, &(s, ai))| {
                let sys = &systems[s];
                let alpha = check.alphas[ai];
                let report = report_for(sys, alpha, check.block_size)?;
                let cfg = SolveConfig::new(alpha)
                    .with_block_size(check.block_size)
                    .with_max_iters(check.max_iters)
                    .with_seed(cell_seed(ctx.seed, cell))
                    .with_reference(sys.x_star.clone());
                let mut trace = ConvergenceTrace::default();
                let final_error = match solve_into(SolverKind::Cyclic, &sys.a, &sys.b, &cfg, &mut trace) {
                    Ok(_) => trace.final_error(),
                    Err(Error::Divergence { .. }) => None,
                    Err(e) => return Err(e.into()),
                };
                Ok(TheoryPoint { system: s, report, final_error })
            })
            .collect::<CliResult<_>>()
    })?;

    let dir = out.subdir("theory")?;
    for (s, sys) in systems.iter().enumerate() {
        let reports = points.iter().filter(|p| p.system == s).map(|p| p.report.clone()).collect();
        dir.write_json(format!("system_{s}.json"), &SystemReports { system: sys.spec.clone(), reports })?;
    }
    out.write("scatter.csv", scatter_csv(&systems, &points))?;
    Ok(points)
}

fn scatter_csv(systems: &[GeneratedSystem], points: &[TheoryPoint]) -> String {
    let mut s = String::from(SCATTER_HEADER);
    s.push('\n');
    for p in points {
        let r = &p.report;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.system,
            family_label(&systems[p.system].spec.family),
            r.alpha,
            r.kappa,
            r.mu,
            r.margin_slice,
            r.condition_slice,
            r.kappa_s,
            r.mu_s,
            r.block_margin,
            r.block_condition,
            if p.final_error.is_some() { "ok" } else { "diverged" },
            opt_num(p.final_error),
        )
        .unwrap();
    }
    s
}
