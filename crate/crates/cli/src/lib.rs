//! Experiment runner for the `tensor-fsd` solvers.
//!
//! Each subcommand reads an [`config::ExperimentConfig`] JSON file and writes
//! CSV and JSON artifacts into an output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::Path;

use config::{Experiment, ExperimentConfig, Overrides, RunContext};
pub use error::{CliError, CliResult};

/// The subcommands that take an experiment config.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Synth,
    Theory,
    Deblur,
    ValidateBounds,
}

impl Command {
    pub fn expected_kind(self) -> &'static str {
        match self {
            Command::Synth => "synth_sweep",
            Command::Theory => "theory_check",
            Command::Deblur => "deblur",
            Command::ValidateBounds => "bound_validate",
        }
    }
}

/// Loads, validates and runs `config` under `cmd`, returning a one-line
/// result description.
pub fn run_command(cmd: Command, config: &Path, ov: &Overrides) -> CliResult<String> {
    let cfg = ExperimentConfig::load(config)?;
    run_config(cmd, &cfg, ov)
}

pub fn run_config(cmd: Command, cfg: &ExperimentConfig, ov: &Overrides) -> CliResult<String> {
    if cfg.experiment.kind() != cmd.expected_kind() {
        return Err(CliError::config(format!(
            "config describes a {} experiment, this subcommand runs {}",
            cfg.experiment.kind(),
            cmd.expected_kind()
        )));
    }
    cfg.validate()?;
    let ctx = RunContext::new(cfg, ov);
    let out = ctx.out.display().to_string();
    Ok(match &cfg.experiment {
        Experiment::SynthSweep(s) => {
            let cells = commands::synth::run(s, &ctx)?;
            let diverged = cells.iter().filter(|c| c.diverged).count();
            format!("synth: {} cells ({diverged} diverged) written to {out}", cells.len())
        }
        Experiment::TheoryCheck(t) => {
            let points = commands::theory::run(t, &ctx)?;
            let ok = points.iter().filter(|p| p.report.condition_slice).count();
            format!("theory: {} points, condition holds at {ok}; written to {out}", points.len())
        }
        Experiment::Deblur(d) => {
            let summary = commands::deblur::run(d, &ctx)?;
            let mut line = format!("deblur: blurred PSNR {:.3} dB SSIM {:.4}", summary.blurred.mean_psnr, summary.blurred.mean_ssim);
            for s in &summary.solvers {
                match &s.quality {
                    Some(q) => line += &format!("; {} PSNR {:.3} dB SSIM {:.4}", s.solver.name(), q.mean_psnr, q.mean_ssim),
                    None => line += &format!("; {} {}", s.solver.name(), s.status),
                }
            }
            line
        }
        Experiment::BoundValidate(b) => {
            let report = commands::bounds::run(b, &ctx)?;
            format!("validate-bounds: {} ({})", report.status, report.message)
        }
    })
}

