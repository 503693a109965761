use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tensor_fsd_cli::commands::tensor;
use tensor_fsd_cli::config::Overrides;
use tensor_fsd_cli::{run_command, CliError, Command};

#[derive(Parser)]
#[command(name = "tfsd", version, about = "Frontal-slice descent experiments for t-product tensor systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for grid cells.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solver × learning-rate sweeps over synthetic systems.
    Synth(RunArgs),
    /// Theory constants and feasibility over a learning-rate sweep.
    Theory(RunArgs),
    /// Blur and reconstruct images.
    Deblur(RunArgs),
    /// Check observed errors against the bound sequences.
    ValidateBounds(RunArgs),
    /// Inspect or convert tensor files (.tns, .json, .csv).
    Tensor {
        #[command(subcommand)]
        action: TensorCmd,
    },
}

#[derive(Subcommand)]
enum TensorCmd {
    /// Print dimensions and norms as JSON.
    Inspect { path: PathBuf },
    /// Convert between formats, chosen by extension.
    Convert { input: PathBuf, output: PathBuf },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let (cmd, args) = match cli.command {
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Theory(a) => (Command::Theory, a),
        Cmd::Deblur(a) => (Command::Deblur, a),
        Cmd::ValidateBounds(a) => (Command::ValidateBounds, a),
        Cmd::Tensor { action: TensorCmd::Inspect { path } } => {
            let summary = tensor::inspect(&path)?;
            return Ok(serde_json::to_string_pretty(&summary).map_err(tensor_fsd::Error::from)?);
        }
        Cmd::Tensor { action: TensorCmd::Convert { input, output } } => {
            tensor::convert(&input, &output)?;
            return Ok(format!("wrote {}", output.display()));
        }
    };
    let ov = Overrides { out: args.out, seed: args.seed, threads: args.threads };
    run_command(cmd, &args.config, &ov)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tfsd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
