//! `oem`: command-line front end for oem-core.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid flags, 3 config or input
//! schema violation, 4 simulation error.

// Negated comparisons deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "oem", version, about = "OAM-embedded massive-MIMO link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size a patch element or a converging reflector.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Dump the per-mode channel matrices as CSV.
    Channel(ChannelArgs),
    /// Water-fill power over a list of channel SNRs.
    Waterfill(WaterfillArgs),
    /// Sweep ergodic spectrum efficiency for OEM and the MIMO baseline.
    Simulate(SimulateArgs),
    /// Classify a geometry as Scenario I or II.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Subcommand)]
enum DesignCommand {
    /// Microstrip patch element.
    Patch(PatchArgs),
    /// Parabolic converging reflector.
    Dish(DishArgs),
}

#[derive(Debug, Args)]
pub struct PatchArgs {
    #[arg(long)]
    pub freq_ghz: f64,
    #[arg(long)]
    pub eps_r: f64,
    #[arg(long)]
    pub thickness_mm: f64,
    /// Element characteristic impedance (ohms).
    #[arg(long, default_value_t = 50.0)]
    pub z0: f64,
    /// Also write the record (and a manifest) to this JSON file.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct DishArgs {
    #[arg(long)]
    pub gain_db: f64,
    #[arg(long)]
    pub efficiency: f64,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub freq_ghz: f64,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[arg(long)]
    pub config: std::path::PathBuf,
    /// exact, bessel or convergent.
    #[arg(long, default_value = "convergent")]
    pub model: String,
    /// Only this mode; all modes when omitted.
    #[arg(long)]
    pub mode: Option<usize>,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct WaterfillArgs {
    /// CSV with columns i, l, gamma.
    #[arg(long)]
    pub input: std::path::PathBuf,
    #[arg(long)]
    pub total_power: f64,
    /// CSV with columns i, l, gamma, power.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: std::path::PathBuf,
    /// start:stop:step in dB, stop inclusive.
    #[arg(long)]
    pub snr_db: String,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// exact, bessel or convergent.
    #[arg(long, default_value = "convergent")]
    pub model: String,
    /// per-channel or total.
    #[arg(long, default_value = "per-channel")]
    pub normalization: String,
    /// Power budget, per channel or in total depending on --normalization.
    #[arg(long, default_value_t = 1.0)]
    pub total_power: f64,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub config: std::path::PathBuf,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("OEM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("OEM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Design(DesignCommand::Patch(a)) => commands::design_patch(&a),
        Command::Design(DesignCommand::Dish(a)) => commands::design_dish(&a),
        Command::Channel(a) => commands::channel(&a),
        Command::Waterfill(a) => commands::waterfill(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Scenario(a) => commands::scenario(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
