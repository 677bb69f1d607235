//! `lndimer`: dispersion coefficients, strength curves, adiabats and bound
//! levels of Er2 and Tm2 from the command line.

mod commands;
mod error;
mod manifest;
mod parse;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lndimer::Species;
use lndimer::curves::Model;
use serde::Serialize;

use crate::error::Failure;
use crate::manifest::{Manifest, sidecar};

#[derive(Parser, Debug)]
#[command(name = "lndimer", version, about = "Spin-tensor interaction model and bound states of Er2 and Tm2")]
struct Cli {
    /// Constants table (TOML) replacing the bundled one.
    #[arg(long, global = true, env = "LNDIMER_CONSTANTS")]
    constants: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Manifest file. Defaults to `<output>.manifest.json`, or stderr when
    /// writing to stdout.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Van der Waals coefficients from a line list.
    Dispersion(DispersionArgs),
    /// Strength functions sampled on a grid.
    Curves(CurvesArgs),
    /// Adiabatic potentials with symmetry labels.
    Adiabats(AdiabatsArgs),
    /// Least-squares strengths from labelled adiabatic energies.
    StrengthsFit(FitArgs),
    /// Coupled-channel bound levels.
    Levels(LevelsArgs),
    /// The constants table in use and, for a species, spectroscopic constants.
    Constants(ConstantsArgs),
}

/// Replacements for the bundled data tables.
#[derive(Args, Debug, Clone, Serialize)]
struct DataArgs {
    /// Line list CSV; repeat to merge several lists.
    #[arg(long)]
    lines: Vec<PathBuf>,
    /// Spin-stretched potential table `r_bohr,v_cm`.
    #[arg(long)]
    vss: Option<PathBuf>,
    /// Fitted strength table `r_bohr,v0_cm,v2_cm`.
    #[arg(long)]
    v2_table: Option<PathBuf>,
}

impl DataArgs {
    fn files(&self) -> Vec<PathBuf> {
        self.lines.iter().chain(&self.vss).chain(&self.v2_table).cloned().collect()
    }
}

#[derive(Args, Debug, Serialize)]
struct DispersionArgs {
    #[arg(long)]
    species: Species,
    /// Line list CSV; repeat to merge several lists.
    #[arg(long)]
    lines: Vec<PathBuf>,
    /// Also propagate uncertainties by sampling this many line lists.
    #[arg(long)]
    montecarlo: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct CurvesArgs {
    #[arg(long)]
    species: Species,
    /// `start:stop:step` in bohr.
    #[arg(long, default_value = "6:40:0.1")]
    grid: String,
    /// Comma-separated curve names (vss, v0_1, v2_1, v0_2, v2_2, v0_3, v2_3, v4_1; v0 and v2 are short
    /// for v0_1 and v2_1) or `all`.
    #[arg(long, default_value = "all")]
    which: String,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug, Serialize)]
struct AdiabatsArgs {
    #[arg(long)]
    species: Species,
    #[arg(long, default_value = "full")]
    model: Model,
    /// Comma-separated separations in bohr.
    #[arg(long, conflicts_with = "grid")]
    r: Option<String>,
    /// `start:stop:step` in bohr.
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[arg(long)]
    species: Species,
    /// Labelled energies, columns `r_bohr,n,omega,sigma,reflection,u_rel_cm`.
    #[arg(long)]
    input: PathBuf,
    /// Fit only V0(1) and V2(1).
    #[arg(long)]
    two_tensor: bool,
    /// Fit absolute energies instead of splittings from the stretched state.
    #[arg(long)]
    unconstrained: bool,
    /// One-sigma uncertainty of each energy, cm^-1.
    #[arg(long, default_value_t = 10.0)]
    u: f64,
    #[command(flatten)]
    data: DataArgs,
}

/// Radial grid and solver settings.
#[derive(Args, Debug, Clone, Serialize)]
struct GridArgs {
    /// Number of radial grid points.
    #[arg(long, default_value_t = lndimer::rovib::DvrGrid::default().n)]
    grid_n: usize,
    #[arg(long, default_value_t = lndimer::rovib::DvrGrid::default().r_min)]
    r_min: f64,
    #[arg(long, default_value_t = lndimer::rovib::DvrGrid::default().r_max)]
    r_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SolverKind {
    Auto,
    Dense,
    Contracted,
}

#[derive(Args, Debug, Serialize)]
struct LevelsArgs {
    #[arg(long)]
    species: Species,
    /// Total angular momentum, `J` or `Jmin:Jmax`.
    #[arg(long = "J", default_value = "0")]
    j: String,
    #[arg(long, default_value = "full")]
    model: Model,
    /// `physical`, `all`, or a comma-separated list such as `g/even,u/odd`.
    #[arg(long, default_value = "physical")]
    blocks: String,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = SolverKind::Auto)]
    solver: SolverKind,
    /// Radial functions per channel for the contracted solver.
    #[arg(long, default_value_t = lndimer::rovib::DEFAULT_NV)]
    nv: usize,
    /// At most this many levels per J and block.
    #[arg(long, default_value_t = 40)]
    max_levels: usize,
    /// Keep levels below this energy, cm^-1.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    e_max: f64,
    /// Drop the centrifugal term.
    #[arg(long)]
    no_rotation: bool,
    /// Skip the grid-refinement check.
    #[arg(long)]
    no_convergence: bool,
    /// Levels compared in the grid-refinement check.
    #[arg(long, default_value_t = 5)]
    convergence_levels: usize,
    /// Fail with exit code 3 if refinement moves a level by more than this, cm^-1.
    #[arg(long)]
    max_shift: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug, Serialize)]
struct ConstantsArgs {
    /// Add spectroscopic constants of this species.
    #[arg(long)]
    species: Option<Species>,
    #[arg(long, default_value = "full")]
    model: Model,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    data: DataArgs,
}

/// Result of one subcommand before it is written.
pub struct Outcome {
    body: String,
    inputs: Vec<PathBuf>,
    convergence: Option<Vec<lndimer::rovib::ConvergenceReport>>,
    /// Reported after the output and manifest are written.
    late_failure: Option<Failure>,
}

fn run(cli: Cli) -> Result<Option<Failure>, Failure> {
    let constants = match &cli.constants {
        Some(p) => lndimer::Constants::from_path(p)?,
        None => lndimer::Constants::bundled(),
    };
    let (name, default_format, params) = match &cli.command {
        Command::Dispersion(a) => ("dispersion", Format::Json, serde_json::to_value(a)?),
        Command::Curves(a) => ("curves", Format::Csv, serde_json::to_value(a)?),
        Command::Adiabats(a) => ("adiabats", Format::Csv, serde_json::to_value(a)?),
        Command::StrengthsFit(a) => ("strengths-fit", Format::Csv, serde_json::to_value(a)?),
        Command::Levels(a) => ("levels", Format::Csv, serde_json::to_value(a)?),
        Command::Constants(a) => ("constants", Format::Json, serde_json::to_value(a)?),
    };
    let format = cli.format.unwrap_or(default_format);
    let config = manifest::RunConfig {
        command: name,
        format: serde_json::to_value(format)?.as_str().unwrap_or_default().to_string(),
        constants_file: cli.constants.clone(),
        params,
    };
    log::info!("{name}: config {}", serde_json::to_string(&config)?);
    let c = &constants;
    let out = match &cli.command {
        Command::Dispersion(a) => commands::dispersion(a, format, c)?,
        Command::Curves(a) => commands::curves(a, format, c)?,
        Command::Adiabats(a) => commands::adiabats(a, format, c)?,
        Command::StrengthsFit(a) => commands::strengths_fit(a, format, c)?,
        Command::Levels(a) => commands::levels(a, format, c)?,
        Command::Constants(a) => commands::constants(a, format, c)?,
    };

    let mut inputs = out.inputs.clone();
    inputs.extend(cli.constants.iter().cloned());
    let m = Manifest::new(&config, c, &inputs, cli.output.as_deref(), out.body.as_bytes(), out.convergence.as_deref())?;
    let mtext = serde_json::to_string_pretty(&m)? + "\n";
    match &cli.output {
        Some(p) => std::fs::write(p, &out.body).map_err(|e| Failure::validation(format!("cannot write {}: {e}", p.display())))?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(out.body.as_bytes())?;
            so.flush()?;
        }
    }
    let mpath = cli.manifest.clone().or_else(|| cli.output.as_deref().map(sidecar));
    match mpath {
        Some(p) => std::fs::write(&p, mtext).map_err(|e| Failure::validation(format!("cannot write {}: {e}", p.display())))?,
        None => std::io::stderr().write_all(mtext.as_bytes())?,
    }
    Ok(out.late_failure)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(f)) | Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
