//! `nvsqueeze`: runs experiment configs and writes CSV datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nvsqueeze::experiment::{run, ExperimentConfig, Kind, Units, ValidateSection};
use nvsqueeze::Error;

#[derive(Parser)]
#[command(
    name = "nvsqueeze",
    version,
    about = "Spin-squeezing experiments for NV ensembles in hybrid optomechanical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bogoliubov normal modes and effective couplings over a (Δ_bd, G) grid.
    NormalModes(Common),
    /// One-axis twisting: exact master equation and moment approximations.
    Oat(Common),
    /// Two-axis twisting via the Trotterized pulse sequence.
    Tat(Common),
    /// Cumulant, Holstein–Primakoff and closed-form traces.
    Cumulant(Common),
    /// Cartesian-product sweep over one or two parameters.
    Sweep(Common),
    /// Power-law fit of an optimum-vs-N table.
    Fit(Common),
    /// Oracle and invariant suite.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Optional for `validate`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted and the config names none.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override every numerical tolerance (validation thresholds and solver rtol).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Rate-unit convention: chi, chiJ or absolute.
    #[arg(long)]
    units: Option<String>,
}

enum Failure {
    Config(String),
    Solver(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Validation) => ExitCode::from(3),
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    let (kind, args) = match command {
        Command::NormalModes(a) => (Kind::NormalModes, a),
        Command::Oat(a) => (Kind::Oat, a),
        Command::Tat(a) => (Kind::Tat, a),
        Command::Cumulant(a) => (Kind::Cumulant, a),
        Command::Sweep(a) => (Kind::Sweep, a),
        Command::Fit(a) => (Kind::Fit, a),
        Command::Validate(a) => (Kind::Validate, a),
    };
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(&p.to_string_lossy())?,
        None if kind == Kind::Validate => ExperimentConfig::default(),
        None => return Err(Failure::Config("--config is required".into())),
    };
    match cfg.kind {
        Some(k) if k != kind => {
            return Err(Failure::Config(format!(
                "config declares kind = {:?} but the subcommand is {}",
                k.name(),
                kind.name()
            )))
        }
        _ => cfg.kind = Some(kind),
    }
    if let Some(u) = &args.units {
        cfg.units = Units::parse(u)?;
    }
    if let Some(tol) = args.tolerance {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::Config(format!("--tolerance must be positive, got {tol}")));
        }
        if kind == Kind::Validate {
            cfg.validate.get_or_insert_with(ValidateSection::default).tolerance = Some(tol);
        } else {
            cfg.solver.rtol = tol;
            cfg.solver.atol = tol * 1e-3;
        }
    }
    if args.jobs == Some(0) {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }

    let output = run(&cfg, args.jobs)?;
    let path = args.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    match &path {
        Some(p) => {
            for written in output.write_files(p)? {
                eprintln!("wrote {}", written.display());
            }
        }
        None => {
            for (_, t) in &output.tables {
                print!("{}", t.to_csv_string());
            }
        }
    }
    if let Some(report) = &output.validation {
        for line in report.lines() {
            eprintln!("{line}");
        }
        if !report.passed() {
            return Err(Failure::Validation);
        }
    }
    Ok(())
}
