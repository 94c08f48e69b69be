use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use phonon_chill_cli::runner::{dump_preset, run, Command, Overrides};
use phonon_chill_cli::scenario::{Scenario, PRESET_NAMES};
use phonon_chill_cli::CliError;

/// Ground-state cooling simulator for four-level spin–vibration systems.
#[derive(Parser)]
#[command(name = "phonon-chill", version, about)]
struct Cli {
    #[command(subcommand)]
    command: TopCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON with an `si` or `dimensionless` block).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fock-space truncation override.
    #[arg(long)]
    fock: Option<usize>,
    /// Integrator tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Spectrum grid bounds and size (units of the trap frequency).
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_steps: Option<usize>,
    /// Evolution horizon in units of 1/ω_k.
    #[arg(long)]
    t_final: Option<f64>,
    /// Worker threads for independent rows (compare).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum TopCommand {
    /// Fluctuation spectrum S(ω) over a frequency grid (CSV + JSON).
    Spectrum(CommonArgs),
    /// Heating/cooling coefficients A± plus the closed-form values (JSON).
    Coefficients(CommonArgs),
    /// Full master-equation cooling trajectory ⟨n(t)⟩ (CSV + JSON).
    Evolve(CommonArgs),
    /// Steady-state density-matrix summary (JSON).
    Steadystate(CommonArgs),
    /// Robustness scan of ⟨n⟩_ss against one control parameter (CSV + JSON).
    Robust(CommonArgs),
    /// Four-scheme cooling comparison at shared coupling and bath (CSV + JSON).
    Compare(CommonArgs),
    /// List presets or dump one as a scenario file.
    Preset {
        /// Preset name, or `list`.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn overrides_of(args: &CommonArgs) -> Overrides {
    Overrides {
        out_dir: args.out.clone(),
        fock_dim: args.fock,
        tol: args.tol,
        omega_min: args.omega_min,
        omega_max: args.omega_max,
        omega_steps: args.omega_steps,
        t_final: args.t_final,
        threads: args.threads,
    }
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("read {path:?}: {e}")))?;
    Scenario::from_json(&text)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (command, args) = match cli.command {
        TopCommand::Spectrum(a) => (Command::Spectrum, a),
        TopCommand::Coefficients(a) => (Command::Coefficients, a),
        TopCommand::Evolve(a) => (Command::Evolve, a),
        TopCommand::Steadystate(a) => (Command::SteadyState, a),
        TopCommand::Robust(a) => (Command::Robust, a),
        TopCommand::Compare(a) => (Command::Compare, a),
        TopCommand::Preset { name, out } => {
            if name == "list" {
                for preset in PRESET_NAMES {
                    println!("{preset}");
                }
            } else {
                let dir = out.unwrap_or_else(|| PathBuf::from("."));
                let path = dump_preset(&name, &dir)?;
                println!("{}", path.display());
            }
            return Ok(());
        }
    };
    let scenario = load_scenario(&args.config)?;
    let written = run(command, &scenario, &overrides_of(&args))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let body = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.to_string() }
            });
            eprintln!("{body}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
