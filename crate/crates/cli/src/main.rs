use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bdg_cli::{
    cmd_eigenfunction, cmd_oracle, cmd_spectrum, cmd_transmit, cmd_validate, cmd_zero_mode, load,
    CliError, EigenRequest, OracleRequest, Outcome, Problem, SpectrumRequest, TransmitRequest,
};
use bdg_core::fd::DEFAULT_GRID;
use clap::{Parser, Subcommand};

/// Spectra, vertex transmission and zero modes of the BdG equation on star graphs.
#[derive(Parser)]
#[command(name = "bdg-graph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the self-adjointness conditions of the vertex pair (A, B).
    Validate { config: PathBuf },
    /// Scan the secular equation and print the roots as CSV.
    Spectrum {
        config: PathBuf,
        /// Fail when the scan finds no roots.
        #[arg(long)]
        require_roots: bool,
        /// Compare against the finite-difference oracle.
        #[arg(long)]
        oracle: bool,
        /// Oracle grid size per bond.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        m: usize,
    },
    /// Sample one eigen-spinor on every bond.
    Eigenfunction {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        root_index: usize,
        /// Null vector of a degenerate root.
        #[arg(long, default_value_t = 0)]
        mode_index: usize,
        /// Use the solved zero modes instead of the scan.
        #[arg(long)]
        zero_mode: bool,
        /// Use the explicit three-bond zero mode.
        #[arg(long, conflicts_with = "zero_mode")]
        fixture: bool,
    },
    /// Vertex transmission matrix as JSON.
    Transmit {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "zero_mode")]
        energy: Option<f64>,
        #[arg(long, conflicts_with = "energy")]
        zero_mode: bool,
        /// Also emit the bond scattering matrix.
        #[arg(long)]
        scattering: bool,
    },
    /// Solve for zero-energy states and report their residuals.
    ZeroMode { config: PathBuf },
    /// Eigenvalues of the finite-difference discretisation.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        m: usize,
        #[arg(long, default_value_t = 24)]
        count: usize,
    },
}

fn config_path(cmd: &Command) -> &PathBuf {
    match cmd {
        Command::Validate { config }
        | Command::Spectrum { config, .. }
        | Command::Eigenfunction { config, .. }
        | Command::Transmit { config, .. }
        | Command::ZeroMode { config }
        | Command::Oracle { config, .. } => config,
    }
}

fn dispatch(cmd: &Command, problem: &Problem) -> Result<Outcome, CliError> {
    match *cmd {
        Command::Validate { .. } => Ok(cmd_validate(problem)),
        Command::Spectrum { require_roots, oracle, m, .. } => cmd_spectrum(
            problem,
            SpectrumRequest { require_roots, oracle_grid: oracle.then_some(m) },
        ),
        Command::Eigenfunction { root_index, mode_index, zero_mode, fixture, .. } => cmd_eigenfunction(
            problem,
            EigenRequest { root_index, mode_index, zero_mode, fixture },
        ),
        Command::Transmit { energy, zero_mode, scattering, .. } => {
            cmd_transmit(problem, TransmitRequest { energy, zero_mode, scattering })
        }
        Command::ZeroMode { .. } => cmd_zero_mode(problem),
        Command::Oracle { m, count, .. } => cmd_oracle(problem, OracleRequest { grid: m, count }),
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let problem = load(config_path(&cli.command))?;
    let outcome = dispatch(&cli.command, &problem)?;
    match &problem.output.path {
        Some(path) => std::fs::write(path, &outcome.machine)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.machine.as_bytes());
        }
    }
    eprint!("{}", outcome.human);
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
