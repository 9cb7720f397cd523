use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lewis_ipm::cli::{self, DiagnoseKind, DiagnoseOptions};
use lewis_ipm::error::Error;
use lewis_ipm::lewis::WeightMode;
use lewis_ipm::pathfollow::Profile;

#[derive(Parser)]
#[command(name = "lwipm", version, about = "Lewis-weight interior point solver")]
struct Args {
    /// Constant profile: strict or practical.
    #[arg(long, global = true, default_value = "practical")]
    profile: Profile,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Accuracy; each command has its own default.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Progress on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Approx,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an LP given as JSON.
    LpSolve { file: PathBuf },
    /// Solve a DIMACS min-cost flow instance exactly.
    FlowSolve {
        #[arg(long)]
        maxflow: bool,
        file: PathBuf,
    },
    /// Lewis weights of a whitespace matrix file.
    LewisWeights {
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        file: PathBuf,
    },
    /// Evaluate the Lewis barrier and probe its self-concordance.
    BarrierProbe {
        /// Defaults to max(ln m, 4).
        #[arg(long)]
        q: Option<f64>,
        /// Comma-separated point; defaults to the origin.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Comma-separated offsets; defaults to Ax − 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        probes: usize,
        file: PathBuf,
    },
    /// Check the invariants on an instance; exit 0 iff all hold.
    Diagnose {
        #[arg(long, default_value = "lp")]
        kind: DiagnoseKind,
        #[arg(long, hide = true)]
        corrupt_weights: bool,
        file: PathBuf,
    },
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::LpSolve { .. } => "lp-solve",
        Command::FlowSolve { .. } => "flow-solve",
        Command::LewisWeights { .. } => "lewis-weights",
        Command::BarrierProbe { .. } => "barrier-probe",
        Command::Diagnose { .. } => "diagnose",
    }
}

fn check_eps(eps: f64) -> Result<f64, Error> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(Error::InvalidTolerance(eps))
    }
}

fn run(args: &Args) -> Result<(String, i32), Error> {
    let eps = |default: f64| check_eps(args.eps.unwrap_or(default));
    match &args.command {
        Command::LpSolve { file } => {
            let v = cli::run_lp_solve(file, eps(1e-5)?, args.profile, args.seed)?;
            Ok((cli::to_pretty(&v), 0))
        }
        Command::FlowSolve { maxflow, file } => {
            let v = cli::run_flow_solve(file, *maxflow, args.profile, args.seed)?;
            Ok((cli::to_pretty(&v), 0))
        }
        Command::LewisWeights { p, mode, file } => {
            let mode = match mode {
                Mode::Exact => WeightMode::Exact,
                Mode::Approx => WeightMode::Approximate,
            };
            Ok((cli::run_lewis_weights(file, *p, eps(1e-8)?, mode, args.seed)?, 0))
        }
        Command::BarrierProbe { q, x, b, probes, file } => {
            let v = cli::run_barrier_probe(file, *q, x.clone(), b.clone(), *probes, args.seed)?;
            Ok((cli::to_pretty(&v), 0))
        }
        Command::Diagnose { kind, corrupt_weights, file } => {
            let opts = DiagnoseOptions {
                eps: eps(1e-5)?,
                seed: args.seed,
                profile: args.profile,
                corrupt_weights: *corrupt_weights,
            };
            let (v, code) = cli::run_diagnose(file, *kind, &opts)?;
            Ok((cli::to_pretty(&v), code))
        }
    }
}

fn emit(args: &Args, text: &str) -> Result<(), Error> {
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let name = command_name(&args.command);
    let started = std::time::Instant::now();
    let result = run(&args);
    if args.verbose > 0 {
        eprintln!("{name}: {:.3}s", started.elapsed().as_secs_f64());
    }
    match result {
        Ok((text, code)) => {
            if let Err(e) = emit(&args, &text) {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if !matches!(args.command, Command::LewisWeights { .. }) {
                let _ = emit(&args, &cli::to_pretty(&cli::error_json(name, &e)));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
