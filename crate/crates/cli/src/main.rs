use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fpif_cli::run::{run, Overrides};
use fpif_cli::verify::{verify, DEFAULT_VERIFY_TOL};
use fpif_cli::CliError;
use fpif_core::solver::Status;

/// Monotone inclusion and game solvers driven by JSON problem files.
#[derive(Parser)]
#[command(name = "fpif", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and write solution, trace and report files.
    Run {
        config: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Output directory (default: the config's `output.dir`, else its directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute the residuals of a solution file and print them as JSON.
    Verify {
        solution: PathBuf,
        config: PathBuf,
        /// Bound on the decisive residuals.
        #[arg(long, default_value_t = DEFAULT_VERIFY_TOL)]
        tol: f64,
    },
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("FPIF_LOG", "error");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    init_logging();
    match Cli::parse().command {
        Command::Run {
            config,
            max_iter,
            tol,
            gamma,
            out,
            seed,
        } => {
            let overrides = Overrides {
                max_iter,
                tol,
                gamma,
                out,
                seed,
            };
            match run(&config, &overrides) {
                Ok(report) => {
                    println!(
                        "{}: {} after {} iterations, residual {:e}",
                        report.kind,
                        report.status.as_str(),
                        report.iterations,
                        report.residual
                    );
                    for (name, v) in &report.checks.values {
                        println!("  {name} = {v:e}");
                    }
                    println!("  solution: {}", report.solution_path.display());
                    println!("  trace:    {}", report.trace_path.display());
                    println!("  report:   {}", report.report_path.display());
                    ExitCode::from(match report.status {
                        Status::Converged => 0,
                        Status::MaxIter => 2,
                        Status::Diverged => 3,
                    })
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { solution, config, tol } => match verify(&solution, &config, tol) {
            Ok(report) => {
                let text = serde_json::to_string_pretty(&report.to_json()).expect("serializable");
                // a closed pipe (e.g. `| head`) is not an error
                let _ = writeln!(std::io::stdout(), "{text}");
                ExitCode::from(if report.ok { 0 } else { 2 })
            }
            Err(e) => fail(e),
        },
    }
}
