use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ultraglab::run::run_scenario;
use ultraglab::scenario::Scenario;
use ultraglab::selftest::{render, run_selftest, SelftestConfig};
use ultraglab::Error;

#[derive(Parser)]
#[command(name = "ultraglab", version, about = "Generalized-function nets: classification, embedding and microlocal checks")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write report.json, fits.csv and spectra.csv.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the built-in acceptance batteries.
    Selftest {
        /// Also write the table to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, hide = true)]
        moment_tol: Option<f64>,
    },
    /// Print the builtin nets and their parameters.
    ListBuiltins,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURES: u8 = 3;

fn run(path: &Path, out: &Path) -> Result<bool, Error> {
    let start = std::time::Instant::now();
    let scenario = Scenario::load(path)?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let output = run_scenario(&scenario, &base)?;
    output.write(out)?;
    let r = &output.report;
    let errors = r.nets.iter().filter_map(|n| n.error.as_deref()).chain(r.analyses.iter().filter_map(|a| a.error.as_deref()));
    for (place, error) in r.failures.iter().zip(errors) {
        eprintln!("{place}: {error}");
    }
    eprintln!("wall-clock {:.2} s", start.elapsed().as_secs_f64());
    Ok(output.report.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot set up {n} threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match cli.command {
        Command::Run { scenario, out } => match run(&scenario, &out) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_FAILURES),
            Err(e @ (Error::Config { .. } | Error::Json(_))) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG)
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::FAILURE
            }
        },
        Command::Selftest { report, moment_tol } => {
            let mut cfg = SelftestConfig::default();
            if let Some(t) = moment_tol {
                cfg.moment_tol = t;
            }
            let (outcomes, seconds) = run_selftest(&cfg);
            let table = render(&outcomes);
            print!("{table}");
            println!("elapsed {seconds:.1} s");
            if let Some(path) = report {
                if let Err(e) = std::fs::write(&path, &table) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            }
            if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURES)
            }
        }
        Command::ListBuiltins => {
            print!("{}", ultraglab::nets::list_builtins());
            ExitCode::SUCCESS
        }
    }
}
