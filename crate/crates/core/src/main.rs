use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hystk_core::scenario::{execute, game_solve, validate_scenario, xcheck, Scenario, ScenarioError};

/// Relay, hysteresis, stochastic-relay and game computations from scenario files.
#[derive(Debug, Parser)]
#[command(name = "hystk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a scenario, resolve its names and validate its relays.
    Validate { scenario: PathBuf },
    /// Execute a scenario and write its CSV trace and report.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve a game scenario, optionally splitting every grid cell N times.
    GameSolve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        refine: usize,
        /// Also write the value table and report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the product and series fundamental matrices.
    Xcheck { scenario: PathBuf },
}

fn load(path: &Path) -> Result<Scenario, ScenarioError> {
    let mut sc = Scenario::load(path)?;
    sc.apply_seed_override()?;
    Ok(sc)
}

fn write(dir: &Path, file: &str, text: &str) -> Result<(), ScenarioError> {
    let path = dir.join(file);
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, text))
        .map_err(|source| ScenarioError::Io { path, source })
}

fn fail(e: &ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn run(path: &Path, out: &Path) -> ExitCode {
    let sc = match load(path) {
        Ok(sc) => sc,
        Err(e) => return fail(&e),
    };
    match execute(&sc) {
        Ok(ex) => {
            let written = write(out, &sc.trace_file(), &ex.trace.render())
                .and_then(|_| write(out, &sc.report_file(), &ex.report_text()));
            if let Err(e) = written {
                return fail(&e);
            }
            print!("{}", ex.report_text());
            ExitCode::from(ex.exit_code())
        }
        Err(e) => {
            // the report still records why the run stopped
            let _ = write(out, &sc.report_file(), &format!("error: {e}\n"));
            fail(&e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario } => match load(&scenario).and_then(|sc| validate_scenario(&sc)) {
            Ok(lines) => {
                println!("{}", lines.join("\n"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run { scenario, out } => run(&scenario, &out),
        Command::GameSolve { scenario, refine, out } => {
            let sc = match load(&scenario) {
                Ok(sc) => sc,
                Err(e) => return fail(&e),
            };
            match game_solve(&sc, refine) {
                Ok(g) => {
                    let report = g.report.join("\n") + "\n";
                    if let Some(dir) = out {
                        let written = write(&dir, &sc.trace_file(), &g.trace.render())
                            .and_then(|_| write(&dir, &sc.report_file(), &report));
                        if let Err(e) = written {
                            return fail(&e);
                        }
                    }
                    print!("{report}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Xcheck { scenario } => match load(&scenario).and_then(|sc| xcheck(&sc)) {
            Ok(x) => {
                println!("{}", x.lines().join("\n"));
                if x.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => fail(&e),
        },
    }
}
