use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pulsesis::config::load_scenario;
use pulsesis::{analyze, run_batch, LoadError, RunOptions};
use pulsesis_core::CheckId;

/// Simulate and check a time-varying SIS model with pulse culling.
#[derive(Parser)]
#[command(name = "pulsesis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate, analyse and monitor one or more scenarios.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated check ids; overrides the scenario files.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long)]
        plot: bool,
    },
    /// Load and validate scenarios without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
    /// Limiting-system analysis only.
    Analyze { scenario: PathBuf },
    /// List the check registry.
    Checks,
}

const EXIT_CONTRACT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;

fn report_load_error(path: &Path, e: &LoadError) {
    eprintln!("{}: {e}", path.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Checks => {
            for c in CheckId::ALL {
                println!("{:<40} {}", c.id(), c.statement());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenarios } => {
            let mut ok = true;
            for p in &scenarios {
                match load_scenario(p) {
                    Ok(_) => println!("{}: ok", p.display()),
                    Err(e) => {
                        report_load_error(p, &e);
                        ok = false;
                    }
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INPUT)
            }
        }
        Command::Analyze { scenario } => match load_scenario(&scenario) {
            Ok(l) => {
                let a = analyze(&l);
                println!("{}", serde_json::to_string_pretty(&a).expect("analysis serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                report_load_error(&scenario, &e);
                ExitCode::from(EXIT_INPUT)
            }
        },
        Command::Run { scenarios, out, checks, plot } => {
            let checks = match checks {
                Some(ids) => {
                    let mut parsed = Vec::new();
                    for id in &ids {
                        match CheckId::parse(id.trim()) {
                            Some(c) => parsed.push(c),
                            None => {
                                eprintln!("unknown check id `{id}`; see `pulsesis checks`");
                                return ExitCode::from(EXIT_INPUT);
                            }
                        }
                    }
                    Some(parsed)
                }
                None => None,
            };
            let mut loaded = Vec::new();
            for p in &scenarios {
                match load_scenario(p) {
                    Ok(l) => loaded.push(l),
                    Err(e) => {
                        report_load_error(p, &e);
                        return ExitCode::from(EXIT_INPUT);
                    }
                }
            }
            let opts = RunOptions { out_dir: out, checks, plot };
            let mut code = 0u8;
            for (l, res) in loaded.iter().zip(run_batch(&loaded, &opts)) {
                match res {
                    Ok(o) => {
                        print!("{}", o.report.summary());
                        let s = &o.report.status;
                        if s.integration_failed {
                            code = code.max(EXIT_INTEGRATION);
                        } else if !s.passed {
                            code = code.max(EXIT_CONTRACT);
                        }
                    }
                    Err(e) => {
                        eprintln!("{}: {e:#}", l.name);
                        code = code.max(EXIT_INPUT);
                    }
                }
            }
            ExitCode::from(code)
        }
    }
}
