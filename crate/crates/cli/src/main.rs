use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use powerbound_cli::config::{parse_config, RunConfig, DEFAULT_CONFIG};
use powerbound_cli::runner::{run, sweep, RunReport};
use powerbound_core::ScenarioKind;

#[derive(Parser)]
#[command(name = "powerbound", version, about = "Check power bounds for autonomous quantum machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunOpts {
    /// Output directory (overrides the config).
    #[arg(long, env = "POWERBOUND_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config (the bundled config when omitted).
    Run {
        config: Option<PathBuf>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run one scenario for each value of a parameter.
    Sweep {
        config: PathBuf,
        /// `<field>` or `<scenario>.<field>`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List the available scenario kinds.
    ListScenarios,
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

const EXIT_CONFIG: u8 = 2;

fn load(path: Option<&PathBuf>, opts: Option<&RunOpts>) -> Result<RunConfig, String> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    let mut config = parse_config(&text).map_err(|e| e.to_string())?;
    if let Some(o) = opts {
        if let Some(out) = &o.out {
            config.output_dir = out.clone();
        }
        if let Some(w) = o.workers {
            if w == 0 {
                return Err("--workers must be at least 1".into());
            }
            config.workers = Some(w);
        }
    }
    Ok(config)
}

fn summarize(report: &RunReport) {
    for s in &report.scenarios {
        let status = if s.pass { "PASS" } else { "FAIL" };
        match (&s.outcome, &s.error) {
            (Some(o), _) => {
                let b = &o.bound_report;
                let sat = b
                    .saturation_fluctuation
                    .map(|x| format!("{x:.6}"))
                    .unwrap_or_else(|| "n/a".into());
                println!(
                    "[{status}] {:<28} W={:+.6e} P={:+.6e} bound={:.6e} saturation={sat}",
                    s.name, b.work, b.power, b.rhs_fluctuation
                );
                for c in o.checks.iter().filter(|c| !c.passed) {
                    println!("         failed check {}: residual={:e} tol={:e}", c.name, c.residual, c.tolerance);
                }
            }
            (None, Some(e)) => println!("[{status}] {:<28} error: {e}", s.name),
            (None, None) => println!("[{status}] {}", s.name),
        }
    }
    if report.bound_violation {
        println!("bound violation detected");
    }
    println!("digest {}", report.digest);
}

fn finish(result: Result<RunReport, powerbound_cli::RunError>, out: &std::path::Path) -> ExitCode {
    match result {
        Ok(report) => {
            summarize(&report);
            println!("wrote {}", out.display());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for k in ScenarioKind::ALL {
                println!("{:<24} {}", k.as_str(), k.description());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(Some(&config), None) {
            Ok(c) => {
                for s in &c.scenarios {
                    println!("{:<24} {} (hbar={})", s.name, s.kind(), s.hbar);
                }
                println!("ok: {} scenario(s)", c.scenarios.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprint!("{e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run { config, opts } => match load(config.as_ref(), Some(&opts)) {
            Ok(c) => finish(run(&c), &c.output_dir),
            Err(e) => {
                eprint!("{e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Sweep {
            config,
            param,
            values,
            opts,
        } => match load(Some(&config), Some(&opts)) {
            Ok(c) => match sweep(&c, &param, &values) {
                Ok(s) => finish(Ok(s.report), &c.output_dir),
                Err(e @ powerbound_cli::RunError::Sweep(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
                Err(e) => finish(Err(e), &c.output_dir),
            },
            Err(e) => {
                eprint!("{e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
