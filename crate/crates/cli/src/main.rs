use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use synchro_cli::{load_config, report_problems, run_analysis, run_check, CliError, Command, Overrides, Report};

const AFTER_HELP: &str = "\
Config files are JSON. Parameter keys: J, D, T_m (single) or T_m1, T_m2 (two),
R and L (aggregates) or R_s, R_l, R_L, L_s, L_l (components), L3 (tie line),
b or M_f with i_f. Angles are in radians and speeds in rad/s.

Exit codes: 0 success, 1 usage or config error, 2 numeric failure,
3 internal inconsistency (including polynomial/Newton disagreement).";

#[derive(Debug, Parser)]
#[command(name = "synchro", version, about = "Equilibria and stability of synchronous machine systems", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Analysis config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the Newton multistart grid.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative residual an equilibrium must meet.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// List equilibria.
    Equilibria(Common),
    /// List equilibria with stability verdicts.
    Stability(Common),
    /// Integrate the model from an initial state.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial speed with zero angles and currents [rad/s].
        #[arg(long)]
        omega0: Option<f64>,
    },
    /// Final speeds over a grid of initial speeds (single machine).
    Basin {
        #[command(flatten)]
        common: Common,
        /// Initial speeds as start:stop:step [rad/s].
        #[arg(long)]
        grid: Option<String>,
    },
    /// Run the built-in regression cases.
    Check,
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn render(report: &Report, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
        Format::Csv => {
            if let Some(tr) = &report.trajectory {
                let mut buf = Vec::new();
                tr.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
                String::from_utf8(buf).expect("CSV is ASCII")
            } else if report.basin.is_some() {
                report.basin_csv()
            } else {
                report.to_csv_summary()
            }
        }
    })
}

fn run(common: &Common, command: Command, overrides: Overrides) -> Result<(), CliError> {
    let mut cfg = load_config(&common.config)?;
    Overrides { seed: common.seed, tolerance: common.tol, ..overrides }.apply(&mut cfg)?;
    let report = run_analysis(&cfg, command)?;
    write_output(&common.out, &render(&report, common.format)?)?;
    match report_problems(&report) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Sub::Equilibria(c) => run(c, Command::Equilibria, Overrides::default()),
        Sub::Stability(c) => run(c, Command::Stability, Overrides::default()),
        Sub::Simulate { common, omega0 } => {
            run(common, Command::Simulate, Overrides { omega0: *omega0, ..Default::default() })
        }
        Sub::Basin { common, grid } => {
            run(common, Command::Basin, Overrides { grid: grid.clone(), ..Default::default() })
        }
        Sub::Check => {
            let lines = run_check();
            for l in &lines {
                println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            if lines.iter().all(|l| l.pass) {
                Ok(())
            } else {
                Err(CliError::Inconsistency("regression check failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
