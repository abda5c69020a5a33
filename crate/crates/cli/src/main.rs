use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cvclone_cli::report::simulate;
use cvclone_cli::scenario::{Format, Scenario};
use cvclone_cli::sweep::{self, IntRange, SweepSpec};
use cvclone_cli::verify::{self, VerifyOptions};
use cvclone_cli::{CliError, THREADS_ENV};

/// Simulate linear-optics cloning machines fed with phase-conjugate coherent
/// states.
///
/// Exit status: 0 all checks pass, 1 a check failed, 2 parse error,
/// 3 validation error. Set CVCLONE_THREADS to cap worker threads.
#[derive(Parser)]
#[command(name = "cvclone", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file through all engines and write a report.
    ///
    /// Scenario keys: machine (pci | reversible | reference-only), N, M,
    /// eta (default 1.0), epr_r (default null), alpha {x, p} (default 0, 0),
    /// mc {shots (default 100000), seed (default 0)} or null,
    /// outputs (default ["json"]; also "csv").
    Simulate {
        file: PathBuf,
        /// Report path [default: <file>.report.json next to the scenario].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate closed-form fidelities over a parameter grid as CSV.
    Sweep {
        /// Replica pairs, `A..B` inclusive or a single value.
        #[arg(long)]
        n: IntRange,
        /// Clones, `A..B` inclusive or a single value.
        #[arg(long)]
        m: IntRange,
        /// Homodyne efficiencies.
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        eta: Vec<f64>,
        /// EPR squeezing values; adds the anticlone column.
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in acceptance sweep and print a pass/fail table.
    Verify {
        /// Monte Carlo shots per statistical check.
        #[arg(long, default_value_t = 100_000)]
        mc_shots: usize,
        /// Tolerance for analytic formula checks.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Test hook: offset added to every simulated variance.
        #[arg(long, default_value_t = 0.0, hide = true, allow_negative_numbers = true)]
        perturb_variance: f64,
    },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn default_report_path(file: &Path) -> PathBuf {
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
    file.with_file_name(format!("{stem}.report.json"))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Simulate { file, out } => {
            let text = fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
            let scenario = Scenario::from_json(&text)?;
            let report = simulate(&scenario)?;
            let json_path = out.unwrap_or_else(|| default_report_path(&file));
            for format in &scenario.outputs {
                match format {
                    Format::Json => write(&json_path, &report.to_json())?,
                    Format::Csv => write(&json_path.with_extension("csv"), &report.to_csv())?,
                }
            }
            for c in &report.checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {:<34} {:.3e} (limit {:.0e})", c.name, c.value, c.tolerance);
            }
            Ok(report.passed)
        }
        Command::Sweep { n, m, eta, r, out } => {
            let rows = SweepSpec { n, m, eta, r }.run()?;
            write(&out, &sweep::render(&rows))?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(true)
        }
        Command::Verify { mc_shots, tol, perturb_variance } => {
            let opts = VerifyOptions { mc_shots, tol, perturb_variance, ..VerifyOptions::default() };
            if opts.mc_shots < cvclone::montecarlo::MIN_SHOTS {
                return Err(CliError::Validation(format!(
                    "--mc-shots must be at least {}",
                    cvclone::montecarlo::MIN_SHOTS
                )));
            }
            let lines = verify::run(&opts)?;
            print!("{}", verify::render(&lines));
            Ok(lines.iter().all(|l| l.passed))
        }
    }
}

fn cap_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cap_threads().and_then(|()| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
