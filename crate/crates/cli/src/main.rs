//! `qfl`: run scenario files, list checks, dump fields and integrate
//! trajectories.
//!
//! Exit status: 0 when everything passed, 1 when a check failed, 2 for
//! usage errors, 3 for an unreadable or invalid configuration, 4 for an
//! unknown equation_id, 5 when the grid exceeds the point budget and 6 for
//! any other runtime error.

use clap::{Parser, Subcommand, ValueEnum};
use qfluid::dynamics::{integrate_trajectory, mass_flux_along, TrajectoryOptions, VelocityKind};
use qfluid::fields::{bundle, FieldOptions, Provenance, Sign};
use qfluid::grid::io::{write_csv, Envelope};
use qfluid::residuals::{list_checks, run_check, CheckOptions};
use qfluid::scenario::{run, GridSpec, RunOptions, Scenario};
use qfluid::states::{parse_real, AnalyticState};
use qfluid::Error;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_UNKNOWN_ID: u8 = 4;
const EXIT_BUDGET: u8 = 5;
const EXIT_RUNTIME: u8 = 6;

#[derive(Parser)]
#[command(
    name = "qfl",
    version,
    about = "Residual checks of the fluid form of quantum states"
)]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true, env = "QFL_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProvenanceArg {
    Analytic,
    Grid,
}

impl From<ProvenanceArg> for Provenance {
    fn from(p: ProvenanceArg) -> Self {
        match p {
            ProvenanceArg::Analytic => Provenance::Analytic,
            ProvenanceArg::Grid => Provenance::Grid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Minus,
    Plus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Minus => Sign::Minus,
            SignArg::Plus => Sign::Plus,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write its manifest.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print every check id with its equation label.
    ListChecks {
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write the field bundle of a state on a grid as CSV.
    FieldDump {
        #[arg(long)]
        state: String,
        /// Compact (`radial:n=400,r_max=40`) or JSON grid spec.
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        at: f64,
        #[arg(long, value_enum, default_value = "analytic")]
        provenance: ProvenanceArg,
        #[arg(long, value_enum, default_value = "minus")]
        sign: SignArg,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one path along a velocity field and write it as CSV.
    Trajectory {
        #[arg(long)]
        state: String,
        /// Comma-separated coordinates, e.g. `1,0,0`.
        #[arg(long, allow_hyphen_values = true)]
        seed: String,
        /// u_minus, u_plus, v, u_spin or w_sum.
        #[arg(long)]
        velocity: String,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long, value_enum, default_value = "minus")]
        sign: SignArg,
        #[arg(long)]
        renormalize_spin: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single check and print its JSON report.
    Check {
        #[arg(long)]
        state: String,
        #[arg(long)]
        grid: String,
        #[arg(long = "check")]
        id: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        at: f64,
        #[arg(long, value_enum, default_value = "analytic")]
        provenance: ProvenanceArg,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownCheck(_) => EXIT_UNKNOWN_ID,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Io(_)
        | Error::Json(_)
        | Error::Scenario(_)
        | Error::Label { .. }
        | Error::UnsupportedState(_)
        | Error::InvalidGrid(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn parse_seed(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|v| parse_real(v.trim()).map_err(|e| Error::Scenario(format!("seed `{text}`: {e}"))))
        .collect()
}

fn build_grid(text: &str) -> Result<Arc<qfluid::grid::Grid>, Error> {
    Ok(Arc::new(text.parse::<GridSpec>()?.build()?))
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run {
            scenario,
            output_dir,
        } => {
            let s = Scenario::load(&scenario)?;
            let outcome = run(
                &s,
                &RunOptions {
                    jobs: cli.jobs,
                    output_dir,
                },
            )?;
            let m = &outcome.manifest;
            for c in &m.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                match (&c.error, c.residual_linf) {
                    (Some(e), _) => writeln!(stdout, "{status} {} t={} error: {e}", c.id, c.time)?,
                    (None, Some(linf)) => writeln!(
                        stdout,
                        "{status} {} t={} linf={linf:.3e} tol={:.3e}",
                        c.id,
                        c.time,
                        c.tolerance.unwrap_or(f64::NAN)
                    )?,
                    (None, None) => writeln!(stdout, "{status} {} t={}", c.id, c.time)?,
                }
            }
            for t in m.trajectories.iter().filter(|t| !t.passed) {
                writeln!(
                    stdout,
                    "FAIL trajectory {}: {}",
                    t.index,
                    t.error.as_deref().unwrap_or("")
                )?;
            }
            for f in m.fields.iter().filter(|f| !f.passed) {
                writeln!(
                    stdout,
                    "FAIL fields t={}: {}",
                    f.time,
                    f.error.as_deref().unwrap_or("")
                )?;
            }
            if let Some(c) = &m.conservation {
                writeln!(
                    stdout,
                    "{} conservation_experiment{}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.error
                        .as_ref()
                        .map(|e| format!(" error: {e}"))
                        .unwrap_or_default()
                )?;
            }
            writeln!(
                stdout,
                "{}/{} checks passed; manifest {}",
                m.summary.checks_passed,
                m.summary.checks,
                outcome.output_dir.join("manifest.json").display()
            )?;
            Ok(m.passed)
        }
        Command::ListChecks { json } => {
            let checks = list_checks();
            if json {
                writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&Envelope::new("check_list", None, checks))?
                )?;
            } else {
                let rows: Vec<String> = checks
                    .iter()
                    .map(|c| format!("{} → Eq. ({})", c.id, c.label))
                    .collect();
                let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
                for (row, c) in rows.iter().zip(checks) {
                    let pad = width - row.chars().count();
                    writeln!(stdout, "{row}{:pad$}  {}", "", c.description)?;
                }
            }
            Ok(true)
        }
        Command::FieldDump {
            state,
            grid,
            at,
            provenance,
            sign,
            out,
        } => {
            let s = AnalyticState::from_label(&state)?;
            let g = build_grid(&grid)?;
            let opts = FieldOptions {
                sign: sign.into(),
                provenance: provenance.into(),
                ..Default::default()
            };
            let b = bundle(&s, &g, at, &opts)?;
            drop(stdout);
            write_csv(output(&out)?, &g, &b.columns())?;
            Ok(true)
        }
        Command::Trajectory {
            state,
            seed,
            velocity,
            dt,
            steps,
            t0,
            sign,
            renormalize_spin,
            out,
        } => {
            let s = AnalyticState::from_label(&state)?;
            let kind: VelocityKind = velocity.parse()?;
            let opts = TrajectoryOptions {
                t0,
                sign: sign.into(),
                renormalize_spin,
                ..Default::default()
            };
            let tr = integrate_trajectory(&s, &parse_seed(&seed)?, kind, dt, steps, &opts)?;
            drop(stdout);
            tr.write_csv(output(&out)?)?;
            let flux = mass_flux_along(&tr, &s, &opts)?;
            let max_div = flux.div_flux.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            eprintln!(
                "{} points, termination {} at t={}, max |div(rho vel)| = {max_div:.3e}",
                tr.len(),
                serde_json::to_value(tr.termination.reason)?.as_str().unwrap_or("?"),
                tr.termination.time
            );
            for note in &tr.notes {
                eprintln!("note: {note}");
            }
            Ok(true)
        }
        Command::Check {
            state,
            grid,
            id,
            at,
            provenance,
            tolerance,
        } => {
            let s = AnalyticState::from_label(&state)?;
            let g = build_grid(&grid)?;
            let opts = CheckOptions {
                provenance: provenance.into(),
                tolerance,
                ..Default::default()
            };
            let report = run_check(&id, &s, &g, at, &opts)?;
            writeln!(
                stdout,
                "{}",
                serde_json::to_string_pretty(&Envelope::new(
                    "residual_report",
                    Some(g.meta()),
                    &report
                ))?
            )?;
            Ok(report.passed)
        }
    }
}

/// A closed stdout (e.g. `qfl list-checks | head`) is not an error.
fn broken_pipe(e: &Error) -> bool {
    let io = match e {
        Error::Io(io) => Some(io),
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        },
        _ => None,
    };
    io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        // Only fails when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global();
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
