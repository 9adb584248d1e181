use super::{Scenario, CONSERVATION_KEY, CONSERVATION_TOL};
use crate::dynamics::{
    conservation_experiment, integrate_trajectory, Termination, TrajectoryOptions, VelocityKind,
};
use crate::error::{Error, Result};
use crate::fields::{bundle, FieldOptions, Provenance};
use crate::grid::io::{write_csv_file, write_json, Envelope, SCHEMA_VERSION};
use crate::grid::{Grid, GridMeta};
use crate::residuals::{check_info, run_check, CheckOptions};
use crate::states::AnalyticState;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; the rayon default when `None`.
    pub jobs: Option<usize>,
    /// Replaces the scenario's `output_dir`.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: String,
    pub label: String,
    pub time: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_linf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Report path relative to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub index: usize,
    pub seed: Vec<f64>,
    pub velocity_kind: VelocityKind,
    pub dt: f64,
    pub steps: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationEntry {
    pub passed: bool,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_e_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_s_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_e_s_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_e_theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_norm_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub time: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub checks_passed: usize,
    pub checks_failed: usize,
    pub trajectories_failed: usize,
    pub fields_failed: usize,
}

/// Everything a run produced, free of timestamps so that repeated runs of
/// one scenario give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub kind: String,
    pub qfluid_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub state: String,
    pub grid: GridMeta,
    pub times: Vec<f64>,
    pub options: CheckOptions,
    pub checks: Vec<CheckEntry>,
    pub fields: Vec<FieldEntry>,
    pub trajectories: Vec<TrajectoryEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conservation: Option<ConservationEntry>,
    pub summary: Summary,
    pub passed: bool,
}

/// Timing sidecar written next to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunInfo {
    pub schema_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub elapsed_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn rel(dir: &str, name: String) -> String {
    format!("{dir}/{name}")
}

/// Validates and executes `scenario`. Configuration problems (unknown ids,
/// bad values, budget) are returned as errors before anything is written;
/// failures of individual checks are recorded in the manifest.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    let started = unix_now();
    let clock = Instant::now();
    scenario.validate()?;
    let state = AnalyticState::from_label(&scenario.state_spec)?;
    let grid = Arc::new(scenario.grid_spec.build()?);
    let out = opts
        .output_dir
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("qfl_out"));
    for sub in ["residuals", "fields", "trajectories"] {
        std::fs::create_dir_all(out.join(sub))?;
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Scenario(format!("cannot start worker pool: {e}")))?;
    let threads = pool.current_num_threads();
    let times = scenario.sample_times();

    let (checks, fields, trajectories, conservation) = pool.install(|| {
        let checks = run_checks(scenario, &state, &grid, &times, &out);
        let fields = if scenario.dump_fields {
            dump_fields(scenario, &state, &grid, &times, &out)
        } else {
            Vec::new()
        };
        let trajectories = run_trajectories(scenario, &state, &out);
        let conservation = scenario
            .conservation
            .as_ref()
            .map(|_| run_conservation(scenario, &grid, &out));
        (checks, fields, trajectories, conservation)
    });
    let checks = checks?;
    let fields = fields.into_iter().collect::<Result<Vec<_>>>()?;
    let trajectories = trajectories.into_iter().collect::<Result<Vec<_>>>()?;
    let conservation = conservation.transpose()?;

    let passed_checks = checks.iter().filter(|c| c.passed).count();
    let summary = Summary {
        checks: checks.len(),
        checks_passed: passed_checks,
        checks_failed: checks.len() - passed_checks,
        trajectories_failed: trajectories.iter().filter(|t| !t.passed).count(),
        fields_failed: fields.iter().filter(|f| !f.passed).count(),
    };
    let passed = summary.checks_failed == 0
        && summary.trajectories_failed == 0
        && summary.fields_failed == 0
        && conservation.as_ref().is_none_or(|c| c.passed);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION.into(),
        kind: "run_manifest".into(),
        qfluid_version: env!("CARGO_PKG_VERSION").into(),
        name: scenario.name.clone(),
        state: state.label().to_string(),
        grid: grid.meta(),
        times,
        options: scenario.options.clone(),
        checks,
        fields,
        trajectories,
        conservation,
        summary,
        passed,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    let finished = unix_now();
    write_json(
        &out.join("run_info.json"),
        &RunInfo {
            schema_version: SCHEMA_VERSION.into(),
            started_unix: started,
            finished_unix: finished,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
            threads,
        },
    )?;
    Ok(RunOutcome {
        manifest,
        output_dir: out,
    })
}

fn run_checks(
    scenario: &Scenario,
    state: &AnalyticState,
    grid: &Arc<Grid>,
    times: &[f64],
    out: &Path,
) -> Result<Vec<CheckEntry>> {
    let jobs: Vec<(usize, &String, usize, f64)> = scenario
        .checks
        .iter()
        .enumerate()
        .flat_map(|(c, id)| times.iter().enumerate().map(move |(k, &t)| (c, id, k, t)))
        .collect();
    jobs.par_iter()
        .map(|&(c, id, k, t)| {
            let info = check_info(id)?;
            let mut opts = scenario.options.clone();
            if let Some(tol) = scenario.tolerances.get(id.as_str()) {
                opts.tolerance = Some(*tol);
            }
            let mut entry = CheckEntry {
                id: id.clone(),
                label: info.label.into(),
                time: t,
                passed: false,
                residual_linf: None,
                tolerance: None,
                report: None,
                error: None,
            };
            match run_check(id, state, grid, t, &opts) {
                Ok(report) => {
                    let name = rel("residuals", format!("{c:02}_{id}_t{k}.json"));
                    write_json(&out.join(&name), &Envelope::new("residual_report", Some(grid.meta()), &report))?;
                    entry.passed = report.passed;
                    entry.residual_linf = Some(report.residual_linf);
                    entry.tolerance = Some(report.tolerance);
                    entry.report = Some(name);
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            Ok(entry)
        })
        .collect()
}

fn dump_fields(
    scenario: &Scenario,
    state: &AnalyticState,
    grid: &Arc<Grid>,
    times: &[f64],
    out: &Path,
) -> Vec<Result<FieldEntry>> {
    let opts = FieldOptions {
        sign: scenario.options.sign,
        node_eps: scenario.options.node_eps,
        provenance: if grid.is_cartesian() {
            scenario.options.provenance
        } else {
            Provenance::Analytic
        },
    };
    times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut entry = FieldEntry {
                time: t,
                passed: false,
                file: None,
                error: None,
            };
            match bundle(state, grid, t, &opts) {
                Ok(b) => {
                    let name = rel("fields", format!("fields_t{k}.csv"));
                    write_csv_file(&out.join(&name), grid, &b.columns())?;
                    entry.passed = true;
                    entry.file = Some(name);
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            Ok(entry)
        })
        .collect()
}

fn run_trajectories(scenario: &Scenario, state: &AnalyticState, out: &Path) -> Vec<Result<TrajectoryEntry>> {
    scenario
        .trajectories
        .par_iter()
        .enumerate()
        .map(|(k, spec)| {
            let opts = TrajectoryOptions {
                t0: spec.t0,
                sign: scenario.options.sign,
                node_eps: scenario.options.node_eps,
                renormalize_spin: scenario.options.renormalize_spin_speed,
            };
            let mut entry = TrajectoryEntry {
                index: k,
                seed: spec.seed.clone(),
                velocity_kind: spec.velocity,
                dt: spec.dt,
                steps: spec.steps,
                passed: false,
                termination: None,
                file: None,
                error: None,
            };
            match integrate_trajectory(state, &spec.seed, spec.velocity, spec.dt, spec.steps, &opts) {
                Ok(tr) => {
                    let name = rel("trajectories", format!("trajectory_{k}.csv"));
                    let file = std::fs::File::create(out.join(&name))?;
                    tr.write_csv(std::io::BufWriter::new(file))?;
                    entry.passed = true;
                    entry.termination = Some(tr.termination);
                    entry.file = Some(name);
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
            Ok(entry)
        })
        .collect()
}

fn run_conservation(scenario: &Scenario, grid: &Arc<Grid>, out: &Path) -> Result<ConservationEntry> {
    let spec = scenario.conservation.as_ref().expect("caller checked");
    let tolerance = scenario
        .tolerances
        .get(CONSERVATION_KEY)
        .copied()
        .unwrap_or(CONSERVATION_TOL);
    let mut entry = ConservationEntry {
        passed: false,
        tolerance,
        expected_e_s: None,
        e_s_std: None,
        max_e_s_deviation: None,
        max_abs_e_theta: None,
        max_norm_error: None,
        file: None,
        warnings: Vec::new(),
        error: None,
    };
    let attempt = (|| -> Result<_> {
        let comps = spec
            .components
            .iter()
            .map(|l| AnalyticState::from_label(l))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = spec.coeffs.iter().map(|c| c.value()).collect::<Result<Vec<_>>>()?;
        let qgrid = match &spec.grid_spec {
            Some(g) => Arc::new(g.build()?),
            None => grid.clone(),
        };
        conservation_experiment(&comps, &coeffs, &qgrid, &spec.times)
    })();
    match attempt {
        Ok(series) => {
            let scale = series.expected_e_s.abs().max(1.0);
            let dev = series
                .e_s_avg
                .iter()
                .fold(0.0f64, |m, e| m.max((e - series.expected_e_s).abs()));
            entry.passed = series.e_s_std() < tolerance * scale
                && dev < tolerance * scale
                && series.max_abs_e_theta() < tolerance
                && series.max_norm_error() < tolerance;
            entry.expected_e_s = Some(series.expected_e_s);
            entry.e_s_std = Some(series.e_s_std());
            entry.max_e_s_deviation = Some(dev);
            entry.max_abs_e_theta = Some(series.max_abs_e_theta());
            entry.max_norm_error = Some(series.max_norm_error());
            entry.warnings = series.warnings.clone();
            let name = "conservation.csv".to_string();
            let file = std::fs::File::create(out.join(&name))?;
            series.write_csv(std::io::BufWriter::new(file))?;
            write_json(
                &out.join("conservation.json"),
                &Envelope::new("conservation_series", None, &series),
            )?;
            entry.file = Some(name);
        }
        Err(e) => entry.error = Some(e.to_string()),
    }
    Ok(entry)
}
