//! Scenario files and reproducible runs.
//!
//! A scenario names a state, a grid, the checks to run at a list of times,
//! optional trajectories and an optional conservation experiment. [`run`]
//! executes it and writes CSV fields, one JSON report per check and time, a
//! deterministic `manifest.json` and a `run_info.json` sidecar holding the
//! timestamps.

mod run;

pub use run::{
    run, CheckEntry, ConservationEntry, FieldEntry, Manifest, RunInfo, RunOptions, RunOutcome, Summary,
    TrajectoryEntry,
};

use crate::dynamics::VelocityKind;
use crate::error::{Error, Result};
use crate::grid::{Axis, Centering, Grid, MAX_POINTS};
use crate::residuals::{check_info, CheckOptions};
use crate::states::{parse_real, AnalyticState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Key of [`Scenario::tolerances`] that applies to the conservation experiment.
pub const CONSERVATION_KEY: &str = "conservation_experiment";

/// Default tolerance of the conservation experiment.
pub const CONSERVATION_TOL: f64 = 1e-8;

fn default_r_min() -> f64 {
    1e-6
}

fn default_r_max() -> f64 {
    40.0
}

fn default_centering() -> Centering {
    Centering::Cell
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Log-spaced ray for one 3D body.
    Radial {
        n: usize,
        #[serde(default = "default_r_min")]
        r_min: f64,
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<[f64; 3]>,
    },
    /// Tensor-product grid, one axis per configuration coordinate.
    Cartesian {
        lower: Vec<f64>,
        upper: Vec<f64>,
        n: Vec<usize>,
        #[serde(default = "default_centering")]
        centering: Centering,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        periodic: Vec<bool>,
        /// Defaults to the number of axes (a single body).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim_per_body: Option<usize>,
    },
}

impl GridSpec {
    /// Number of nodes the grid would have, saturating on overflow.
    pub fn estimated_points(&self) -> usize {
        match self {
            GridSpec::Radial { n, .. } => *n,
            GridSpec::Cartesian { n, .. } => n
                .iter()
                .try_fold(1usize, |acc, &k| acc.checked_mul(k))
                .unwrap_or(usize::MAX),
        }
    }

    pub fn check_budget(&self) -> Result<()> {
        let points = self.estimated_points();
        if points > MAX_POINTS {
            return Err(Error::BudgetExceeded {
                points,
                limit: MAX_POINTS,
            });
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Grid> {
        self.check_budget()?;
        match self {
            GridSpec::Radial {
                n,
                r_min,
                r_max,
                direction,
            } => {
                let g = Grid::radial_log(*n, *r_min, *r_max)?;
                match direction {
                    Some(d) => g.with_direction(*d),
                    None => Ok(g),
                }
            }
            GridSpec::Cartesian {
                lower,
                upper,
                n,
                centering,
                periodic,
                dim_per_body,
            } => {
                let dim = n.len();
                if lower.len() != dim || upper.len() != dim || !(periodic.is_empty() || periodic.len() == dim) {
                    return Err(Error::InvalidGrid(
                        "lower, upper, n and periodic must have one entry per axis".into(),
                    ));
                }
                let axes = (0..dim)
                    .map(|a| {
                        if periodic.get(a).copied().unwrap_or(false) {
                            Axis::periodic(lower[a], upper[a] - lower[a], n[a])
                        } else {
                            match centering {
                                Centering::Vertex => Axis::vertex(lower[a], upper[a], n[a]),
                                Centering::Cell => Axis::cell_centered(lower[a], upper[a], n[a]),
                            }
                        }
                    })
                    .collect();
                Grid::cartesian(axes, dim_per_body.unwrap_or(dim))
            }
        }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// Either JSON or the compact form `kind:key=value,...`, where vector
    /// values are parenthesised and numbers may be expressions such as `pi/2`:
    /// `radial:n=400,r_max=40` or `cartesian:lower=(0,0),upper=(pi,pi),n=(64,64)`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let bad = |why: String| Error::InvalidGrid(format!("`{text}`: {why}"));
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::String(kind.trim().into()));
        for item in split_top(rest) {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{item}`")))?;
            let value = value.trim();
            let parsed = match value.strip_prefix('(').and_then(|v| v.strip_suffix(')')) {
                Some(inner) => Value::Array(
                    split_top(inner)
                        .iter()
                        .map(|v| scalar(v.trim()))
                        .collect::<std::result::Result<_, _>>()
                        .map_err(bad)?,
                ),
                None => scalar(value).map_err(bad)?,
            };
            obj.insert(key.trim().into(), parsed);
        }
        // A 1D cartesian grid may give its extents as plain numbers.
        if kind.trim() == "cartesian" {
            for key in ["lower", "upper", "n", "periodic"] {
                if let Some(v) = obj.get_mut(key) {
                    if !v.is_array() {
                        *v = Value::Array(vec![v.take()]);
                    }
                }
            }
        }
        serde_json::from_value(Value::Object(obj)).map_err(|e| bad(e.to_string()))
    }
}

fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn scalar(v: &str) -> std::result::Result<Value, String> {
    match v {
        "true" | "false" => return Ok(Value::Bool(v == "true")),
        _ => {}
    }
    let x = match parse_real(v) {
        Ok(x) => x,
        Err(_) if !v.is_empty() && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
            return Ok(Value::String(v.into()))
        }
        Err(e) => return Err(e),
    };
    if x.fract() == 0.0 && (0.0..9.0e15).contains(&x) {
        Ok(Value::from(x as u64))
    } else {
        serde_json::Number::from_f64(x)
            .map(Value::Number)
            .ok_or_else(|| format!("`{v}` is not finite"))
    }
}

/// A coefficient given as a number, a `[re, im]` pair or an expression
/// string such as `"1/sqrt(2)"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
    Expr(String),
}

impl Coefficient {
    pub fn value(&self) -> Result<Complex64> {
        match self {
            Coefficient::Real(x) => Ok(Complex64::new(*x, 0.0)),
            Coefficient::Complex([re, im]) => Ok(Complex64::new(*re, *im)),
            Coefficient::Expr(s) => parse_real(s)
                .map(|x| Complex64::new(x, 0.0))
                .map_err(|e| Error::Scenario(format!("coefficient `{s}`: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub seed: Vec<f64>,
    #[serde(alias = "velocity_kind")]
    pub velocity: VelocityKind,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConservationSpec {
    /// Eigenstate labels.
    pub components: Vec<String>,
    pub coeffs: Vec<Coefficient>,
    pub times: Vec<f64>,
    /// Quadrature grid; the scenario grid when absent.
    #[serde(
        default,
        alias = "grid",
        deserialize_with = "opt_grid_spec_any",
        skip_serializing_if = "Option::is_none"
    )]
    pub grid_spec: Option<GridSpec>,
}

fn grid_spec_any<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<GridSpec, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Any {
        Text(String),
        Spec(GridSpec),
    }
    match Any::deserialize(d)? {
        Any::Text(s) => s.parse().map_err(serde::de::Error::custom),
        Any::Spec(g) => Ok(g),
    }
}

fn opt_grid_spec_any<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<GridSpec>, D::Error> {
    grid_spec_any(d).map(Some)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(alias = "state")]
    pub state_spec: String,
    /// JSON object or compact string, see [`GridSpec::from_str`].
    #[serde(alias = "grid", deserialize_with = "grid_spec_any")]
    pub grid_spec: GridSpec,
    #[serde(default)]
    pub checks: Vec<String>,
    /// Sample times; `[0]` when empty.
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub trajectories: Vec<TrajectorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation: Option<ConservationSpec>,
    /// Per-check tolerance overrides, keyed by check id or
    /// [`CONSERVATION_KEY`].
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: CheckOptions,
    /// Write the field bundle at every time.
    #[serde(default = "default_true")]
    pub dump_fields: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("cannot read `{}`: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn sample_times(&self) -> Vec<f64> {
        if self.times.is_empty() {
            vec![0.0]
        } else {
            self.times.clone()
        }
    }

    /// Checks ids, times, tolerances and the point budget without building
    /// anything large.
    pub fn validate(&self) -> Result<()> {
        for id in &self.checks {
            check_info(id)?;
        }
        for (key, tol) in &self.tolerances {
            if key != CONSERVATION_KEY {
                check_info(key)?;
            }
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(Error::Scenario(format!("tolerance for `{key}` must be positive, got {tol}")));
            }
        }
        if let Some(t) = self.times.iter().find(|t| !t.is_finite()) {
            return Err(Error::Scenario(format!("non-finite time {t}")));
        }
        self.grid_spec.check_budget()?;
        for (k, tr) in self.trajectories.iter().enumerate() {
            if !(tr.dt.is_finite() && tr.dt > 0.0) || !tr.t0.is_finite() || tr.seed.iter().any(|x| !x.is_finite()) {
                return Err(Error::Scenario(format!(
                    "trajectory {k}: dt must be positive and seed, t0 finite"
                )));
            }
        }
        if let Some(c) = &self.conservation {
            if c.components.len() != c.coeffs.len() || c.components.is_empty() {
                return Err(Error::Scenario(format!(
                    "conservation: {} components with {} coefficients",
                    c.components.len(),
                    c.coeffs.len()
                )));
            }
            if let Some(t) = c.times.iter().find(|t| !t.is_finite()) {
                return Err(Error::Scenario(format!("conservation: non-finite time {t}")));
            }
            if let Some(g) = &c.grid_spec {
                g.check_budget()?;
            }
            for coef in &c.coeffs {
                coef.value()?;
            }
        }
        AnalyticState::from_label(&self.state_spec)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
