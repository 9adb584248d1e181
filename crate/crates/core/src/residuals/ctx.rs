//! Evaluation context shared by all checks: the nodal mask, the set of
//! counted nodes, exact per-point evaluation and finite-difference helpers.

use super::{CheckOptions, Norms};
use crate::error::{Error, Result};
use crate::fields::{sample_psi, PointJets, Provenance, Sign};
use crate::grid::{self, integrate, Grid, Integral, ScalarField, Topology};
use crate::states::{polar_decompose, AnalyticState};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

/// One residual evaluated at one point: component values and the largest
/// magnitude among the terms that were summed.
pub(crate) struct PointSub {
    pub value: Vec<f64>,
    pub scale: f64,
}

/// Scalar residual from its terms.
pub(crate) fn ps(terms: &[f64]) -> PointSub {
    PointSub {
        value: vec![terms.iter().sum()],
        scale: terms.iter().fold(0.0, |m, t| m.max(t.abs())),
    }
}

/// Vector residual, one list of terms per component.
pub(crate) fn pv(components: &[Vec<f64>]) -> PointSub {
    PointSub {
        value: components.iter().map(|c| c.iter().sum()).collect(),
        scale: components
            .iter()
            .flatten()
            .fold(0.0, |m, t| m.max(t.abs())),
    }
}

/// A residual over the whole grid. `comps[c][i]` is component `c` at node
/// `i`; non-evaluated nodes hold NaN.
pub(crate) struct Sub {
    pub name: String,
    pub asserted: bool,
    pub comps: Vec<Vec<f64>>,
    pub scale: Vec<f64>,
}

impl Sub {
    pub fn values(&self) -> &[f64] {
        &self.comps[0]
    }
}

/// Sampled wavefunction and its finite-difference derivatives.
pub(crate) struct GridCtx {
    pub grid: Arc<Grid>,
    pub n_bodies: usize,
    pub dim_per_body: usize,
    pub psi: ScalarField<Complex64>,
    pub dpsi: ScalarField<Complex64>,
    pub s: ScalarField<f64>,
    pub rho: Vec<f64>,
    pub r: Vec<f64>,
    pub drho: Vec<f64>,
    pub ds: Vec<f64>,
    pub pot: Vec<f64>,
    /// u₋ per configuration axis.
    pub um: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl GridCtx {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn axes(&self, body: usize) -> Range<usize> {
        body * self.dim_per_body..(body + 1) * self.dim_per_body
    }

    pub fn config_dim(&self) -> usize {
        self.n_bodies * self.dim_per_body
    }

    pub fn pw(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(f).collect()
    }

    pub fn field(&self, f: &[f64]) -> ScalarField<f64> {
        ScalarField::new(self.grid.clone(), f.to_vec(), "").expect("sized")
    }

    pub fn d(&self, f: &[f64], axis: usize) -> Vec<f64> {
        grid::derivative(&self.field(f), axis).expect("axis checked").into_values()
    }

    pub fn lap(&self, f: &[f64], body: usize) -> Vec<f64> {
        grid::laplacian(&self.field(f), body).expect("body checked").into_values()
    }

    /// u along `axis` for the requested branch.
    pub fn u(&self, axis: usize, sign: Sign) -> Vec<f64> {
        let k = -sign.factor();
        self.um[axis].iter().map(|x| k * x).collect()
    }

    pub fn phase_lap(&self, body: usize) -> Vec<f64> {
        grid::phase_laplacian(&self.s, body, 2.0 * PI)
            .expect("body checked")
            .into_values()
    }

    /// P_u,i = −¼∇²_iρ.
    pub fn p_u(&self, body: usize) -> Vec<f64> {
        self.lap(&self.rho, body).into_iter().map(|x| -0.25 * x).collect()
    }

    /// P_v,j = −½∇_j·(ρv_j).
    pub fn p_v_div(&self, body: usize) -> Vec<f64> {
        let mut total = vec![0.0; self.len()];
        for a in self.axes(body) {
            let flux = self.pw(|i| self.rho[i] * self.v[a][i]);
            for (t, x) in total.iter_mut().zip(self.d(&flux, a)) {
                *t -= 0.5 * x;
            }
        }
        total
    }

    pub fn k_of(&self, comps: &[Vec<f64>], body: usize) -> Vec<f64> {
        self.pw(|i| 0.5 * self.axes(body).map(|a| comps[a][i] * comps[a][i]).sum::<f64>())
    }
}

pub(crate) struct Ctx<'a> {
    pub state: &'a AnalyticState,
    pub grid: &'a Arc<Grid>,
    pub t: f64,
    pub opts: &'a CheckOptions,
    pub mask: Vec<bool>,
    /// Nodes that enter the residual norms.
    pub counted: Vec<bool>,
    pub fd: Option<GridCtx>,
    /// Largest relative density difference between rays, for radial grids
    /// whose state is not spherically symmetric.
    pub radial_asymmetry: Option<f64>,
}

/// Prefix of the warning attached to integrals over a radial grid when the
/// state is not spherically symmetric; such integrals fail their check.
pub(crate) const ASYMMETRY_WARNING: &str = "state is not spherically symmetric";

fn radial_asymmetry(state: &AnalyticState, grid: &Grid, t: f64) -> Option<f64> {
    let Topology::RadialLog { radii, direction, .. } = grid.topology() else {
        return None;
    };
    let s3 = 1.0 / 3f64.sqrt();
    let rays = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-s3, s3, -s3]];
    let rho = |d: &[f64; 3], r: f64| state.eval_psi(&[r * d[0], r * d[1], r * d[2]], t).norm_sqr();
    let base: Vec<f64> = radii.iter().map(|&r| rho(direction, r)).collect();
    let peak = base.iter().fold(0.0f64, |m, v| m.max(*v));
    let dev = rays
        .iter()
        .flat_map(|d| radii.iter().zip(&base).map(move |(&r, b)| (rho(d, r) - b).abs()))
        .fold(0.0f64, f64::max)
        / peak.max(f64::MIN_POSITIVE);
    (dev > 1e-10).then_some(dev)
}

impl<'a> Ctx<'a> {
    pub fn new(state: &'a AnalyticState, grid: &'a Arc<Grid>, t: f64, opts: &'a CheckOptions) -> Result<Self> {
        if opts.provenance == Provenance::Grid && !grid.is_cartesian() {
            return Err(Error::NotCartesian);
        }
        let (psi, dpsi) = sample_psi(state, grid, t)?;
        let polar = polar_decompose(&psi, opts.node_eps)?;
        let mask = polar.mask.clone();
        let counted = (0..grid.len())
            .map(|i| !mask[i] && grid.is_interior(i, opts.boundary_margin))
            .collect();
        let fd = match opts.provenance {
            Provenance::Analytic => None,
            Provenance::Grid => {
                let rho = polar.rho.values().to_vec();
                let r = polar.r.values().to_vec();
                let drho: Vec<f64> = psi
                    .values()
                    .iter()
                    .zip(dpsi.values())
                    .map(|(p, dp)| 2.0 * (p.conj() * dp).re)
                    .collect();
                let ds: Vec<f64> = (0..grid.len())
                    .map(|i| {
                        if mask[i] {
                            f64::NAN
                        } else {
                            (dpsi.values()[i] / psi.values()[i]).im
                        }
                    })
                    .collect();
                let pot = (0..grid.len()).map(|i| state.potential_u(&grid.point(i))).collect();
                let d = state.config_dim();
                let mut um = Vec::with_capacity(d);
                let mut v = Vec::with_capacity(d);
                for body in 0..state.n_bodies() {
                    let g = grid::gradient(&polar.rho, body)?;
                    let p = grid::phase_gradient(&polar.s, body, 2.0 * PI)?;
                    for c in 0..g.ncomp() {
                        let gc = g.component(c).into_values();
                        um.push(
                            (0..grid.len())
                                .map(|i| if mask[i] { f64::NAN } else { -0.5 * gc[i] / rho[i] })
                                .collect(),
                        );
                        v.push(p.component(c).into_values());
                    }
                }
                Some(GridCtx {
                    grid: grid.clone(),
                    n_bodies: state.n_bodies(),
                    dim_per_body: state.dim_per_body(),
                    psi,
                    dpsi,
                    s: polar.s,
                    rho,
                    r,
                    drho,
                    ds,
                    pot,
                    um,
                    v,
                })
            }
        };
        Ok(Self {
            state,
            grid,
            t,
            opts,
            mask,
            counted,
            fd,
            radial_asymmetry: radial_asymmetry(state, grid, t),
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn n_bodies(&self) -> usize {
        self.state.n_bodies()
    }

    pub fn config_dim(&self) -> usize {
        self.state.config_dim()
    }

    /// Evaluates `f` with exact local expansions of the given order at every
    /// unmasked node and assembles one [`Sub`] per entry of `names`.
    pub fn points<F>(&self, order: usize, names: &[(&str, bool)], f: F) -> Vec<Sub>
    where
        F: Fn(&PointJets<'static>, &[f64]) -> Vec<PointSub> + Sync,
    {
        self.rows(names, |i| {
            let x = self.grid.point(i);
            let pj = PointJets::new(self.state, &x, self.t, order);
            f(&pj, &x)
        })
    }

    /// Evaluates `f(node)` at every unmasked node and assembles one [`Sub`]
    /// per entry of `names`.
    pub fn rows<F>(&self, names: &[(&str, bool)], f: F) -> Vec<Sub>
    where
        F: Fn(usize) -> Vec<PointSub> + Sync,
    {
        let rows: Vec<Option<Vec<PointSub>>> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                if self.mask[i] {
                    return None;
                }
                let row = f(i);
                debug_assert_eq!(row.len(), names.len());
                Some(row)
            })
            .collect();
        names
            .iter()
            .enumerate()
            .map(|(k, &(name, asserted))| {
                let ncomp = rows
                    .iter()
                    .flatten()
                    .next()
                    .map_or(1, |r| r[k].value.len());
                let mut comps = vec![vec![f64::NAN; self.len()]; ncomp];
                let mut scale = vec![f64::NAN; self.len()];
                for (i, row) in rows.iter().enumerate() {
                    if let Some(row) = row {
                        for (c, v) in row[k].value.iter().enumerate() {
                            comps[c][i] = *v;
                        }
                        scale[i] = row[k].scale;
                    }
                }
                Sub {
                    name: name.to_string(),
                    asserted,
                    comps,
                    scale,
                }
            })
            .collect()
    }

    /// Smallest and largest finite value of a scalar residual over counted nodes.
    pub fn range(&self, sub: &Sub) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &v) in sub.values().iter().enumerate() {
            if self.counted[i] && v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// Max and root-sum-square of the pointwise Euclidean norm over counted
    /// nodes with finite values, plus the number of counted nodes skipped
    /// because the value was not finite.
    pub fn norms(&self, sub: &Sub) -> (Norms, usize) {
        let mut linf = 0.0f64;
        let mut sumsq = 0.0;
        let mut points = 0;
        let mut nonfinite = 0;
        for i in 0..self.len() {
            if !self.counted[i] {
                continue;
            }
            let n2: f64 = sub.comps.iter().map(|c| c[i] * c[i]).sum();
            if !n2.is_finite() {
                nonfinite += 1;
                continue;
            }
            linf = linf.max(n2.sqrt());
            sumsq += n2;
            points += 1;
        }
        (
            Norms {
                linf,
                l2: sumsq.sqrt(),
                points,
            },
            nonfinite,
        )
    }

    /// Largest finite term magnitude over counted nodes.
    pub fn term_scale(&self, sub: &Sub) -> f64 {
        (0..self.len())
            .filter(|&i| self.counted[i] && sub.scale[i].is_finite())
            .fold(0.0, |m, i| m.max(sub.scale[i]))
    }

    /// Default acceptance threshold for a residual whose terms reach `scale`.
    pub fn tolerance(&self, scale: f64) -> f64 {
        if let Some(t) = self.opts.tolerance {
            return t;
        }
        match self.opts.provenance {
            Provenance::Analytic => (64.0 * f64::EPSILON * scale).max(1e-8),
            Provenance::Grid => {
                let h = self.grid.max_spacing();
                10.0 * h * h * scale.max(1.0)
            }
        }
    }

    /// Threshold for an integral whose expected value is `expected`.
    pub fn global_tolerance(&self, expected: f64) -> f64 {
        if let Some(t) = self.opts.tolerance {
            return t;
        }
        let scale = expected.abs().max(1.0);
        match self.opts.provenance {
            Provenance::Analytic => 1e-8 * scale,
            Provenance::Grid => {
                let h = self.grid.max_spacing();
                10.0 * h * h * scale
            }
        }
    }

    /// Quadrature over all finite samples. Truncation warnings are dropped
    /// when the grid spans the state's whole bounded domain.
    pub fn integrate(&self, values: &[f64]) -> Integral<f64> {
        let f = ScalarField::new(self.grid.clone(), values.to_vec(), "").expect("sized");
        let mut out = integrate(&f);
        if self.covers_domain() {
            out.warnings.retain(|w| !w.starts_with("integrand at"));
        }
        if let Some(dev) = self.radial_asymmetry {
            out.warnings.push(format!(
                "{ASYMMETRY_WARNING} (relative density difference {dev:.1e} between rays); radial quadrature does not apply"
            ));
        }
        out
    }

    pub fn covers_domain(&self) -> bool {
        let Some(axes) = self.grid.axes() else {
            return false;
        };
        let dom = self.state.domain();
        axes.iter().enumerate().all(|(a, ax)| {
            let lo = dom.lower[a];
            let hi = dom.upper[a];
            lo.is_finite()
                && hi.is_finite()
                && ax.lower() <= lo + ax.spacing
                && ax.upper() >= hi - ax.spacing
        })
    }

    /// Ē from the options, else from the state.
    pub fn energy(&self, check: &str) -> Result<f64> {
        self.opts
            .energy
            .or(self.state.energy_if_eigen())
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "{check} needs the energy of a stationary state; `{}` has none",
                    self.state.label()
                ))
            })
    }
}
