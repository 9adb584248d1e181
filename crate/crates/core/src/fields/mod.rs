//! Hydrodynamic fields of a wavefunction: velocities u± and v, pressures
//! P_u and P_v, kinetic energies, the quantum potential and the time-side
//! energies Ē_S, Ē_θ.
//!
//! Fields are computed either analytically (exact local expansions of an
//! [`AnalyticState`]) or from grid samples with finite differences. In
//! both cases time derivatives come from the state's exact ∂Ψ/∂t.
//! Fields divided by ρ are NaN on the nodal mask.

mod point;

pub use point::{PointJets, Sign};

use crate::error::{Error, Result};
use crate::grid::io::Column;
use crate::grid::{self, Grid, ScalarField, VectorField};
use crate::jet;
use crate::states::{polar_decompose, AnalyticState, PolarPair, DEFAULT_NODE_EPS};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Where spatial derivatives come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Grid,
}

#[derive(Debug, Clone, Copy)]
pub struct FieldOptions {
    pub sign: Sign,
    pub node_eps: f64,
    pub provenance: Provenance,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self {
            sign: Sign::Minus,
            node_eps: DEFAULT_NODE_EPS,
            provenance: Provenance::Analytic,
        }
    }
}

/// `true` where ρ < eps·max ρ.
pub fn nodal_mask(rho: &ScalarField<f64>, eps: f64) -> Vec<bool> {
    let threshold = eps * rho.max_abs();
    rho.values().iter().map(|&r| !(r >= threshold)).collect()
}

fn masked(v: f64, m: bool) -> f64 {
    if m {
        f64::NAN
    } else {
        v
    }
}

fn stack(parts: Vec<VectorField<f64>>, units: &str) -> Result<VectorField<f64>> {
    let comps: Vec<ScalarField<f64>> = parts
        .iter()
        .flat_map(|p| (0..p.ncomp()).map(move |c| p.component(c)))
        .collect();
    VectorField::from_components(&comps, units)
}

fn velocity_u_masked(rho: &ScalarField<f64>, sign: Sign, body: usize, mask: &[bool]) -> Result<VectorField<f64>> {
    let g = grid::gradient(rho, body)?;
    let k = 0.5 * sign.factor();
    Ok(g.map_points(g.ncomp(), "bohr/time", |i, d| {
        d.iter().map(|x| masked(k * x / rho.values()[i], mask[i])).collect()
    }))
}

/// u± = ±½∇_iρ/ρ on the grid.
pub fn velocity_u(rho: &ScalarField<f64>, sign: Sign, body: usize) -> Result<VectorField<f64>> {
    velocity_u_masked(rho, sign, body, &nodal_mask(rho, DEFAULT_NODE_EPS))
}

/// u = ½|∇ρ|/ρ · ŝ over the full configuration gradient. ŝ must have unit
/// length (1e-10) on the unmasked region.
pub fn velocity_u_directed(rho: &ScalarField<f64>, s_hat: &VectorField<f64>) -> Result<VectorField<f64>> {
    let mask = nodal_mask(rho, DEFAULT_NODE_EPS);
    let g = grid::gradient_all(rho)?;
    if s_hat.ncomp() != g.ncomp() {
        return Err(Error::GridMismatch(format!(
            "direction field has {} components, configuration has {}",
            s_hat.ncomp(),
            g.ncomp()
        )));
    }
    let dev = (0..rho.len())
        .filter(|&i| !mask[i])
        .map(|i| (s_hat.at(i).iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    if !(dev <= 1e-10) {
        return Err(Error::NonUnitDirection(dev));
    }
    Ok(g.map_points(g.ncomp(), "bohr/time", |i, d| {
        let speed = 0.5 * d.iter().map(|x| x * x).sum::<f64>().sqrt() / rho.values()[i];
        s_hat.at(i).iter().map(|s| masked(speed * s, mask[i])).collect()
    }))
}

/// v_i = ∇_iS, insensitive to 2π seams in S.
pub fn velocity_v(s: &ScalarField<f64>, body: usize) -> Result<VectorField<f64>> {
    Ok(grid::phase_gradient(s, body, 2.0 * std::f64::consts::PI)?.with_units("bohr/time"))
}

/// Spin velocity ±½(∇ρ/ρ)×ẑ for a one-body 3D density. With `renormalize`
/// the field is rescaled to the speed |u±| of the uphill/downhill flow.
pub fn velocity_spin(rho: &ScalarField<f64>, sign: Sign, renormalize: bool) -> Result<VectorField<f64>> {
    let grid = rho.grid();
    if grid.n_bodies() != 1 || grid.dim_per_body() != 3 {
        return Err(Error::Precondition(
            "spin velocity is defined for one-body 3D states only".into(),
        ));
    }
    let mask = nodal_mask(rho, DEFAULT_NODE_EPS);
    let g = grid::gradient(rho, 0)?;
    let k = 0.5 * sign.factor();
    Ok(g.map_points(3, "bohr/time", |i, d| {
        let r = rho.values()[i];
        let mut w = [k * d[1] / r, -k * d[0] / r, 0.0];
        if renormalize {
            let full = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cross = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let f = full / cross;
            w.iter_mut().for_each(|x| *x *= f);
        }
        w.iter().map(|&x| masked(x, mask[i])).collect()
    }))
}

/// P_u,i = −¼∇²_iρ.
pub fn pressure_u(rho: &ScalarField<f64>, body: usize) -> Result<ScalarField<f64>> {
    Ok(grid::laplacian(rho, body)?
        .map("hartree/bohr^d", |x| -0.25 * x))
}

/// P_v = ½∂ρ/∂t from the state's exact time derivative.
pub fn pressure_v(state: &AnalyticState, grid: &Arc<Grid>, t: f64) -> Result<ScalarField<f64>> {
    check_state_grid(state, grid)?;
    Ok(ScalarField::from_fn(grid.clone(), "hartree/bohr^d", |p| {
        let (psi, dt) = state.eval_psi_dt(p, t);
        (psi.conj() * dt).re
    }))
}

/// P_v from two density frames a time `2·half_step` apart (central difference).
pub fn pressure_v_from_frames(
    rho_before: &ScalarField<f64>,
    rho_after: &ScalarField<f64>,
    half_step: f64,
) -> Result<ScalarField<f64>> {
    rho_after.zip_with(rho_before, "hartree/bohr^d", |a, b| 0.25 * (a - b) / half_step)
}

/// Q = −½Σ_i∇²_iR/R.
pub fn quantum_potential(r: &ScalarField<f64>) -> Result<ScalarField<f64>> {
    let rho = r.map("", |x| x * x);
    quantum_potential_masked(r, &nodal_mask(&rho, DEFAULT_NODE_EPS))
}

fn nodal_point(state: &AnalyticState, x: &[f64], rho: f64) -> Result<()> {
    if !(rho >= DEFAULT_NODE_EPS * state.density_scale()) {
        return Err(Error::Nodal(x.to_vec()));
    }
    Ok(())
}

/// Ψ*P̂Ψ/Ψ*Ψ = v + i·u₋ per configuration coordinate.
pub fn momentum_complex(state: &AnalyticState, x: &[f64], t: f64) -> Result<Vec<Complex64>> {
    state.check_point(x)?;
    let j = state.jet(state.jet_space(1), x, t);
    let psi = j.value();
    nodal_point(state, x, psi.norm_sqr())?;
    Ok((0..state.config_dim())
        .map(|a| -Complex64::i() * j.d_value(a) / psi)
        .collect())
}

/// (Ē_S, Ē_θ) = real and imaginary parts of iΨ*∂Ψ/∂t / Ψ*Ψ.
pub fn energies_time_side(state: &AnalyticState, x: &[f64], t: f64) -> Result<(f64, f64)> {
    state.check_point(x)?;
    let (psi, dt) = state.eval_psi_dt(x, t);
    nodal_point(state, x, psi.norm_sqr())?;
    let z = Complex64::i() * dt / psi;
    Ok((z.re, z.im))
}

/// ½Σ_i∇_i·(Ψ*P̂_iΨ) = −P_v + i·P_u at every grid node, from exact derivatives.
pub fn pressure_complex(state: &AnalyticState, grid: &Arc<Grid>, t: f64) -> Result<ScalarField<Complex64>> {
    check_state_grid(state, grid)?;
    let d = state.config_dim();
    Ok(ScalarField::from_fn(grid.clone(), "hartree/bohr^d", |p| {
        let j = state.jet(state.jet_space(2), p, t);
        let cj = j.conj();
        let div = jet::sum((0..d).map(|a| (&cj * &j.d(a)).d(a))).expect("dims");
        -Complex64::i() * div.value() * 0.5
    }))
}

/// Grid route for [`pressure_complex`]: sampled Ψ*P̂Ψ, then finite differences.
pub fn pressure_complex_fd(samples: &ScalarField<Complex64>) -> Result<ScalarField<Complex64>> {
    let g = samples.grid().clone();
    let mut total = ScalarField::constant(g.clone(), Complex64::new(0.0, 0.0), "hartree/bohr^d");
    for b in 0..g.n_bodies() {
        let grad = grid::gradient(samples, b)?;
        let flux = grad.map_points(grad.ncomp(), "", |i, d| {
            let c = samples.values()[i].conj();
            d.iter().map(|x| -Complex64::i() * c * x).collect()
        });
        let div = grid::divergence(&flux, b)?;
        total = total.zip_with(&div, "hartree/bohr^d", |a, x| a + x * 0.5)?;
    }
    Ok(total)
}

pub(crate) fn check_state_grid(state: &AnalyticState, grid: &Grid) -> Result<()> {
    if grid.config_dim() != state.config_dim() || grid.dim_per_body() != state.dim_per_body() {
        return Err(Error::GridMismatch(format!(
            "grid has {} coordinates in bodies of {}, state `{}` has {} in bodies of {}",
            grid.config_dim(),
            grid.dim_per_body(),
            state.label(),
            state.config_dim(),
            state.dim_per_body()
        )));
    }
    Ok(())
}

/// Every derived field on one grid at one time.
#[derive(Debug, Clone)]
pub struct FieldBundle {
    pub time: f64,
    pub sign: Sign,
    pub provenance: Provenance,
    pub polar: PolarPair,
    pub rho_m: ScalarField<f64>,
    /// u± over all configuration coordinates.
    pub u: VectorField<f64>,
    pub v: VectorField<f64>,
    pub p_u: Vec<ScalarField<f64>>,
    /// ½∂ρ/∂t.
    pub p_v: ScalarField<f64>,
    /// −½Σ_j∇_j·(ρv_j), spatial route to P_v.
    pub p_v_div: ScalarField<f64>,
    pub k_u: Vec<ScalarField<f64>>,
    pub k_v: Vec<ScalarField<f64>>,
    pub q: ScalarField<f64>,
    pub e_s: ScalarField<f64>,
    pub e_theta: ScalarField<f64>,
    pub theta: ScalarField<f64>,
    /// u·v summed over bodies; nonzero where ½|u+v|² ≠ K_u + K_v.
    pub u_dot_v: ScalarField<f64>,
    pub potential: ScalarField<f64>,
}

impl FieldBundle {
    pub fn grid(&self) -> &Arc<Grid> {
        self.rho_m.grid()
    }

    pub fn mask(&self) -> &[bool] {
        &self.polar.mask
    }

    pub fn rho(&self) -> &ScalarField<f64> {
        &self.polar.rho
    }

    pub fn k_u_total(&self) -> ScalarField<f64> {
        sum_fields(&self.k_u)
    }

    pub fn k_v_total(&self) -> ScalarField<f64> {
        sum_fields(&self.k_v)
    }

    pub fn p_u_total(&self) -> ScalarField<f64> {
        sum_fields(&self.p_u)
    }

    /// CSV columns named after the field symbols.
    pub fn columns(&self) -> Vec<Column> {
        let mut cols = Vec::new();
        let u_name = match self.sign {
            Sign::Minus => "u_minus",
            Sign::Plus => "u_plus",
        };
        cols.extend(Column::real("rho", self.rho()));
        cols.extend(Column::real("rho_m", &self.rho_m));
        cols.extend(Column::real("S", &self.polar.s));
        cols.extend(Column::vector(u_name, &self.u));
        cols.extend(Column::vector("v", &self.v));
        let per_body = |name: &str, fs: &[ScalarField<f64>], cols: &mut Vec<Column>| {
            for (b, f) in fs.iter().enumerate() {
                let n = if fs.len() == 1 { name.to_string() } else { format!("{name}.{b}") };
                cols.extend(Column::real(&n, f));
            }
        };
        per_body("P_u", &self.p_u, &mut cols);
        cols.extend(Column::real("P_v", &self.p_v));
        per_body("K_u", &self.k_u, &mut cols);
        per_body("K_v", &self.k_v, &mut cols);
        cols.extend(Column::real("Q", &self.q));
        cols.extend(Column::real("E_S", &self.e_s));
        cols.extend(Column::real("E_theta", &self.e_theta));
        cols.extend(Column::real("theta", &self.theta));
        cols.extend(Column::real("u_dot_v", &self.u_dot_v));
        cols.extend(Column::real("U", &self.potential));
        cols
    }
}

fn sum_fields(fs: &[ScalarField<f64>]) -> ScalarField<f64> {
    let mut total = fs[0].clone();
    for f in &fs[1..] {
        total = total.axpby(1.0, f, 1.0).expect("fields share a grid");
    }
    total
}

/// Samples Ψ and ∂Ψ/∂t on `grid` at time `t`.
pub fn sample_psi(
    state: &AnalyticState,
    grid: &Arc<Grid>,
    t: f64,
) -> Result<(ScalarField<Complex64>, ScalarField<Complex64>)> {
    check_state_grid(state, grid)?;
    let pairs: Vec<(Complex64, Complex64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| state.eval_psi_dt(&grid.point(i), t))
        .collect();
    let (psi, dt): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok((
        ScalarField::new(grid.clone(), psi, "1/bohr^(d/2)")?,
        ScalarField::new(grid.clone(), dt, "1/(bohr^(d/2) time)")?,
    ))
}

/// Builds the full [`FieldBundle`] of `state` on `grid` at time `t`.
pub fn bundle(state: &AnalyticState, grid: &Arc<Grid>, t: f64, opts: &FieldOptions) -> Result<FieldBundle> {
    let (psi, dpsi) = sample_psi(state, grid, t)?;
    let polar = polar_decompose(&psi, opts.node_eps)?;
    let potential = ScalarField::from_fn(grid.clone(), "hartree", |p| state.potential_u(p));
    match opts.provenance {
        Provenance::Analytic => analytic_bundle(state, grid, t, opts, polar, potential),
        Provenance::Grid => grid_bundle(&psi, &dpsi, t, opts, polar, potential),
    }
}

fn analytic_bundle(
    state: &AnalyticState,
    grid: &Arc<Grid>,
    t: f64,
    opts: &FieldOptions,
    polar: PolarPair,
    potential: ScalarField<f64>,
) -> Result<FieldBundle> {
    let nb = state.n_bodies();
    let d = state.config_dim();
    let mask = &polar.mask;
    // per point: u, v, p_u, k_u, k_v per body, then p_v, p_v_div, q, e_s, e_theta, theta, u.v
    let width = 2 * d + 3 * nb + 7;
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if mask[i] {
                return vec![f64::NAN; width];
            }
            let pj = PointJets::new(state, &grid.point(i), t, 2);
            let mut row = Vec::with_capacity(width);
            let u: Vec<f64> = (0..d).map(|a| pj.u(a, opts.sign).re_value()).collect();
            let v: Vec<f64> = (0..d).map(|a| pj.v(a).re_value()).collect();
            row.extend(&u);
            row.extend(&v);
            for b in 0..nb {
                row.push(pj.p_u(b).re_value());
            }
            for b in 0..nb {
                row.push(0.5 * u[pj.axes(b)].iter().map(|x| x * x).sum::<f64>());
            }
            for b in 0..nb {
                row.push(0.5 * v[pj.axes(b)].iter().map(|x| x * x).sum::<f64>());
            }
            row.push(pj.p_v().re_value());
            row.push((0..nb).map(|b| pj.p_v_div(b).re_value()).sum());
            row.push(pj.q().re_value());
            row.push(pj.e_s().re_value());
            row.push(pj.e_theta().re_value());
            row.push(pj.theta().re_value());
            row.push(u.iter().zip(&v).map(|(a, b)| a * b).sum());
            row
        })
        .collect();
    let col = |k: usize, units: &str| {
        ScalarField::new(grid.clone(), rows.iter().map(|r| r[k]).collect(), units).expect("sized")
    };
    let vec_field = |off: usize, units: &str| {
        VectorField::new(
            grid.clone(),
            d,
            rows.iter().flat_map(|r| r[off..off + d].iter().copied()).collect(),
            units,
        )
        .expect("sized")
    };
    let base = 2 * d;
    let tail = base + 3 * nb;
    Ok(FieldBundle {
        time: t,
        sign: opts.sign,
        provenance: Provenance::Analytic,
        rho_m: polar.rho.clone().with_units("m_e/bohr^d"),
        u: vec_field(0, "bohr/time"),
        v: vec_field(d, "bohr/time"),
        p_u: (0..nb).map(|b| col(base + b, "hartree/bohr^d")).collect(),
        k_u: (0..nb).map(|b| col(base + nb + b, "hartree")).collect(),
        k_v: (0..nb).map(|b| col(base + 2 * nb + b, "hartree")).collect(),
        p_v: col(tail, "hartree/bohr^d"),
        p_v_div: col(tail + 1, "hartree/bohr^d"),
        q: col(tail + 2, "hartree"),
        e_s: col(tail + 3, "hartree"),
        e_theta: col(tail + 4, "hartree"),
        theta: col(tail + 5, "hbar"),
        u_dot_v: col(tail + 6, "bohr^2/time^2"),
        polar,
        potential,
    })
}

fn grid_bundle(
    psi: &ScalarField<Complex64>,
    dpsi: &ScalarField<Complex64>,
    t: f64,
    opts: &FieldOptions,
    polar: PolarPair,
    potential: ScalarField<f64>,
) -> Result<FieldBundle> {
    let grid = psi.grid().clone();
    let nb = grid.n_bodies();
    let mask = polar.mask.clone();
    let rho = &polar.rho;
    let u = stack(
        (0..nb)
            .map(|b| velocity_u_masked(rho, opts.sign, b, &mask))
            .collect::<Result<_>>()?,
        "bohr/time",
    )?;
    let v = stack(
        (0..nb).map(|b| velocity_v(&polar.s, b)).collect::<Result<_>>()?,
        "bohr/time",
    )?;
    let p_u = (0..nb).map(|b| pressure_u(rho, b)).collect::<Result<Vec<_>>>()?;
    let d = grid.dim_per_body();
    let kinetic = |f: &VectorField<f64>, b: usize| {
        ScalarField::new(
            grid.clone(),
            (0..grid.len())
                .map(|i| 0.5 * f.at(i)[b * d..(b + 1) * d].iter().map(|x| x * x).sum::<f64>())
                .collect(),
            "hartree",
        )
        .expect("sized")
    };
    let k_u = (0..nb).map(|b| kinetic(&u, b)).collect();
    let k_v = (0..nb).map(|b| kinetic(&v, b)).collect();
    let ratio: Vec<Complex64> = psi
        .values()
        .iter()
        .zip(dpsi.values())
        .zip(&mask)
        .map(|((p, dp), &m)| if m { Complex64::new(f64::NAN, f64::NAN) } else { dp / p })
        .collect();
    let p_v = ScalarField::new(
        grid.clone(),
        psi.values()
            .iter()
            .zip(dpsi.values())
            .map(|(p, dp)| (p.conj() * dp).re)
            .collect(),
        "hartree/bohr^d",
    )?;
    let mut p_v_div = ScalarField::constant(grid.clone(), 0.0, "hartree/bohr^d");
    for b in 0..nb {
        let vb = velocity_v(&polar.s, b)?;
        let flux = vb.mul_scalar(rho, "")?;
        p_v_div = p_v_div.axpby(1.0, &grid::divergence(&flux, b)?, -0.5)?;
    }
    let e_s = ScalarField::new(grid.clone(), ratio.iter().map(|z| -z.im).collect(), "hartree")?;
    let e_theta = ScalarField::new(grid.clone(), ratio.iter().map(|z| z.re).collect(), "hartree")?;
    let theta = rho.map("hbar", |r| -0.5 * r.ln());
    let theta = ScalarField::new(
        grid.clone(),
        theta.values().iter().zip(&mask).map(|(&x, &m)| masked(x, m)).collect(),
        "hbar",
    )?;
    let u_dot_v = ScalarField::new(
        grid.clone(),
        (0..grid.len())
            .map(|i| u.at(i).iter().zip(v.at(i)).map(|(a, b)| a * b).sum())
            .collect(),
        "bohr^2/time^2",
    )?;
    Ok(FieldBundle {
        time: t,
        sign: opts.sign,
        provenance: Provenance::Grid,
        rho_m: rho.clone().with_units("m_e/bohr^d"),
        q: quantum_potential_masked(&polar.r, &mask)?,
        u,
        v,
        p_u,
        p_v,
        p_v_div,
        k_u,
        k_v,
        e_s,
        e_theta,
        theta,
        u_dot_v,
        polar,
        potential,
    })
}

fn quantum_potential_masked(r: &ScalarField<f64>, mask: &[bool]) -> Result<ScalarField<f64>> {
    let mut lap = ScalarField::constant(r.grid().clone(), 0.0, "");
    for b in 0..r.grid().n_bodies() {
        lap = lap.axpby(1.0, &grid::laplacian(r, b)?, 1.0)?;
    }
    ScalarField::new(
        r.grid().clone(),
        (0..r.len())
            .map(|i| masked(-0.5 * lap.values()[i] / r.values()[i], mask[i]))
            .collect(),
        "hartree",
    )
}
