use crate::error::{Error, Result};
use crate::fields::{PointJets, Sign};
use crate::jet::{self, Jet};
use crate::states::{AnalyticState, DEFAULT_NODE_EPS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Velocity field followed by a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityKind {
    UMinus,
    UPlus,
    V,
    /// ±½(∇ρ/ρ)×ẑ, one-body 3D states only.
    USpin,
    /// w = u + v with u on the branch of [`TrajectoryOptions::sign`].
    WSum,
}

impl VelocityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VelocityKind::UMinus => "u_minus",
            VelocityKind::UPlus => "u_plus",
            VelocityKind::V => "v",
            VelocityKind::USpin => "u_spin",
            VelocityKind::WSum => "w_sum",
        }
    }
}

impl std::str::FromStr for VelocityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::Precondition(format!("unknown velocity kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryOptions {
    pub t0: f64,
    /// Branch of u used by `w_sum` and orientation of `u_spin`.
    pub sign: Sign,
    /// Paths stop where ρ < node_eps·(density scale of the state).
    pub node_eps: f64,
    /// Rescale `u_spin` to the speed |u±|.
    pub renormalize_spin: bool,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            t0: 0.0,
            sign: Sign::Minus,
            node_eps: DEFAULT_NODE_EPS,
            renormalize_spin: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    LeftDomain,
    HitNode,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub reason: TerminationReason,
    /// Completed steps.
    pub step: usize,
    pub time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: Vec<f64>,
    pub velocity_kind: VelocityKind,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub speed: Vec<f64>,
    /// ∇·(ρ·vel) at each point.
    pub div_flux: Vec<f64>,
    pub rho: Vec<f64>,
    pub termination: Termination,
    pub notes: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Distance of each point from the origin.
    pub fn radii(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    /// Columns `t`, `x0..`, `speed`, `div_flux`, `rho`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.seed.len();
        let mut header = vec!["t [time]".to_string()];
        header.extend((0..dim).map(|a| format!("x{a} [bohr]")));
        header.extend([
            "speed [bohr/time]".to_string(),
            "div_flux [1/(bohr^d time)]".to_string(),
            "rho [1/bohr^d]".to_string(),
        ]);
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut rec = vec![fmt(self.times[k])];
            rec.extend(self.points[k].iter().map(|&x| fmt(x)));
            rec.extend([fmt(self.speed[k]), fmt(self.div_flux[k]), fmt(self.rho[k])]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

/// Diagnostics of a velocity field along a path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxSeries {
    pub times: Vec<f64>,
    /// ∇·vel.
    pub div_velocity: Vec<f64>,
    /// ∇·(ρ·vel).
    pub div_flux: Vec<f64>,
    pub rho: Vec<f64>,
}

fn velocity_jets<'s>(pj: &PointJets<'s>, kind: VelocityKind, opts: &TrajectoryOptions) -> Vec<Jet<'s>> {
    let dim = pj.config_dim();
    match kind {
        VelocityKind::UMinus => (0..dim).map(|a| pj.u(a, Sign::Minus)).collect(),
        VelocityKind::UPlus => (0..dim).map(|a| pj.u(a, Sign::Plus)).collect(),
        VelocityKind::V => (0..dim).map(|a| pj.v(a)).collect(),
        VelocityKind::WSum => (0..dim).map(|a| &pj.u(a, opts.sign) + &pj.v(a)).collect(),
        VelocityKind::USpin => {
            let k = 0.5 * opts.sign.factor();
            let gx = pj.rho.d(0).div(&pj.rho);
            let gy = pj.rho.d(1).div(&pj.rho);
            let mut w = vec![gy.scale(k), gx.scale(-k), pj.zero()];
            if opts.renormalize_spin {
                let full = jet::sum((0..3).map(|a| {
                    let g = pj.rho.d(a);
                    &g * &g
                }))
                .expect("three axes");
                let perp = &pj.rho.d(0) * &pj.rho.d(0) + &pj.rho.d(1) * &pj.rho.d(1);
                let f = full.div(&perp).sqrt();
                w.iter_mut().for_each(|c| *c = &*c * &f);
            }
            w
        }
    }
}

fn check_kind(state: &AnalyticState, kind: VelocityKind) -> Result<()> {
    if kind == VelocityKind::USpin && (state.n_bodies() != 1 || state.dim_per_body() != 3) {
        return Err(Error::Precondition(
            "spin velocity is defined for one-body 3D states only".into(),
        ));
    }
    Ok(())
}

/// Exact velocity of `kind` at configuration point `x` and time `t`.
pub fn velocity_at(
    state: &AnalyticState,
    kind: VelocityKind,
    x: &[f64],
    t: f64,
    opts: &TrajectoryOptions,
) -> Result<Vec<f64>> {
    state.check_point(x)?;
    check_kind(state, kind)?;
    let pj = PointJets::new(state, x, t, 1);
    if pj.rho_value() < opts.node_eps * state.density_scale() {
        return Err(Error::Nodal(x.to_vec()));
    }
    Ok(velocity_jets(&pj, kind, opts).iter().map(Jet::re_value).collect())
}

struct Diag {
    speed: f64,
    div_velocity: f64,
    div_flux: f64,
    rho: f64,
}

fn diagnostics(state: &AnalyticState, kind: VelocityKind, x: &[f64], t: f64, opts: &TrajectoryOptions) -> Diag {
    let pj = PointJets::new(state, x, t, 2);
    let vel = velocity_jets(&pj, kind, opts);
    let speed = vel.iter().map(|v| v.re_value().powi(2)).sum::<f64>().sqrt();
    let div_velocity = vel.iter().enumerate().map(|(a, v)| v.d_value(a).re).sum();
    let div_flux = vel
        .iter()
        .enumerate()
        .map(|(a, v)| (&pj.rho * v).d_value(a).re)
        .sum();
    Diag {
        speed,
        div_velocity,
        div_flux,
        rho: pj.rho_value(),
    }
}

enum Step {
    Ok(Vec<f64>),
    Stop(TerminationReason),
}

/// Integrates dx/dt = vel(x, t) with classical fixed-step RK4. The path
/// stops early when a stage point leaves the domain or enters the nodal set.
pub fn integrate_trajectory(
    state: &AnalyticState,
    seed: &[f64],
    kind: VelocityKind,
    dt: f64,
    n_steps: usize,
    opts: &TrajectoryOptions,
) -> Result<Trajectory> {
    state.check_point(seed)?;
    check_kind(state, kind)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("dt must be positive and finite, got {dt}")));
    }
    if !opts.t0.is_finite() || seed.iter().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("seed and start time must be finite".into()));
    }
    let domain = state.domain();
    if !domain.contains(seed) {
        return Err(Error::Precondition(format!("seed {seed:?} lies outside the domain")));
    }
    let floor = opts.node_eps * state.density_scale();
    let eval = |x: &[f64], t: f64| -> Step {
        if !domain.contains(x) {
            return Step::Stop(TerminationReason::LeftDomain);
        }
        let pj = PointJets::new(state, x, t, 1);
        if !(pj.rho_value() >= floor) {
            return Step::Stop(TerminationReason::HitNode);
        }
        let v: Vec<f64> = velocity_jets(&pj, kind, opts).iter().map(Jet::re_value).collect();
        if v.iter().all(|c| c.is_finite()) {
            Step::Ok(v)
        } else {
            Step::Stop(TerminationReason::HitNode)
        }
    };
    if let Step::Stop(_) = eval(seed, opts.t0) {
        return Err(Error::Nodal(seed.to_vec()));
    }

    let mut x = seed.to_vec();
    let mut traj = Trajectory {
        seed: seed.to_vec(),
        velocity_kind: kind,
        times: Vec::with_capacity(n_steps + 1),
        points: Vec::with_capacity(n_steps + 1),
        speed: Vec::new(),
        div_flux: Vec::new(),
        rho: Vec::new(),
        termination: Termination {
            reason: TerminationReason::MaxSteps,
            step: n_steps,
            time: opts.t0 + n_steps as f64 * dt,
        },
        notes: Vec::new(),
    };
    if kind == VelocityKind::WSum {
        traj.notes
            .push("total velocity w = u + v: no energy statement is made for these paths unless u·v = 0".into());
    }
    let push = |traj: &mut Trajectory, x: &[f64], t: f64| {
        let d = diagnostics(state, kind, x, t, opts);
        traj.times.push(t);
        traj.points.push(x.to_vec());
        traj.speed.push(d.speed);
        traj.div_flux.push(d.div_flux);
        traj.rho.push(d.rho);
    };
    push(&mut traj, &x, opts.t0);
    let dim = x.len();
    let offset = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { (0..dim).map(|a| x[a] + h * k[a]).collect() };
    for step in 0..n_steps {
        let t = opts.t0 + step as f64 * dt;
        let stages = (|| {
            let k1 = match eval(&x, t) {
                Step::Ok(v) => v,
                Step::Stop(r) => return Err(r),
            };
            let k2 = match eval(&offset(&x, &k1, 0.5 * dt), t + 0.5 * dt) {
                Step::Ok(v) => v,
                Step::Stop(r) => return Err(r),
            };
            let k3 = match eval(&offset(&x, &k2, 0.5 * dt), t + 0.5 * dt) {
                Step::Ok(v) => v,
                Step::Stop(r) => return Err(r),
            };
            let k4 = match eval(&offset(&x, &k3, dt), t + dt) {
                Step::Ok(v) => v,
                Step::Stop(r) => return Err(r),
            };
            let mut next: Vec<f64> = (0..dim)
                .map(|a| x[a] + dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]))
                .collect();
            domain.wrap(&mut next);
            match eval(&next, t + dt) {
                Step::Ok(_) => Ok(next),
                Step::Stop(r) => Err(r),
            }
        })();
        match stages {
            Ok(next) => {
                x = next;
                // Multiplying avoids drift from repeated addition of dt.
                push(&mut traj, &x, opts.t0 + (step + 1) as f64 * dt);
            }
            Err(reason) => {
                traj.termination = Termination { reason, step, time: t };
                break;
            }
        }
    }
    Ok(traj)
}

/// Integrates one trajectory per seed in parallel; results keep seed order.
pub fn integrate_many(
    state: &AnalyticState,
    seeds: &[Vec<f64>],
    kind: VelocityKind,
    dt: f64,
    n_steps: usize,
    opts: &TrajectoryOptions,
) -> Vec<Result<Trajectory>> {
    seeds
        .par_iter()
        .map(|s| integrate_trajectory(state, s, kind, dt, n_steps, opts))
        .collect()
}

/// ∇·vel, ∇·(ρ·vel) and ρ at every point of `traj`, using exact derivatives
/// of `state`.
pub fn mass_flux_along(traj: &Trajectory, state: &AnalyticState, opts: &TrajectoryOptions) -> Result<FluxSeries> {
    check_kind(state, traj.velocity_kind)?;
    let rows: Vec<Diag> = traj
        .points
        .par_iter()
        .zip(&traj.times)
        .map(|(x, &t)| {
            state.check_point(x)?;
            Ok(diagnostics(state, traj.velocity_kind, x, t, opts))
        })
        .collect::<Result<_>>()?;
    Ok(FluxSeries {
        times: traj.times.clone(),
        div_velocity: rows.iter().map(|d| d.div_velocity).collect(),
        div_flux: rows.iter().map(|d| d.div_flux).collect(),
        rho: rows.iter().map(|d| d.rho).collect(),
    })
}
