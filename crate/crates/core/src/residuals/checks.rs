//! The individual checks. Each one gathers its terms either from exact
//! local expansions or from finite differences of grid samples, then sums
//! them into named residuals with a shared per-point assembly.

use super::ctx::{ps, pv, Ctx, GridCtx, PointSub, Sub};
use super::{GlobalCheck, Outcome, Precondition};
use crate::error::{Error, Result};
use crate::fields::{self, PointJets, Sign};
use crate::grid;
use crate::jet::{self, Jet};
use crate::states::AnalyticState;
use num_complex::Complex64;

pub(crate) fn run(id: &str, c: &Ctx) -> Result<Outcome> {
    match id {
        "bernoulli" => bernoulli(c),
        "stationary_energy" => stationary_energy(c),
        "hamilton_jacobi" => hamilton_jacobi(c),
        "quantum_potential" => quantum_potential(c),
        "kinetic_integrand" => kinetic_integrand(c),
        "ke_expectation" => ke_expectation(c),
        "continuity" => continuity(c),
        "u_continuity" => u_continuity(c),
        "laplace_special" => laplace_special(c),
        "euler_one_body" => euler_one_body(c),
        "euler_n_body" => euler_n_body(c),
        "pressure_relation" => pressure_relation(c),
        "pressure_gradient" => pressure_gradient(c),
        "energy_gradients" => energy_gradients(c),
        "energy_fields" => energy_fields(c),
        "pressure_complex" => pressure_complex(c),
        "kinetic_decomposition" => kinetic_decomposition(c),
        "appendix_b" => appendix_b(c),
        "appendix_c" => appendix_c(c),
        "spin_mass_conservation" => spin_mass_conservation(c),
        "conservation" => conservation(c),
        "euler_appendix" => euler_appendix(c),
        _ => Err(Error::UnknownCheck(id.to_string())),
    }
}

fn need_real(c: &Ctx, check: &str) -> Result<()> {
    if c.state.is_real_eigenstate() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{check} needs a real eigenstate; `{}` is not one",
            c.state.label()
        )))
    }
}

fn need_one_body(c: &Ctx, check: &str) -> Result<()> {
    if c.n_bodies() == 1 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{check} is for one body; `{}` has {} (use euler_n_body)",
            c.state.label(),
            c.n_bodies()
        )))
    }
}

/// Per body K_v (optional), K_u and P_u/ρ, then U.
fn energy_terms(pj: &PointJets, sign: Sign, with_v: bool) -> Vec<f64> {
    let rho = pj.rho_value();
    let mut t = Vec::with_capacity(3 * pj.n_bodies + 1);
    for b in 0..pj.n_bodies {
        if with_v {
            t.push(pj.k_v(b).re_value());
        }
        t.push(pj.k_u(b, sign).re_value());
        t.push(pj.p_u(b).re_value() / rho);
    }
    t.push(pj.potential.re_value());
    t
}

fn energy_arrays(g: &GridCtx, sign: Sign, with_v: bool) -> Vec<Vec<f64>> {
    let u: Vec<Vec<f64>> = (0..g.config_dim()).map(|a| g.u(a, sign)).collect();
    let mut t = Vec::new();
    for b in 0..g.n_bodies {
        if with_v {
            t.push(g.k_of(&g.v, b));
        }
        t.push(g.k_of(&u, b));
        let pu = g.p_u(b);
        t.push(g.pw(|i| pu[i] / g.rho[i]));
    }
    t.push(g.pot.clone());
    t
}

fn at(arrays: &[Vec<f64>], i: usize) -> Vec<f64> {
    arrays.iter().map(|a| a[i]).collect()
}

/// Collects the sum-of-energies terms once per node in either mode.
fn energy_rows<F>(c: &Ctx, with_v: bool, extra: F, names: &[(&str, bool)]) -> Vec<Sub>
where
    F: Fn(Vec<f64>, f64) -> Vec<PointSub> + Sync,
{
    let sign = c.opts.sign;
    match &c.fd {
        None => c.points(2, names, |pj, _| {
            extra(energy_terms(pj, sign, with_v), pj.ds_dt().re_value())
        }),
        Some(g) => {
            let arrays = energy_arrays(g, sign, with_v);
            c.rows(names, |i| extra(at(&arrays, i), g.ds[i]))
        }
    }
}

fn bernoulli(c: &Ctx) -> Result<Outcome> {
    need_real(c, "bernoulli")?;
    let e = c.energy("bernoulli")?;
    let subs = energy_rows(
        c,
        false,
        |mut t, _| {
            let lhs = ps(&t);
            t.push(-e);
            vec![ps(&t), lhs]
        },
        &[("bernoulli", true), ("lhs", false)],
    );
    let mut out = Outcome::new(subs);
    let (lo, hi) = c.range(&out.subs[1]);
    let tol = 2.0 * c.tolerance(c.term_scale(&out.subs[0]));
    out.globals.push(GlobalCheck::new("lhs_spread", hi - lo, 0.0, tol));
    Ok(out)
}

fn stationary_energy(c: &Ctx) -> Result<Outcome> {
    let e = c.energy("stationary_energy")?;
    let subs = energy_rows(
        c,
        true,
        |mut t, _| {
            t.push(-e);
            vec![ps(&t)]
        },
        &[("stationary_energy", true)],
    );
    Ok(Outcome::new(subs))
}

fn hamilton_jacobi(c: &Ctx) -> Result<Outcome> {
    let subs = energy_rows(
        c,
        true,
        |mut t, ds| {
            t.push(ds);
            vec![ps(&t)]
        },
        &[("hamilton_jacobi", true)],
    );
    Ok(Outcome::new(subs))
}

fn quantum_potential(c: &Ctx) -> Result<Outcome> {
    let names = [("quantum_potential", true)];
    let assemble = |q: f64, mut t: Vec<f64>| {
        t.pop();
        let mut terms: Vec<f64> = t.into_iter().map(|x| -x).collect();
        terms.push(q);
        vec![ps(&terms)]
    };
    let sign = c.opts.sign;
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| assemble(pj.q().re_value(), energy_terms(pj, sign, false))),
        Some(g) => {
            let arrays = energy_arrays(g, sign, false);
            let mut q = vec![0.0; g.len()];
            for b in 0..g.n_bodies {
                for (qi, l) in q.iter_mut().zip(g.lap(&g.r, b)) {
                    *qi += l;
                }
            }
            let q = g.pw(|i| -0.5 * q[i] / g.r[i]);
            c.rows(&names, |i| assemble(q[i], at(&arrays, i)))
        }
    };
    Ok(Outcome::new(subs))
}

/// Per body: −½R∇²R, ρK_u, P_u.
fn kinetic_parts(c: &Ctx) -> Vec<Vec<f64>> {
    let nb = c.n_bodies();
    let sign = c.opts.sign;
    let names: Vec<String> = (0..3 * nb).map(|k| format!("part{k}")).collect();
    let name_refs: Vec<(&str, bool)> = names.iter().map(|n| (n.as_str(), false)).collect();
    let subs = match &c.fd {
        None => c.points(2, &name_refs, |pj, _| {
            let r = pj.rho.sqrt();
            let rho = pj.rho_value();
            let mut row = Vec::with_capacity(3 * nb);
            for b in 0..nb {
                row.push(ps(&[-0.5 * r.re_value() * pj.lap(&r, b).re_value()]));
                row.push(ps(&[rho * pj.k_u(b, sign).re_value()]));
                row.push(ps(&[pj.p_u(b).re_value()]));
            }
            row
        }),
        Some(g) => {
            let u: Vec<Vec<f64>> = (0..g.config_dim()).map(|a| g.u(a, sign)).collect();
            let mut arrays = Vec::new();
            for b in 0..nb {
                let lr = g.lap(&g.r, b);
                arrays.push(g.pw(|i| -0.5 * g.r[i] * lr[i]));
                let ku = g.k_of(&u, b);
                arrays.push(g.pw(|i| g.rho[i] * ku[i]));
                arrays.push(g.p_u(b));
            }
            c.rows(&name_refs, |i| arrays.iter().map(|a| ps(&[a[i]])).collect())
        }
    };
    subs.into_iter().map(|s| s.comps.into_iter().next().expect("scalar")).collect()
}

fn kinetic_integrand(c: &Ctx) -> Result<Outcome> {
    let parts = kinetic_parts(c);
    let nb = c.n_bodies();
    let subs = c.rows(&[("kinetic_integrand", true)], |i| {
        let mut terms = Vec::with_capacity(3 * nb);
        for b in 0..nb {
            terms.push(parts[3 * b][i]);
            terms.push(-parts[3 * b + 1][i]);
            terms.push(-parts[3 * b + 2][i]);
        }
        vec![ps(&terms)]
    });
    Ok(Outcome::new(subs))
}

fn with_warnings(mut g: GlobalCheck, warnings: &[String]) -> GlobalCheck {
    g.warnings.extend_from_slice(warnings);
    g
}

fn sum_parts(parts: &[Vec<f64>], pick: impl Fn(usize) -> bool) -> Vec<f64> {
    let n = parts[0].len();
    (0..n)
        .map(|i| {
            parts
                .iter()
                .enumerate()
                .filter(|(k, _)| pick(*k))
                .map(|(_, p)| p[i])
                .sum()
        })
        .collect()
}

fn ke_expectation(c: &Ctx) -> Result<Outcome> {
    need_real(c, "ke_expectation")?;
    let e = c.energy("ke_expectation")?;
    let parts = kinetic_parts(c);
    let nb = c.n_bodies();
    let mut out = kinetic_integrand(c)?;

    let t_r = c.integrate(&sum_parts(&parts, |k| k % 3 == 0));
    let t_u = c.integrate(&sum_parts(&parts, |k| k % 3 == 1));
    let rho_u: Vec<f64> = match &c.fd {
        Some(g) => g.pw(|i| if c.mask[i] { f64::NAN } else { g.rho[i] * g.pot[i] }),
        None => (0..c.len())
            .map(|i| {
                if c.mask[i] {
                    f64::NAN
                } else {
                    let x = c.grid.point(i);
                    c.state.eval_psi(&x, c.t).norm_sqr() * c.state.potential_u(&x)
                }
            })
            .collect(),
    };
    let pot = c.integrate(&rho_u);

    out.globals.push(with_warnings(
        GlobalCheck::new("kinetic_routes", t_r.value, t_u.value, c.global_tolerance(t_u.value)),
        &t_r.warnings,
    ));
    out.globals.push(with_warnings(
        GlobalCheck::new(
            "kinetic_energy",
            t_u.value,
            e - pot.value,
            c.global_tolerance(e - pot.value),
        ),
        &pot.warnings,
    ));
    for b in 0..nb {
        let p = c.integrate(&parts[3 * b + 2]);
        out.globals.push(with_warnings(
            GlobalCheck::new(format!("pressure_integral.{b}"), p.value, 0.0, c.global_tolerance(0.0)),
            &p.warnings,
        ));
    }
    out.notes.push(format!(
        "kinetic energy: {:.12e} from -1/2 R lap R, {:.12e} from rho K_u",
        t_r.value, t_u.value
    ));
    Ok(out)
}

fn truncated(warnings: &[String]) -> bool {
    warnings.iter().any(|w| w.starts_with("integrand at"))
}

fn continuity(c: &Ctx) -> Result<Outcome> {
    let names = [("divergence_form", true), ("expansion_form", true), ("drho_dt", false)];
    let d = c.config_dim();
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| {
            let drho = pj.drho_dt().re_value();
            let rho = pj.rho_value();
            let mut div = vec![drho];
            let mut exp = vec![drho];
            for a in 0..d {
                let v = pj.v(a);
                div.push((&pj.rho * &v).d_value(a).re);
                exp.push(pj.rho.d_value(a).re * v.re_value());
                exp.push(rho * v.d_value(a).re);
            }
            vec![ps(&div), ps(&exp), ps(&[drho])]
        }),
        Some(g) => {
            let flux_d: Vec<Vec<f64>> = (0..d)
                .map(|a| g.d(&g.pw(|i| g.rho[i] * g.v[a][i]), a))
                .collect();
            let grad_rho: Vec<Vec<f64>> = (0..d).map(|a| g.d(&g.rho, a)).collect();
            let lap_s: Vec<Vec<f64>> = (0..g.n_bodies).map(|b| g.phase_lap(b)).collect();
            c.rows(&names, |i| {
                let mut div = vec![g.drho[i]];
                let mut exp = vec![g.drho[i]];
                for a in 0..d {
                    div.push(flux_d[a][i]);
                    exp.push(grad_rho[a][i] * g.v[a][i]);
                }
                for l in &lap_s {
                    exp.push(g.rho[i] * l[i]);
                }
                vec![ps(&div), ps(&exp), ps(&[g.drho[i]])]
            })
        }
    };
    let mut out = Outcome::new(subs);
    let rate = c.integrate(out.subs[2].values());
    if truncated(&rate.warnings) {
        out.notes
            .push("grid does not cover the support of ρ; mass-rate integral not asserted".into());
    } else {
        out.globals.push(with_warnings(
            GlobalCheck::new("mass_rate", rate.value, 0.0, c.global_tolerance(0.0)),
            &rate.warnings,
        ));
    }
    Ok(out)
}

fn u_continuity(c: &Ctx) -> Result<Outcome> {
    let names = [("u_continuity", true), ("flux_divergence", false)];
    let d = c.config_dim();
    let s = c.opts.sign.factor();
    let subs = match &c.fd {
        None => {
            let sign = c.opts.sign;
            c.points(2, &names, |pj, _| {
                let mut terms = Vec::with_capacity(2 * d);
                for a in 0..d {
                    terms.push((&pj.rho * &pj.u(a, sign)).d_value(a).re);
                }
                let div: f64 = terms.iter().sum();
                for a in 0..d {
                    terms.push(-0.5 * s * pj.rho.d(a).d_value(a).re);
                }
                vec![ps(&terms), ps(&[div])]
            })
        }
        Some(g) => {
            let flux_d: Vec<Vec<f64>> = (0..d)
                .map(|a| {
                    let u = g.u(a, c.opts.sign);
                    g.d(&g.pw(|i| g.rho[i] * u[i]), a)
                })
                .collect();
            let lap: Vec<Vec<f64>> = (0..g.n_bodies).map(|b| g.lap(&g.rho, b)).collect();
            c.rows(&names, |i| {
                let mut terms: Vec<f64> = flux_d.iter().map(|f| f[i]).collect();
                let div: f64 = terms.iter().sum();
                terms.extend(lap.iter().map(|l| -0.5 * s * l[i]));
                vec![ps(&terms), ps(&[div])]
            })
        }
    };
    let mut out = Outcome::new(subs);
    let net = c.integrate(out.subs[1].values());
    if truncated(&net.warnings) {
        out.notes
            .push("grid does not cover the support of ρ; net-source integral not asserted".into());
    } else {
        out.globals.push(with_warnings(
            GlobalCheck::new("net_source", net.value, 0.0, c.global_tolerance(0.0)),
            &net.warnings,
        ));
    }
    Ok(out)
}

fn laplace_special(c: &Ctx) -> Result<Outcome> {
    let names = [
        ("laplacian_s_source", false),
        ("laplacian_s", false),
        ("grad_rho_dot_grad_s", false),
        ("drho_dt", false),
    ];
    let d = c.config_dim();
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| {
            let rho = pj.rho_value();
            let drho = pj.drho_dt().re_value();
            let lap: Vec<f64> = (0..d).map(|a| pj.v(a).d_value(a).re).collect();
            let dot: Vec<f64> = (0..d).map(|a| pj.rho.d_value(a).re * pj.v(a).re_value()).collect();
            let mut src = lap.clone();
            src.push(drho / rho);
            vec![ps(&src), ps(&lap), ps(&dot), ps(&[drho])]
        }),
        Some(g) => {
            let lap_s: Vec<Vec<f64>> = (0..g.n_bodies).map(|b| g.phase_lap(b)).collect();
            let grad_rho: Vec<Vec<f64>> = (0..d).map(|a| g.d(&g.rho, a)).collect();
            c.rows(&names, |i| {
                let lap: Vec<f64> = lap_s.iter().map(|l| l[i]).collect();
                let dot: Vec<f64> = (0..d).map(|a| grad_rho[a][i] * g.v[a][i]).collect();
                let mut src = lap.clone();
                src.push(g.drho[i] / g.rho[i]);
                vec![ps(&src), ps(&lap), ps(&dot), ps(&[g.drho[i]])]
            })
        }
    };
    let mut out = Outcome::new(subs);
    let (dot, _) = c.norms(&out.subs[2]);
    let dot_tol = c.tolerance(c.term_scale(&out.subs[2]));
    let holds = dot.points > 0 && dot.linf <= dot_tol;
    out.precondition = Some(Precondition {
        name: "grad_rho_dot_grad_s".into(),
        value: dot.linf,
        tolerance: dot_tol,
        passed: holds,
    });
    if !holds {
        out.notes
            .push("∇ρ·∇S does not vanish; no claim about ∇²S is made".into());
        return Ok(out);
    }
    out.subs[0].asserted = true;
    let (rate, _) = c.norms(&out.subs[3]);
    if rate.linf <= c.tolerance(c.term_scale(&out.subs[3])) {
        out.subs[1].asserted = true;
        out.notes.push("static density: ∇²S = 0 asserted".into());
    } else {
        out.notes
            .push("density changes in time: ∇²S = −∂ ln ρ/∂t asserted".into());
    }
    Ok(out)
}

/// Terms of the Euler equation along one configuration axis. `own` holds
/// ρ∂v/∂t, ∂(ρu)/∂t and ρ∂U; `per_body[j]` holds ½ρ∂v_j², ½ρ∂u_j², ∂P_v,j,
/// (∇_j·ρu_j)u and ∂P_u,j, all derivatives along this axis and u = u₋.
struct EulerAxis {
    body: usize,
    own: [f64; 3],
    per_body: Vec<[f64; 5]>,
    /// ρ∂(P_u,body/ρ), for the momentum identity.
    pu_over_rho: f64,
}

impl EulerAxis {
    fn terms(&self) -> Vec<f64> {
        let mut t = self.own.to_vec();
        for p in &self.per_body {
            t.extend_from_slice(p);
        }
        t
    }

    fn total(&self) -> f64 {
        self.terms().iter().sum()
    }
}

fn euler_point(pj: &PointJets) -> Vec<EulerAxis> {
    let d = pj.config_dim();
    let t = pj.t();
    let rho = &pj.rho;
    let r0 = pj.rho_value();
    let u: Vec<Jet> = (0..d).map(|a| pj.u(a, Sign::Minus)).collect();
    let v: Vec<Jet> = (0..d).map(|a| pj.v(a)).collect();
    let per: Vec<_> = (0..pj.n_bodies)
        .map(|j| {
            let ax = pj.axes(j);
            let v2 = jet::sum(ax.clone().map(|b| &v[b] * &v[b])).expect("axes");
            let u2 = jet::sum(ax.clone().map(|b| &u[b] * &u[b])).expect("axes");
            let div_ru: f64 = ax.map(|b| (rho * &u[b]).d_value(b).re).sum();
            (v2, u2, pj.p_v_div(j), pj.p_u(j), div_ru)
        })
        .collect();
    (0..d)
        .map(|a| {
            let body = a / pj.dim_per_body;
            EulerAxis {
                body,
                own: [
                    r0 * v[a].d_value(t).re,
                    (rho * &u[a]).d_value(t).re,
                    r0 * pj.potential.d_value(a).re,
                ],
                per_body: per
                    .iter()
                    .map(|(v2, u2, pv, pu, dru)| {
                        [
                            0.5 * r0 * v2.d_value(a).re,
                            0.5 * r0 * u2.d_value(a).re,
                            pv.d_value(a).re,
                            dru * u[a].re_value(),
                            pu.d_value(a).re,
                        ]
                    })
                    .collect(),
                pu_over_rho: r0 * per[body].3.div(rho).d_value(a).re,
            }
        })
        .collect()
}

/// Grid arrays for [`EulerAxis`]: `own[a]`, `per_body[a][j]`, `pu_over_rho[a]`.
struct EulerArrays {
    own: Vec<[Vec<f64>; 3]>,
    per_body: Vec<Vec<[Vec<f64>; 5]>>,
    pu_over_rho: Vec<Vec<f64>>,
    dim_per_body: usize,
}

impl EulerArrays {
    fn new(g: &GridCtx) -> Self {
        let d = g.config_dim();
        let rho = &g.rho;
        let per: Vec<_> = (0..g.n_bodies)
            .map(|j| {
                let ax = g.axes(j);
                let v2 = g.pw(|i| ax.clone().map(|b| g.v[b][i] * g.v[b][i]).sum());
                let u2 = g.pw(|i| ax.clone().map(|b| g.um[b][i] * g.um[b][i]).sum());
                let mut div_ru = vec![0.0; g.len()];
                for b in ax {
                    let f = g.d(&g.pw(|i| rho[i] * g.um[b][i]), b);
                    for (x, y) in div_ru.iter_mut().zip(f) {
                        *x += y;
                    }
                }
                let pu = g.p_u(j);
                (v2, u2, g.p_v_div(j), pu, div_ru)
            })
            .collect();
        let dds: Vec<Vec<f64>> = (0..d).map(|a| g.d(&g.ds, a)).collect();
        let ddrho: Vec<Vec<f64>> = (0..d).map(|a| g.d(&g.drho, a)).collect();
        let dpot: Vec<Vec<f64>> = (0..d).map(|a| g.d(&g.pot, a)).collect();
        let own = (0..d)
            .map(|a| {
                [
                    g.pw(|i| rho[i] * dds[a][i]),
                    g.pw(|i| -0.5 * ddrho[a][i]),
                    g.pw(|i| rho[i] * dpot[a][i]),
                ]
            })
            .collect();
        let per_body = (0..d)
            .map(|a| {
                per.iter()
                    .map(|(v2, u2, pv, pu, dru)| {
                        let dv2 = g.d(v2, a);
                        let du2 = g.d(u2, a);
                        [
                            g.pw(|i| 0.5 * rho[i] * dv2[i]),
                            g.pw(|i| 0.5 * rho[i] * du2[i]),
                            g.d(pv, a),
                            g.pw(|i| dru[i] * g.um[a][i]),
                            g.d(pu, a),
                        ]
                    })
                    .collect()
            })
            .collect();
        let pu_over_rho = (0..d)
            .map(|a| {
                let pu = &per[a / g.dim_per_body].3;
                let q = g.d(&g.pw(|i| pu[i] / rho[i]), a);
                g.pw(|i| rho[i] * q[i])
            })
            .collect();
        Self {
            own,
            per_body,
            pu_over_rho,
            dim_per_body: g.dim_per_body,
        }
    }

    fn at(&self, i: usize) -> Vec<EulerAxis> {
        (0..self.own.len())
            .map(|a| EulerAxis {
                body: a / self.dim_per_body,
                own: [self.own[a][0][i], self.own[a][1][i], self.own[a][2][i]],
                per_body: self.per_body[a]
                    .iter()
                    .map(|p| [p[0][i], p[1][i], p[2][i], p[3][i], p[4][i]])
                    .collect(),
                pu_over_rho: self.pu_over_rho[a][i],
            })
            .collect()
    }
}

/// Evaluates Euler terms at every node in either mode and assembles them.
fn euler_rows<F>(c: &Ctx, order: usize, names: &[(&str, bool)], assemble: F) -> Vec<Sub>
where
    F: Fn(&[EulerAxis], Option<(&PointJets, &[f64])>) -> Vec<PointSub> + Sync,
{
    match &c.fd {
        None => c.points(order, names, |pj, x| assemble(&euler_point(pj), Some((pj, x)))),
        Some(g) => {
            let arrays = EulerArrays::new(g);
            c.rows(names, |i| assemble(&arrays.at(i), None))
        }
    }
}

fn euler_one_body(c: &Ctx) -> Result<Outcome> {
    need_one_body(c, "euler_one_body")?;
    let a = c.opts.split_a;
    let b = 1.0 - a;
    let names = [
        ("euler", true),
        ("split", true),
        ("momentum_identity", true),
        ("eq_u", false),
        ("eq_v", false),
    ];
    let subs = euler_rows(c, 3, &names, |axes, _| {
        let mut total = Vec::new();
        let mut split = Vec::new();
        let mut momentum = Vec::new();
        let mut eq_u = Vec::new();
        let mut eq_v = Vec::new();
        for ax in axes {
            let o = ax.own;
            let p = ax.per_body[0];
            let u_terms = vec![o[1], p[1], p[3], p[4], a * o[2]];
            let v_terms = vec![o[0], p[0], p[2], b * o[2]];
            let su: f64 = u_terms.iter().sum();
            let sv: f64 = v_terms.iter().sum();
            split.push(vec![su, sv, -ax.total()]);
            total.push(ax.terms());
            momentum.push(vec![ax.pu_over_rho, -p[3], -p[4]]);
            eq_u.push(u_terms);
            eq_v.push(v_terms);
        }
        vec![pv(&total), pv(&split), pv(&momentum), pv(&eq_u), pv(&eq_v)]
    });
    Ok(Outcome::new(subs))
}

/// Per body i: ∂P_u,i/∂t + ½Σ_j∇²_iP_v,j. Per axis: Σ_j∂P_v,j + ∂(ρu₋)/∂t.
fn pressure_rows(pj: &PointJets) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let t = pj.t();
    let pv_all = jet::sum((0..pj.n_bodies).map(|j| pj.p_v_div(j))).expect("bodies");
    let relation = (0..pj.n_bodies)
        .map(|i| vec![pj.p_u(i).d_value(t).re, 0.5 * pj.lap(&pv_all, i).re_value()])
        .collect();
    let gradient = (0..pj.config_dim())
        .map(|a| vec![pv_all.d_value(a).re, (&pj.rho * &pj.u(a, Sign::Minus)).d_value(t).re])
        .collect();
    (relation, gradient)
}

struct PressureArrays {
    relation: Vec<[Vec<f64>; 2]>,
    gradient: Vec<[Vec<f64>; 2]>,
}

impl PressureArrays {
    fn new(g: &GridCtx) -> Self {
        let mut pv_all = vec![0.0; g.len()];
        for j in 0..g.n_bodies {
            for (x, y) in pv_all.iter_mut().zip(g.p_v_div(j)) {
                *x += y;
            }
        }
        let relation = (0..g.n_bodies)
            .map(|i| {
                let a = g.lap(&g.drho, i).into_iter().map(|x| -0.25 * x).collect();
                let b = g.lap(&pv_all, i).into_iter().map(|x| 0.5 * x).collect();
                [a, b]
            })
            .collect();
        let gradient = (0..g.config_dim())
            .map(|a| [g.d(&pv_all, a), g.d(&g.drho, a).into_iter().map(|x| -0.5 * x).collect()])
            .collect();
        Self { relation, gradient }
    }

    fn at(&self, i: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            self.relation.iter().map(|r| vec![r[0][i], r[1][i]]).collect(),
            self.gradient.iter().map(|r| vec![r[0][i], r[1][i]]).collect(),
        )
    }
}

fn pressure_relation(c: &Ctx) -> Result<Outcome> {
    let names = [("pressure_relation", true), ("pressure_gradient_sum", true)];
    let subs = match &c.fd {
        None => c.points(4, &names, |pj, _| {
            let (r, g) = pressure_rows(pj);
            vec![pv(&r), pv(&g)]
        }),
        Some(g) => {
            let arrays = PressureArrays::new(g);
            c.rows(&names, |i| {
                let (r, g) = arrays.at(i);
                vec![pv(&r), pv(&g)]
            })
        }
    };
    Ok(Outcome::new(subs))
}

/// One-body Euler residual of `factor` at `x`, times the density of `other` at `y`.
fn factor_euler(factor: &AnalyticState, x: &[f64], other: &AnalyticState, y: &[f64], t: f64) -> Vec<f64> {
    let pj = PointJets::new(factor, x, t, 3);
    let w = other.eval_psi(y, t).norm_sqr();
    euler_point(&pj).iter().map(|ax| w * ax.total()).collect()
}

fn euler_n_body(c: &Ctx) -> Result<Outcome> {
    let factors = c.state.factors();
    let separable = factors.is_some();
    let analytic = c.fd.is_none();
    let mut names = vec![
        ("euler", true),
        ("pressure_gradient_sum", true),
        ("pressure_relation", true),
        ("cross_body_terms", false),
    ];
    if separable && analytic {
        names.push(("cross_terms", true));
    }
    let t = c.t;
    let assemble = |axes: &[EulerAxis], extra: Option<(&PointJets, &[f64])>, pr: (Vec<Vec<f64>>, Vec<Vec<f64>>)| {
        let total: Vec<Vec<f64>> = axes.iter().map(|ax| ax.terms()).collect();
        let cross: Vec<Vec<f64>> = axes
            .iter()
            .map(|ax| {
                let mut terms = vec![0.0];
                for (j, p) in ax.per_body.iter().enumerate() {
                    if j != ax.body {
                        terms.extend_from_slice(p);
                    }
                }
                terms
            })
            .collect();
        let mut row = vec![pv(&total), pv(&pr.1), pv(&pr.0), pv(&cross)];
        if let (Some((fa, fb)), Some((_, x))) = (factors, extra) {
            let da = fa.config_dim();
            let mut r = factor_euler(fa, &x[..da], fb, &x[da..], t);
            r.extend(factor_euler(fb, &x[da..], fa, &x[..da], t));
            let comps: Vec<Vec<f64>> = axes.iter().zip(&r).map(|(ax, rf)| vec![ax.total(), -rf]).collect();
            row.push(pv(&comps));
        }
        row
    };
    let subs = match &c.fd {
        None => c.points(4, &names, |pj, x| assemble(&euler_point(pj), Some((pj, x)), pressure_rows(pj))),
        Some(g) => {
            let e = EulerArrays::new(g);
            let p = PressureArrays::new(g);
            c.rows(&names, |i| assemble(&e.at(i), None, p.at(i)))
        }
    };
    let mut out = Outcome::new(subs);
    if !(separable && analytic) {
        out.notes
            .push("cross terms are asserted only for product states with analytic provenance".into());
    }
    Ok(out)
}

fn euler_appendix(c: &Ctx) -> Result<Outcome> {
    need_real(c, "euler_appendix")?;
    let subs = euler_rows(c, 3, &[("static_euler", true)], |axes, _| {
        let comps: Vec<Vec<f64>> = axes
            .iter()
            .map(|ax| {
                let mut t = vec![ax.own[2]];
                for p in &ax.per_body {
                    t.extend_from_slice(&[p[1], p[3], p[4]]);
                }
                t
            })
            .collect();
        vec![pv(&comps)]
    });
    Ok(Outcome::new(subs))
}

fn pressure_gradient(c: &Ctx) -> Result<Outcome> {
    let names = [("pressure_gradient", true), ("energy_theta", true)];
    let subs = match &c.fd {
        None => c.points(3, &names, |pj, _| {
            let t = pj.t();
            let rho = pj.rho_value();
            let pv_all = jet::sum((0..pj.n_bodies).map(|j| pj.p_v_div(j))).expect("bodies");
            let grad: Vec<Vec<f64>> = (0..pj.config_dim())
                .map(|a| vec![pv_all.d_value(a).re, (&pj.rho * &pj.u(a, Sign::Minus)).d_value(t).re])
                .collect();
            let theta = [0.5 * pj.drho_dt().re_value() / rho, -pv_all.re_value() / rho];
            vec![pv(&grad), ps(&theta)]
        }),
        Some(g) => {
            let arrays = PressureArrays::new(g);
            let mut pv_all = vec![0.0; g.len()];
            for j in 0..g.n_bodies {
                for (x, y) in pv_all.iter_mut().zip(g.p_v_div(j)) {
                    *x += y;
                }
            }
            c.rows(&names, |i| {
                let (_, grad) = arrays.at(i);
                let theta = [0.5 * g.drho[i] / g.rho[i], -pv_all[i] / g.rho[i]];
                vec![pv(&grad), ps(&theta)]
            })
        }
    };
    Ok(Outcome::new(subs))
}

fn energy_gradients(c: &Ctx) -> Result<Outcome> {
    let names = [("grad_e_s", true), ("grad_e_theta", true)];
    let d = c.config_dim();
    let subs = match &c.fd {
        None => c.points(3, &names, |pj, _| {
            let t = pj.t();
            let mut es = vec![pj.potential.clone()];
            let mut et = Vec::new();
            for j in 0..pj.n_bodies {
                es.extend([pj.k_v(j), pj.k_u(j, Sign::Minus), pj.p_u(j).div(&pj.rho)]);
                et.push(pj.p_v_div(j).div(&pj.rho));
            }
            let parts = |fs: &[Jet], a: usize, rate: f64| {
                let mut terms: Vec<f64> = fs.iter().map(|f| f.d_value(a).re).collect();
                terms.push(rate);
                terms
            };
            let gs: Vec<Vec<f64>> = (0..d)
                .map(|a| parts(&es, a, pj.v(a).d_value(t).re))
                .collect();
            let gt: Vec<Vec<f64>> = (0..d)
                .map(|a| parts(&et, a, pj.u(a, Sign::Minus).d_value(t).re))
                .collect();
            vec![pv(&gs), pv(&gt)]
        }),
        Some(g) => {
            let es = energy_arrays(g, Sign::Minus, true);
            let et: Vec<Vec<f64>> = (0..g.n_bodies)
                .map(|j| {
                    let p = g.p_v_div(j);
                    g.pw(|i| p[i] / g.rho[i])
                })
                .collect();
            let log_rate = g.pw(|i| g.drho[i] / g.rho[i]);
            // [axis][part] derivatives, with the time-derivative term last
            let grads = |fs: &[Vec<f64>], rate: &[f64], k: f64| -> Vec<Vec<Vec<f64>>> {
                (0..d)
                    .map(|a| {
                        let mut v: Vec<Vec<f64>> = fs.iter().map(|f| g.d(f, a)).collect();
                        v.push(g.d(rate, a).into_iter().map(|x| k * x).collect());
                        v
                    })
                    .collect()
            };
            let ges = grads(&es, &g.ds, 1.0);
            let get = grads(&et, &log_rate, -0.5);
            c.rows(&names, |i| {
                let gs: Vec<Vec<f64>> = ges.iter().map(|p| at(p, i)).collect();
                let gt: Vec<Vec<f64>> = get.iter().map(|p| at(p, i)).collect();
                vec![pv(&gs), pv(&gt)]
            })
        }
    };
    Ok(Outcome::new(subs))
}

fn energy_fields(c: &Ctx) -> Result<Outcome> {
    let names = [("energy_fields", true)];
    let assemble = |kin: Complex64, u: f64, e_s: f64, e_t: f64| {
        vec![pv(&[vec![kin.re, u, -e_s], vec![kin.im, -e_t]])]
    };
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| {
            let psi = pj.psi.value();
            let lap: Complex64 = (0..pj.n_bodies).map(|b| pj.lap(&pj.psi, b).value()).sum();
            let rho = pj.rho_value();
            let kin = psi.conj() * lap * (-0.5) / rho;
            assemble(
                kin,
                pj.potential.re_value(),
                -pj.ds_dt().re_value(),
                0.5 * pj.drho_dt().re_value() / rho,
            )
        }),
        Some(g) => {
            let mut lap = vec![Complex64::new(0.0, 0.0); g.len()];
            for b in 0..g.n_bodies {
                for (x, y) in lap.iter_mut().zip(grid::laplacian(&g.psi, b)?.values()) {
                    *x += y;
                }
            }
            c.rows(&names, |i| {
                let kin = g.psi.values()[i].conj() * lap[i] * (-0.5) / g.rho[i];
                assemble(kin, g.pot[i], -g.ds[i], 0.5 * g.drho[i] / g.rho[i])
            })
        }
    };
    Ok(Outcome::new(subs))
}

fn pressure_complex(c: &Ctx) -> Result<Outcome> {
    let names = [("pressure_complex", true)];
    let assemble = |lhs: Complex64, p_v: f64, p_u: f64| vec![pv(&[vec![lhs.re, p_v], vec![lhs.im, -p_u]])];
    let d = c.config_dim();
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| {
            let cj = pj.psi.conj();
            let div = jet::sum((0..d).map(|a| (&cj * &pj.psi.d(a)).d(a))).expect("dims");
            let lhs = -Complex64::i() * div.value() * 0.5;
            let p_u: f64 = (0..pj.n_bodies).map(|b| pj.p_u(b).re_value()).sum();
            assemble(lhs, pj.p_v().re_value(), p_u)
        }),
        Some(g) => {
            let lhs = fields::pressure_complex_fd(&g.psi)?;
            let p_u: Vec<Vec<f64>> = (0..g.n_bodies).map(|b| g.p_u(b)).collect();
            c.rows(&names, |i| {
                let pu: f64 = p_u.iter().map(|p| p[i]).sum();
                assemble(lhs.values()[i], 0.5 * g.drho[i], pu)
            })
        }
    };
    Ok(Outcome::new(subs))
}

fn kinetic_decomposition(c: &Ctx) -> Result<Outcome> {
    let names = [("kinetic_decomposition", true), ("velocity_compatibility", false)];
    let sign = c.opts.sign;
    // momentum −i∇Ψ/Ψ, u and v per axis
    let assemble = |m: &[Complex64], u: &[f64], v: &[f64]| {
        let lhs = 0.5 * m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let ku = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
        let kv = 0.5 * v.iter().map(|x| x * x).sum::<f64>();
        let both = 0.5 * u.iter().zip(v).map(|(a, b)| (a + b) * (a + b)).sum::<f64>();
        vec![ps(&[lhs, -kv, -ku]), ps(&[both, -ku, -kv])]
    };
    let d = c.config_dim();
    let subs = match &c.fd {
        None => c.points(1, &names, |pj, _| {
            let psi = pj.psi.value();
            let m: Vec<Complex64> = (0..d).map(|a| -Complex64::i() * pj.psi.d_value(a) / psi).collect();
            let u: Vec<f64> = (0..d).map(|a| pj.u(a, sign).re_value()).collect();
            let v: Vec<f64> = (0..d).map(|a| pj.v(a).re_value()).collect();
            assemble(&m, &u, &v)
        }),
        Some(g) => {
            let grad = grid::gradient_all(&g.psi)?;
            let u: Vec<Vec<f64>> = (0..d).map(|a| g.u(a, sign)).collect();
            c.rows(&names, |i| {
                let psi = g.psi.values()[i];
                let m: Vec<Complex64> = grad.at(i).iter().map(|z| -Complex64::i() * z / psi).collect();
                assemble(&m, &at(&u, i), &at(&g.v, i))
            })
        }
    };
    Ok(Outcome::new(subs))
}

fn appendix_b(c: &Ctx) -> Result<Outcome> {
    let names = [("appendix_b", true)];
    let nb = c.n_bodies();
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| {
            let r = pj.rho.sqrt();
            let rho = pj.rho_value();
            let mut terms = Vec::new();
            for b in 0..nb {
                let g2: f64 = pj.axes(b).map(|a| pj.rho.d_value(a).re.powi(2)).sum();
                terms.push(-0.5 * r.re_value() * pj.lap(&r, b).re_value());
                terms.push(-0.125 * g2 / rho);
                terms.push(0.25 * pj.lap(&pj.rho, b).re_value());
            }
            vec![ps(&terms)]
        }),
        Some(g) => {
            let mut arrays = Vec::new();
            for b in 0..nb {
                let lr = g.lap(&g.r, b);
                arrays.push(g.pw(|i| -0.5 * g.r[i] * lr[i]));
                let grads: Vec<Vec<f64>> = g.axes(b).map(|a| g.d(&g.rho, a)).collect();
                arrays.push(g.pw(|i| -0.125 * grads.iter().map(|x| x[i] * x[i]).sum::<f64>() / g.rho[i]));
                arrays.push(g.lap(&g.rho, b).into_iter().map(|x| 0.25 * x).collect());
            }
            c.rows(&names, |i| vec![ps(&at(&arrays, i))])
        }
    };
    Ok(Outcome::new(subs))
}

fn appendix_c(c: &Ctx) -> Result<Outcome> {
    let names = [("u_from_psi", true), ("v_from_psi", true)];
    let sign = c.opts.sign;
    let s = sign.factor();
    let assemble = |ratio: &[Complex64], u: &[f64], v: &[f64]| {
        let cu: Vec<Vec<f64>> = ratio.iter().zip(u).map(|(z, x)| vec![*x, -s * z.re]).collect();
        let cv: Vec<Vec<f64>> = ratio.iter().zip(v).map(|(z, x)| vec![*x, -z.im]).collect();
        vec![pv(&cu), pv(&cv)]
    };
    let d = c.config_dim();
    let subs = match &c.fd {
        None => c.points(1, &names, |pj, _| {
            let psi = pj.psi.value();
            let ratio: Vec<Complex64> = (0..d).map(|a| pj.psi.d_value(a) / psi).collect();
            let u: Vec<f64> = (0..d).map(|a| pj.u(a, sign).re_value()).collect();
            let v: Vec<f64> = (0..d).map(|a| pj.v(a).re_value()).collect();
            assemble(&ratio, &u, &v)
        }),
        Some(g) => {
            let grad = grid::gradient_all(&g.psi)?;
            let u: Vec<Vec<f64>> = (0..d).map(|a| g.u(a, sign)).collect();
            c.rows(&names, |i| {
                let psi = g.psi.values()[i];
                let ratio: Vec<Complex64> = grad.at(i).iter().map(|z| z / psi).collect();
                assemble(&ratio, &at(&u, i), &at(&g.v, i))
            })
        }
    };
    Ok(Outcome::new(subs))
}

fn spin_mass_conservation(c: &Ctx) -> Result<Outcome> {
    if c.n_bodies() != 1 || c.state.dim_per_body() != 3 {
        return Err(Error::Precondition(format!(
            "spin velocity is defined for one body in 3D; `{}` has {} bodies of dimension {}",
            c.state.label(),
            c.n_bodies(),
            c.state.dim_per_body()
        )));
    }
    let names = [("spin_mass_conservation", true)];
    let k = 0.5 * c.opts.sign.factor();
    let renorm = c.opts.renormalize_spin_speed;
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, _| {
            let gx = pj.rho.d(0);
            let gy = pj.rho.d(1);
            let mut fx = gy.scale(k);
            let mut fy = gx.scale(-k);
            if renorm {
                let gz = pj.rho.d(2);
                let planar = &gx * &gx + &gy * &gy;
                let f = (&planar + &gz * &gz).sqrt().div(&planar.sqrt());
                fx = &fx * &f;
                fy = &fy * &f;
            }
            vec![ps(&[fx.d_value(0).re, fy.d_value(1).re])]
        }),
        Some(g) => {
            let rho = g.field(&g.rho);
            let w = fields::velocity_spin(&rho, c.opts.sign, renorm)?;
            let fx = g.pw(|i| g.rho[i] * w.at(i)[0]);
            let fy = g.pw(|i| g.rho[i] * w.at(i)[1]);
            let dx = g.d(&fx, 0);
            let dy = g.d(&fy, 1);
            c.rows(&names, |i| vec![ps(&[dx[i], dy[i]])])
        }
    };
    Ok(Outcome::new(subs))
}

fn conservation(c: &Ctx) -> Result<Outcome> {
    let terms: Vec<(Complex64, &AnalyticState, f64)> = match c.state.components() {
        Some(comps) => comps
            .iter()
            .map(|(coef, s)| {
                s.energy_if_eigen().map(|e| (*coef, s, e)).ok_or_else(|| {
                    Error::Precondition(format!("component `{}` is not an eigenstate", s.label()))
                })
            })
            .collect::<Result<_>>()?,
        None => vec![(Complex64::new(1.0, 0.0), c.state, c.energy("conservation")?)],
    };
    let t = c.t;
    // ρ(Ē_S + iĒ_θ) = Ψ*·Σ_k C_k ε_k φ_k e^{−iε_k t} with φ_k the t = 0 profile
    let closed = |x: &[f64]| {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut h_psi = Complex64::new(0.0, 0.0);
        for (coef, s, e) in &terms {
            let phase = Complex64::from_polar(1.0, -e * t);
            let z = coef * s.eval_psi(x, 0.0) * phase;
            psi += z;
            h_psi += z * *e;
        }
        psi.conj() * h_psi
    };
    let names = [
        ("s_closed_form", true),
        ("theta_closed_form", true),
        ("rho_e_s", false),
        ("rho_e_theta", false),
        ("rho", false),
    ];
    let nb = c.n_bodies();
    let assemble = |es_terms: Vec<f64>, pv_terms: Vec<f64>, z: Complex64, psi: Complex64, dpsi: Complex64| {
        let time = Complex64::i() * psi.conj() * dpsi;
        let mut s_terms = es_terms;
        s_terms.push(-z.re);
        let mut t_terms = pv_terms;
        t_terms.push(-z.im);
        vec![
            ps(&s_terms),
            ps(&t_terms),
            ps(&[time.re]),
            ps(&[time.im]),
            ps(&[psi.norm_sqr()]),
        ]
    };
    let subs = match &c.fd {
        None => c.points(2, &names, |pj, x| {
            let rho = pj.rho_value();
            let es: Vec<f64> = energy_terms(pj, Sign::Minus, true).into_iter().map(|e| e * rho).collect();
            let pvs: Vec<f64> = (0..nb).map(|j| pj.p_v_div(j).re_value()).collect();
            assemble(es, pvs, closed(x), pj.psi.value(), pj.psi.d_value(pj.t()))
        }),
        Some(g) => {
            let es = energy_arrays(g, Sign::Minus, true);
            let pvs: Vec<Vec<f64>> = (0..nb).map(|j| g.p_v_div(j)).collect();
            c.rows(&names, |i| {
                let rho = g.rho[i];
                let e: Vec<f64> = es.iter().map(|a| a[i] * rho).collect();
                let x = g.grid.point(i);
                assemble(e, at(&pvs, i), closed(&x), g.psi.values()[i], g.dpsi.values()[i])
            })
        }
    };
    let mut out = Outcome::new(subs);
    let e_avg: f64 = terms.iter().map(|(coef, _, e)| coef.norm_sqr() * e).sum();
    for (name, k, expected) in [("e_s_average", 2, e_avg), ("e_theta_average", 3, 0.0), ("norm", 4, 1.0)] {
        let i = c.integrate(out.subs[k].values());
        out.globals.push(with_warnings(
            GlobalCheck::new(name, i.value, expected, c.global_tolerance(expected)),
            &i.warnings,
        ));
    }
    Ok(out)
}
