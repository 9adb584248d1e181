//! Acceptance criteria. Each one prints a single PASS/FAIL line with its
//! measured values and wall time; the binary exits non-zero if any fails.

use num_complex::Complex64;
use qfluid::dynamics::{
    conservation_experiment, integrate_trajectory, mass_flux_along, velocity_at, TrajectoryOptions, VelocityKind,
};
use qfluid::fields::Provenance;
use qfluid::grid::{Axis, Centering, Grid};
use qfluid::residuals::{convergence, convergence_study, run_check, CheckOptions, ResidualReport};
use qfluid::states::{harmonic, superpose, AnalyticState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

const SUPER: &str = "superpose:[1/sqrt(2)*box:k=1; 1/sqrt(2)*box:k=2]";
const CORRUPT_1S: &str = "corrupt:[delta=1e-3,sigma=0.5,at=(1,0,0); hydrogen_1s]";
const CORRUPT_SUPER: &str = "corrupt:[delta=1e-3,sigma=0.3,at=1.2; superpose:[1/sqrt(2)*box:k=1; 1/sqrt(2)*box:k=2]]";

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn state(label: &str) -> AnalyticState {
    AnalyticState::from_label(label).unwrap_or_else(|e| panic!("{label}: {e}"))
}

fn radial(r_min: f64) -> Arc<Grid> {
    Arc::new(Grid::radial_log(400, r_min, 40.0).unwrap())
}

fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::cartesian(vec![Axis::cell_centered(lo, hi, n)], 1).unwrap())
}

fn analytic(tolerance: Option<f64>) -> CheckOptions {
    CheckOptions {
        tolerance,
        ..Default::default()
    }
}

fn grid_provenance() -> CheckOptions {
    CheckOptions {
        provenance: Provenance::Grid,
        ..Default::default()
    }
}

fn check(id: &str, s: &AnalyticState, g: &Arc<Grid>, t: f64, opts: &CheckOptions) -> Result<ResidualReport, String> {
    run_check(id, s, g, t, opts).map_err(|e| format!("{id} on {}: {e}", s.label()))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Box eigenvalue on [0, π]: k²/2.
fn box_energy(k: u32) -> f64 {
    0.5 * (k * k) as f64
}

fn c1_hydrogen_speed() -> Outcome {
    let s = state("hydrogen_1s");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = TrajectoryOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        // Beyond r ≈ 13.8 the density falls under the node threshold.
        let r = rng.gen_range(1e-3..12.0);
        let cos_t: f64 = rng.gen_range(-1.0..1.0);
        let phi = rng.gen_range(0.0..2.0 * PI);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let x = [r * sin_t * phi.cos(), r * sin_t * phi.sin(), r * cos_t];
        let u = velocity_at(&s, VelocityKind::UMinus, &x, 0.0, &opts).map_err(|e| e.to_string())?;
        let speed = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        worst = worst.max((speed - 1.0).abs());
    }
    ensure(worst < 1e-10, || format!("max ||u-| - 1| = {worst:.3e}"))?;
    Ok(format!("max ||u-| - 1| = {worst:.3e} over 1000 radii"))
}

fn c2_bernoulli() -> Outcome {
    let mut parts = Vec::new();
    let g = radial(1e-6);
    for label in ["hydrogen_1s", "hydrogen_2s"] {
        let r = check("bernoulli", &state(label), &g, 0.0, &analytic(Some(1e-8)))?;
        ensure(r.passed && r.residual_linf < 1e-8, || {
            format!("{label} analytic linf = {:.3e}", r.residual_linf)
        })?;
        parts.push(format!("{label} analytic {:.1e}", r.residual_linf));
    }
    // The margin scales with n so every grid is measured on the same region.
    let ns = [9, 17, 33, 65];
    for label in ["hydrogen_1s", "hydrogen_2s"] {
        let s = state(label);
        let mut h = Vec::new();
        let mut e = Vec::new();
        for n in ns {
            let g = Arc::new(Grid::cartesian_box(&[0.5, -0.5, -0.5], &[1.5, 0.5, 0.5], &[n; 3], Centering::Vertex).unwrap());
            let opts = CheckOptions {
                boundary_margin: 2 * (n - 1) / (ns[0] - 1),
                ..grid_provenance()
            };
            h.push(g.max_spacing());
            e.push(check("bernoulli", &s, &g, 0.0, &opts)?.residual_linf);
        }
        let conv = convergence(&h, &e);
        let min = conv.ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(min >= 3.5, || format!("{label} grid ratios {:?}", conv.ratios))?;
        parts.push(format!("{label} grid ratio min {min:.2}"));
    }
    Ok(parts.join(", "))
}

fn c3_pressure_neutrality() -> Outcome {
    let mut worst = 0.0f64;
    let cases: Vec<(String, Arc<Grid>)> = vec![
        ("hydrogen_1s".into(), radial(1e-6)),
        ("hydrogen_2s".into(), radial(1e-6)),
        ("box:k=1".into(), line(0.0, PI, 512)),
        ("box:k=2".into(), line(0.0, PI, 512)),
        ("box:k=3".into(), line(0.0, PI, 512)),
    ];
    for (label, g) in &cases {
        let r = check("ke_expectation", &state(label), g, 0.0, &analytic(None))?;
        let p = r.global("pressure_integral.0").ok_or("no pressure integral")?;
        ensure(p.value.abs() < 1e-8, || format!("{label}: ∫P_u = {:.3e}", p.value))?;
        worst = worst.max(p.value.abs());
    }
    Ok(format!("max |∫P_u| = {worst:.3e}"))
}

fn c4_kinetic_energy() -> Outcome {
    let mut cases: Vec<(String, Arc<Grid>, f64)> = vec![("hydrogen_1s".into(), radial(1e-6), 0.5)];
    for k in 1..=3 {
        cases.push((format!("box:k={k}"), line(0.0, PI, 512), box_energy(k)));
    }
    let mut worst = 0.0f64;
    for (label, g, expected) in &cases {
        let r = check("ke_expectation", &state(label), g, 0.0, &analytic(None))?;
        let k = r.global("kinetic_routes").ok_or("no kinetic_routes")?;
        // value: −½∫R∇²R, expected: ∫ρ·½u²
        let rel = ((k.value - k.expected) / k.expected).abs();
        let rel_oracle = ((k.expected - expected) / expected).abs();
        ensure(rel < 1e-6 && rel_oracle < 1e-6, || {
            format!("{label}: routes {:.12} vs {:.12}, oracle {expected}", k.value, k.expected)
        })?;
        worst = worst.max(rel).max(rel_oracle);
    }
    Ok(format!("max relative difference {worst:.3e}"))
}

fn c5_quantum_potential() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * PI));
    let b = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * PI));
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let two_mode = superpose(
        vec![harmonic(0, 1.0).unwrap(), harmonic(1, 1.0).unwrap()],
        vec![a / n, b / n],
    )
    .map_err(|e| e.to_string())?;
    let coulomb = radial(1e-3);
    let axis = line(-6.0, 6.0, 241);
    let cases = [
        (state("hydrogen_1s"), &coulomb),
        (state("hydrogen_2s"), &coulomb),
        (state("harmonic:n=0"), &axis),
        (two_mode, &axis),
    ];
    let mut worst = 0.0f64;
    for (s, g) in &cases {
        for t in [0.0, 0.3] {
            let r = check("quantum_potential", s, g, t, &analytic(Some(1e-10)))?;
            ensure(r.passed, || format!("{} t={t}: linf = {:.3e}", s.label(), r.residual_linf))?;
            worst = worst.max(r.residual_linf);
        }
    }
    Ok(format!("max |Q - K_u - P_u/ρ| = {worst:.3e}"))
}

fn c6_conservation() -> Outcome {
    let comps = [state("box:k=1"), state("box:k=2")];
    let c = Complex64::new(0.5f64.sqrt(), 0.0);
    let t_end = 4.0 * PI / (box_energy(2) - box_energy(1));
    let times: Vec<f64> = (0..50).map(|k| t_end * k as f64 / 49.0).collect();
    let series = conservation_experiment(&comps, &[c, c], &line(0.0, PI, 512), &times).map_err(|e| e.to_string())?;
    let expected = 0.5 * (box_energy(1) + box_energy(2));
    let mean_dev = series.e_s_avg.iter().fold(0.0f64, |m, e| m.max((e - expected).abs()));
    let std = series.e_s_std();
    let theta = series.max_abs_e_theta();
    ensure(mean_dev < 1e-8 && std < 1e-8 && theta < 1e-8, || {
        format!("|Ē_S - 1.25| {mean_dev:.3e}, std {std:.3e}, max |Ē_θ| {theta:.3e}")
    })?;

    let grids: Vec<Arc<Grid>> = [40, 80, 160, 320].iter().map(|&n| line(0.3, PI - 0.3, n)).collect();
    let (_, conv) = convergence_study("conservation", &state(SUPER), &grids, 0.7, &grid_provenance())
        .map_err(|e| e.to_string())?;
    ensure(conv.order >= 1.8, || format!("closed-form order {:.3}", conv.order))?;
    Ok(format!(
        "|Ē_S - 1.25| {mean_dev:.1e}, std {std:.1e}, max |Ē_θ| {theta:.1e}, closed-form order {:.2}",
        conv.order
    ))
}

fn euler_order(label: &str) -> Result<f64, String> {
    let grids: Vec<Arc<Grid>> = [40, 80, 160, 320].iter().map(|&n| line(0.3, PI - 0.3, n)).collect();
    let (_, conv) = convergence_study("euler_one_body", &state(label), &grids, 0.3, &grid_provenance())
        .map_err(|e| e.to_string())?;
    Ok(conv.order)
}

fn c7_euler() -> Outcome {
    let order = euler_order(SUPER)?;
    ensure(order >= 1.8, || format!("fitted order {order:.3}"))?;

    let g = Arc::new(Grid::cartesian(vec![Axis::cell_centered(0.0, PI, 24), Axis::cell_centered(0.0, PI, 24)], 1).unwrap());
    let r = check("euler_n_body", &state(&format!("product:[{SUPER}; box:k=3]")), &g, 0.4, &analytic(None))?;
    let cross = r.residual("cross_terms").ok_or("no cross_terms")?;
    ensure(r.passed && cross.norms.linf < 1e-10, || {
        format!("two-body linf {:.3e}, cross terms {:.3e}", r.residual_linf, cross.norms.linf)
    })?;
    let single = line(0.0, PI, 24);
    for label in [SUPER, "box:k=3"] {
        let one = check("euler_one_body", &state(label), &single, 0.4, &analytic(None))?;
        ensure(one.passed, || format!("{label}: one-body linf {:.3e}", one.residual_linf))?;
    }
    Ok(format!("fitted order {order:.2}, cross terms {:.1e}", cross.norms.linf))
}

fn c8_spin_orbits() -> Outcome {
    // Orbit speed ½|ρ'/ρ| at r = 1: 1 for 1s, and for 2s (ρ ∝ (2−r)²e^{−r})
    // ½|−2/(2−r) − 1| = 3/2.
    let mut parts = Vec::new();
    for (label, speed) in [("hydrogen_1s", 1.0), ("hydrogen_2s", 1.5)] {
        let s = state(label);
        let n = 2000;
        let period = 2.0 * PI / speed;
        let opts = TrajectoryOptions::default();
        let tr = integrate_trajectory(&s, &[1.0, 0.0, 0.0], VelocityKind::USpin, period / n as f64, n, &opts)
            .map_err(|e| e.to_string())?;
        let flux = mass_flux_along(&tr, &s, &opts).map_err(|e| e.to_string())?;
        let drift = tr.radii().iter().fold(0.0f64, |m, r| m.max((r - 1.0).abs()));
        let div = flux.div_flux.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let speed_err = tr.speed.iter().fold(0.0f64, |m, v| m.max((v - speed).abs()));
        ensure(tr.len() == n + 1 && drift < 1e-8 && div < 1e-8 && speed_err < 1e-8, || {
            format!("{label}: {} points, drift {drift:.3e}, max |div| {div:.3e}, speed error {speed_err:.3e}", tr.len())
        })?;
        parts.push(format!("{label} drift {drift:.1e} div {div:.1e}"));
    }
    Ok(parts.join(", "))
}

fn c9_appendix() -> Outcome {
    let g = Arc::new(Grid::cartesian_box(&[-1.0; 3], &[1.0; 3], &[9; 3], Centering::Vertex).unwrap());
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let s = state(&format!("smooth:seed={seed}"));
        for id in ["appendix_b", "appendix_c"] {
            let r = check(id, &s, &g, 0.0, &analytic(Some(1e-10)))?;
            ensure(r.passed, || format!("{id} seed {seed}: linf {:.3e}", r.residual_linf))?;
            worst = worst.max(r.residual_linf);
        }
    }
    Ok(format!("max residual {worst:.3e} over 20 functions"))
}

fn c10_sensitivity() -> Outcome {
    let r = check("bernoulli", &state(CORRUPT_1S), &radial(1e-6), 0.0, &analytic(Some(1e-8)))?;
    ensure(!r.passed, || format!("corrupted 1s passed bernoulli (linf {:.3e})", r.residual_linf))?;
    let order = euler_order(CORRUPT_SUPER)?;
    ensure(order < 1.8, || format!("corrupted superposition still converges at order {order:.3}"))?;
    Ok(format!(
        "corrupted bernoulli linf {:.3e} (fails), corrupted Euler order {order:.2} (fails)",
        r.residual_linf
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 hydrogen 1s speed", 1, c1_hydrogen_speed),
        ("2 bernoulli residual", 10, c2_bernoulli),
        ("3 pressure neutrality", 2, c3_pressure_neutrality),
        ("4 kinetic-energy equality", 2, c4_kinetic_energy),
        ("5 quantum-potential decomposition", 2, c5_quantum_potential),
        ("6 conservation", 10, c6_conservation),
        ("7 euler residual", 60, c7_euler),
        ("8 spin-velocity mass conservation", 5, c8_spin_orbits),
        ("9 appendix identities", 2, c9_appendix),
        ("10 sensitivity", 10, c10_sensitivity),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed > Duration::from_secs(budget) {
                Err(format!("{msg}; over the {budget} s budget"))
            } else {
                Ok(msg)
            }
        });
        let (status, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("criterion {name}: {status} ({:.2} s) {msg}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
