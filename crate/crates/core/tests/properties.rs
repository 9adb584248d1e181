use num_complex::Complex64;
use proptest::prelude::*;
use qfluid::dynamics::{
    conservation_experiment, integrate_trajectory, velocity_at, TrajectoryOptions, VelocityKind,
};
use qfluid::fields::Provenance;
use qfluid::grid::{Axis, Grid};
use qfluid::residuals::{run_check, CheckOptions};
use qfluid::states::{catalog_box_1d, superpose, AnalyticState};
use std::f64::consts::PI;
use std::sync::Arc;

fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::cartesian(vec![Axis::cell_centered(lo, hi, n)], 1).unwrap())
}

fn state(label: &str) -> AnalyticState {
    AnalyticState::from_label(label).unwrap()
}

fn coefficients(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.1f64..1.0, 0.0f64..2.0 * PI), 1..=max).prop_map(|v| {
        let norm = v.iter().map(|(a, _)| a * a).sum::<f64>().sqrt();
        v.into_iter().map(|(a, p)| Complex64::from_polar(a / norm, p)).collect()
    })
}

fn point3() -> impl Strategy<Value = Vec<f64>> {
    (0.05f64..10.0, -1.0f64..1.0, 0.0f64..2.0 * PI).prop_map(|(r, c, phi)| {
        let s = (1.0 - c * c).sqrt();
        vec![r * s * phi.cos(), r * s * phi.sin(), r * c]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn residual_norms_are_consistent(seed in 0u64..1000, t in 0.0f64..1.0) {
        let g = Arc::new(Grid::radial_log(120, 1e-3, 6.0).unwrap());
        let r = run_check("appendix_c", &state(&format!("smooth:seed={seed}")), &g, t, &CheckOptions::default()).unwrap();
        for res in &r.residuals {
            let n = res.norms;
            prop_assert!(n.l2 <= n.linf * (n.points as f64).sqrt() * (1.0 + 1e-12) + 1e-300);
            prop_assert!(n.linf <= n.l2 + 1e-300);
        }
        prop_assert!(r.passed);
    }

    #[test]
    fn superposition_energy_is_conserved(coeffs in coefficients(4)) {
        let modes: Vec<AnalyticState> = (1..=coeffs.len() as u32).map(|k| catalog_box_1d(k, PI).unwrap()).collect();
        let times: Vec<f64> = (0..8).map(|k| 0.37 * k as f64).collect();
        let s = conservation_experiment(&modes, &coeffs, &line(0.0, PI, 256), &times).unwrap();
        // Oracle: Σ|C_k|² k²/2.
        let expected: f64 = coeffs.iter().enumerate().map(|(k, c)| c.norm_sqr() * 0.5 * ((k + 1) * (k + 1)) as f64).sum();
        prop_assert!(s.e_s_std() < 1e-8);
        prop_assert!(s.max_abs_e_theta() < 1e-8);
        prop_assert!(s.e_s_avg.iter().all(|e| (e - expected).abs() < 1e-8));
    }

    #[test]
    fn euler_residual_does_not_depend_on_the_split(a in 0.0f64..1.0, t in 0.0f64..2.0) {
        let s = superpose(
            vec![catalog_box_1d(1, PI).unwrap(), catalog_box_1d(2, PI).unwrap()],
            vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
        ).unwrap();
        let g = line(0.2, PI - 0.2, 48);
        let run = |split_a| run_check("euler_one_body", &s, &g, t, &CheckOptions { split_a, ..Default::default() }).unwrap();
        let base = run(0.5);
        let other = run(a);
        prop_assert!(base.passed && other.passed);
        prop_assert!((base.residual_linf - other.residual_linf).abs() < 1e-12);
    }

    #[test]
    fn velocity_branches_are_opposite(x in point3()) {
        let s = state("hydrogen_2s");
        let opts = TrajectoryOptions::default();
        let minus = velocity_at(&s, VelocityKind::UMinus, &x, 0.0, &opts);
        let plus = velocity_at(&s, VelocityKind::UPlus, &x, 0.0, &opts);
        if let (Ok(m), Ok(p)) = (minus, plus) {
            for (a, b) in m.iter().zip(&p) {
                prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn spin_flow_keeps_the_orbit_radius(x in point3()) {
        let s = state("hydrogen_1s");
        let r0 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rho0 = x[0].hypot(x[1]);
        prop_assume!(rho0 > 0.1);
        // Unit speed on a circle of radius rho0: fix the angle per step at 0.01.
        let tr = integrate_trajectory(&s, &x, VelocityKind::USpin, 0.01 * rho0, 200, &TrajectoryOptions::default()).unwrap();
        for p in &tr.points {
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((r - r0).abs() < 1e-9 * r0.max(1.0));
            prop_assert!((p[2] - x[2]).abs() < 1e-12);
        }
        prop_assert!(tr.div_flux.iter().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn grid_residuals_shrink_at_second_order(t in 0.2f64..1.0) {
        // Equal-weight box superposition; its only interior node is at t = 0.
        let s = state("superpose:[1/sqrt(2)*box:k=1; 1/sqrt(2)*box:k=2]");
        let opts = CheckOptions { provenance: Provenance::Grid, ..Default::default() };
        let coarse = run_check("continuity", &s, &line(0.3, PI - 0.3, 100), t, &opts).unwrap();
        let fine = run_check("continuity", &s, &line(0.3, PI - 0.3, 200), t, &opts).unwrap();
        let ratio = coarse.residual_linf / fine.residual_linf;
        prop_assert!(ratio > 3.0 && ratio < 5.0, "ratio {}", ratio);
    }
}

#[test]
fn spin_flow_keeps_a_tight_orbit() {
    let s = state("hydrogen_1s");
    let r0 = 0.22186494856242223;
    let tr = integrate_trajectory(&s, &[r0, 0.0, 0.0], VelocityKind::USpin, 0.01 * r0, 200, &TrajectoryOptions::default()).unwrap();
    assert!(tr.radii().iter().all(|r| (r - r0).abs() < 1e-9));
}
