use super::*;
use crate::grid::{integrate, Axis, Grid, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn labels() -> Vec<&'static str> {
    vec![
        "hydrogen_1s",
        "hydrogen_2s",
        "hydrogen_3s",
        "hydrogen_2p:m=1",
        "hydrogen_2p:m=0",
        "box:k=3,L=2",
        "harmonic:n=3,omega=1.5",
        "ring:j=2,L=5",
        "packet:k=1.5,sigma=0.7,x0=0.2",
        "superpose:[0.6*box:k=1,L=pi; (0,0.8)*box:k=2,L=pi]",
        "product:[harmonic:n=1; harmonic:n=2]",
    ]
}

fn random_point(state: &AnalyticState, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..state.config_dim())
        .map(|a| {
            let (lo, hi) = (state.domain().lower[a], state.domain().upper[a]);
            if lo.is_finite() && hi.is_finite() {
                rng.gen_range(lo + 0.05 * (hi - lo)..hi - 0.05 * (hi - lo))
            } else {
                rng.gen_range(-2.5..2.5)
            }
        })
        .collect()
}

#[test]
fn hydrogen_1s_reference_values() {
    let s = catalog_hydrogen_ns(1).unwrap();
    let rho0 = s.eval_psi(&[1e-12, 0.0, 0.0], 0.0).norm_sqr();
    assert!((rho0 - 1.0 / PI).abs() < 1e-11);
    assert_eq!(s.energy_if_eigen(), Some(-0.5));
    assert_eq!(catalog_hydrogen_ns(2).unwrap().energy_if_eigen(), Some(-0.125));
    assert!(matches!(catalog_hydrogen_ns(4), Err(Error::UnsupportedState(_))));
    let v = s.potential_u(&[0.0, 2.0, 0.0]);
    assert!((v + 0.5).abs() < 1e-15);
}

#[test]
fn box_energies() {
    let e1 = catalog_box_1d(1, PI).unwrap().energy_if_eigen().unwrap();
    let e2 = catalog_box_1d(2, PI).unwrap().energy_if_eigen().unwrap();
    assert!((e1 - 0.5).abs() < 1e-15);
    assert!((e2 - 2.0).abs() < 1e-15);
    assert!(catalog_box_1d(0, PI).is_err());
    assert!(catalog_box_1d(1, -1.0).is_err());
}

#[test]
fn eigenstates_satisfy_i_dpsi_dt_equals_e_psi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for label in labels() {
        let s = AnalyticState::from_label(label).unwrap();
        let Some(e) = s.energy_if_eigen() else { continue };
        for _ in 0..20 {
            let x = random_point(&s, &mut rng);
            let t = rng.gen_range(0.0..3.0);
            let (psi, dt) = s.eval_psi_dt(&x, t);
            let lhs = Complex64::new(0.0, 1.0) * dt;
            assert!((lhs - psi * e).norm() <= 1e-12 * psi.norm().max(1e-12), "{label}");
        }
    }
}

#[test]
fn exact_states_solve_the_schrodinger_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for label in labels() {
        let s = AnalyticState::from_label(label).unwrap();
        assert!(s.is_exact_solution());
        for _ in 0..20 {
            let x = random_point(&s, &mut rng);
            let t = rng.gen_range(0.0..3.0);
            let psi = s.eval_psi(&x, t);
            let lap: Complex64 = s.eval_lap_psi(&x, t).into_iter().sum();
            let h_psi = -0.5 * lap + s.potential_u(&x) * psi;
            let i_dt = Complex64::new(0.0, 1.0) * s.eval_dpsi_dt(&x, t);
            let scale = psi.norm() + lap.norm();
            assert!((i_dt - h_psi).norm() <= 1e-11 * scale, "{label} at {x:?}");
        }
    }
}

#[test]
fn analytic_derivatives_match_central_differences_at_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for label in labels().into_iter().chain(["smooth:seed=4,dim=3", "plane_gaussian:k=2"]) {
        let s = AnalyticState::from_label(label).unwrap();
        let x = random_point(&s, &mut rng);
        let t = 0.4;
        let d = s.config_dim();
        let err = |h: f64| {
            let grad = s.eval_grad_psi(&x, t);
            let lap: Complex64 = s.eval_lap_psi(&x, t).into_iter().sum();
            let mut e: f64 = 0.0;
            let mut fd_lap = Complex64::new(0.0, 0.0);
            let f0 = s.eval_psi(&x, t);
            for a in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += h;
                xm[a] -= h;
                let (fp, fm) = (s.eval_psi(&xp, t), s.eval_psi(&xm, t));
                e = e.max(((fp - fm) / (2.0 * h) - grad[a]).norm());
                fd_lap += (fp - 2.0 * f0 + fm) / (h * h);
            }
            e.max((fd_lap - lap).norm())
        };
        let (e1, e2) = (err(2e-2), err(1e-2));
        assert!(e1 / e2 >= 3.5, "{label}: {e1:e} -> {e2:e}");
    }
}

fn norm_1d(s: &AnalyticState, lo: f64, hi: f64, t: f64) -> f64 {
    let g = std::sync::Arc::new(Grid::cartesian(vec![Axis::vertex(lo, hi, 4001)], 1).unwrap());
    let rho = ScalarField::from_fn(g, "", |p| s.eval_psi(p, t).norm_sqr());
    integrate(&rho).value
}

#[test]
fn catalog_states_are_normalized() {
    for n in 1..=3 {
        let s = catalog_hydrogen_ns(n).unwrap();
        let g = std::sync::Arc::new(Grid::radial_log(800, 1e-6, 80.0).unwrap());
        let rho = ScalarField::from_fn(g, "", |p| s.eval_psi(p, 0.0).norm_sqr());
        let v = integrate(&rho).value;
        assert!((v - 1.0).abs() < 1e-8, "hydrogen n={n}: {v}");
    }
    for (label, lo, hi) in [
        ("box:k=3,L=2", 0.0, 2.0),
        ("harmonic:n=4,omega=0.8", -12.0, 12.0),
        ("ring:j=2,L=5", 0.0, 5.0),
        ("packet:k=1,sigma=0.5", -15.0, 15.0),
        ("plane_gaussian:k=1,sigma=0.5", -10.0, 10.0),
    ] {
        let s = AnalyticState::from_label(label).unwrap();
        let v = norm_1d(&s, lo, hi, 0.9);
        assert!((v - 1.0).abs() < 1e-6, "{label}: {v}");
    }
}

#[test]
fn box_modes_are_orthogonal() {
    let a = catalog_box_1d(1, PI).unwrap();
    let b = catalog_box_1d(2, PI).unwrap();
    let g = std::sync::Arc::new(Grid::cartesian(vec![Axis::vertex(0.0, PI, 2001)], 1).unwrap());
    let f = ScalarField::from_fn(g, "", |p| (a.eval_psi(p, 0.0) * b.eval_psi(p, 0.0)).re);
    assert!(integrate(&f).value.abs() < 1e-10);
}

#[test]
fn superposition_preserves_norm_and_carries_cross_term() {
    let c = 0.5f64.sqrt();
    let a = catalog_box_1d(1, PI).unwrap();
    let b = catalog_box_1d(2, PI).unwrap();
    let s = superpose(vec![a.clone(), b.clone()], vec![Complex64::new(c, 0.0); 2]).unwrap();
    for t in [0.0, 0.7, 1.9] {
        assert!((norm_1d(&s, 0.0, PI, t) - 1.0).abs() < 1e-6);
        let x = 1.1;
        let (p1, p2) = (a.eval_psi(&[x], 0.0).re, b.eval_psi(&[x], 0.0).re);
        let expected = 0.5 * p1 * p1 + 0.5 * p2 * p2 + 0.5 * p1 * p2 * 2.0 * (1.5 * t).cos();
        assert!((s.eval_psi(&[x], t).norm_sqr() - expected).abs() < 1e-14);
    }
    // degenerate superposition is the first eigenstate
    let one = superpose(vec![a.clone(), b], vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
    assert!((one.eval_psi(&[0.8], 0.3) - a.eval_psi(&[0.8], 0.3)).norm() < 1e-15);
}

#[test]
fn packet_starts_as_plane_gaussian() {
    let p = gaussian_packet(1.3, 0.6, 0.4).unwrap();
    let g = plane_gaussian(1.3, 0.6, 0.4).unwrap();
    for x in [-1.0, 0.0, 0.4, 2.0] {
        assert!((p.eval_psi(&[x], 0.0) - g.eval_psi(&[x], 0.0)).norm() < 1e-14);
    }
}

#[test]
fn smooth_states_are_deterministic_and_nonvanishing() {
    let a = smooth_random(7, 3, true).unwrap();
    let b = smooth_random(7, 3, true).unwrap();
    let x = [0.3, -0.2, 0.5];
    assert_eq!(a.eval_psi(&x, 0.0), b.eval_psi(&x, 0.0));
    let r = smooth_random(7, 3, false).unwrap();
    assert!(r.eval_psi(&x, 0.0).im == 0.0 && r.eval_psi(&x, 0.0).re > 0.0);
}

#[test]
fn domain_wrap_and_contains() {
    let s = ring(1, 2.0).unwrap();
    let mut x = [5.5];
    s.domain().wrap(&mut x);
    assert!((x[0] - 1.5).abs() < 1e-15);
    let b = catalog_box_1d(1, 1.0).unwrap();
    assert!(b.domain().contains(&[0.5]) && !b.domain().contains(&[1.5]));
}
