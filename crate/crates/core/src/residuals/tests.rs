use super::*;
use crate::grid::Axis;
use std::f64::consts::PI;

const SUPER: &str = "superpose:[1/sqrt(2)*box:k=1; 1/sqrt(2)*box:k=2]";

fn state(label: &str) -> AnalyticState {
    AnalyticState::from_label(label).unwrap()
}

fn radial() -> Arc<Grid> {
    Arc::new(Grid::radial_log(400, 1e-6, 40.0).unwrap())
}

fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
    Arc::new(Grid::cartesian(vec![Axis::cell_centered(lo, hi, n)], 1).unwrap())
}

fn run(id: &str, s: &AnalyticState, g: &Arc<Grid>, t: f64) -> ResidualReport {
    run_check(id, s, g, t, &CheckOptions::default()).unwrap()
}

fn assert_passes(id: &str, label: &str, g: &Arc<Grid>, t: f64) {
    let r = run(id, &state(label), g, t);
    assert!(
        r.passed,
        "{id} on {label}: {}",
        serde_json::to_string_pretty(&r).unwrap()
    );
}

#[test]
fn registry_ids_are_unique_and_resolvable() {
    let mut ids: Vec<&str> = CHECKS.iter().map(|c| c.id).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), CHECKS.len());
    assert_eq!(check_info("bernoulli").unwrap().label, "p2574");
    assert_eq!(check_info("euler_n_body").unwrap().label, "8888d");
    assert!(matches!(check_info("nope"), Err(Error::UnknownCheck(_))));
}

#[test]
fn hydrogen_ground_state_passes_every_applicable_check() {
    let g = radial();
    for id in [
        "bernoulli",
        "stationary_energy",
        "hamilton_jacobi",
        "quantum_potential",
        "kinetic_integrand",
        "ke_expectation",
        "continuity",
        "u_continuity",
        "laplace_special",
        "euler_one_body",
        "euler_appendix",
        "pressure_relation",
        "pressure_gradient",
        "energy_gradients",
        "energy_fields",
        "pressure_complex",
        "kinetic_decomposition",
        "appendix_b",
        "appendix_c",
        "spin_mass_conservation",
        "conservation",
    ] {
        assert_passes(id, "hydrogen_1s", &g, 0.0);
    }
}

#[test]
fn box_superposition_passes_dynamic_checks() {
    let g = line(0.0, PI, 200);
    for id in [
        "hamilton_jacobi",
        "continuity",
        "u_continuity",
        "euler_one_body",
        "euler_n_body",
        "pressure_relation",
        "pressure_gradient",
        "energy_gradients",
        "energy_fields",
        "pressure_complex",
        "kinetic_decomposition",
        "appendix_b",
        "appendix_c",
        "conservation",
    ] {
        assert_passes(id, SUPER, &g, 0.3);
    }
}

#[test]
fn free_packet_passes_dynamic_checks() {
    let g = line(-8.0, 8.0, 161);
    for id in [
        "hamilton_jacobi",
        "continuity",
        "euler_one_body",
        "pressure_relation",
        "energy_gradients",
        "energy_fields",
    ] {
        assert_passes(id, "packet:k=1.5,sigma=1", &g, 0.7);
    }
}

#[test]
fn identities_hold_for_non_solutions() {
    let g = Arc::new(Grid::cartesian_box(&[-1.0; 3], &[1.0; 3], &[9; 3], crate::grid::Centering::Cell).unwrap());
    for id in [
        "quantum_potential",
        "kinetic_integrand",
        "u_continuity",
        "kinetic_decomposition",
        "appendix_b",
        "appendix_c",
        "spin_mass_conservation",
    ] {
        assert_passes(id, "smooth:seed=3", &g, 0.0);
    }
}

#[test]
fn corrupted_state_fails_bernoulli() {
    let g = radial();
    let r = run("bernoulli", &state("corrupt:[delta=1e-3,sigma=0.5,at=(1,0,0); hydrogen_1s]"), &g, 0.0);
    assert!(!r.passed);
    assert!(r.residual_linf > 1e-5, "{}", r.residual_linf);
}

#[test]
fn bernoulli_rejects_complex_states() {
    let g = line(0.0, 2.0 * PI, 64);
    let err = run_check("bernoulli", &state("ring:j=1"), &g, 0.0, &CheckOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
    assert_passes("stationary_energy", "ring:j=1", &g, 0.0);
}

#[test]
fn energy_override_is_used() {
    let g = radial();
    let opts = CheckOptions {
        energy: Some(-0.4),
        ..Default::default()
    };
    let r = run_check("bernoulli", &state("hydrogen_1s"), &g, 0.0, &opts).unwrap();
    assert!(!r.passed);
    assert!((r.residual_linf - 0.1).abs() < 1e-8);
}

#[test]
fn laplace_special_cases() {
    let g = Arc::new(
        Grid::cartesian_box(&[0.5, -0.5, -0.5], &[1.5, 0.5, 0.5], &[9; 3], crate::grid::Centering::Vertex).unwrap(),
    );
    let r = run("laplace_special", &state("hydrogen_2p:m=1"), &g, 0.0);
    assert!(r.passed);
    assert_eq!(r.residual("laplacian_s").unwrap().passed, Some(true));

    let r = run("laplace_special", &state("packet:k=1,sigma=1"), &line(-6.0, 6.0, 121), 0.5);
    assert!(!r.passed);
    assert!(!r.precondition.as_ref().unwrap().passed);
    assert!(r.residuals.iter().all(|s| !s.asserted));
}

#[test]
fn separable_two_body_euler_decouples() {
    let g = Arc::new(
        Grid::cartesian(vec![Axis::cell_centered(0.0, PI, 24), Axis::cell_centered(0.0, PI, 24)], 1).unwrap(),
    );
    let label = format!("product:[{SUPER}; box:k=3]");
    let r = run("euler_n_body", &state(&label), &g, 0.4);
    assert!(r.passed, "{}", serde_json::to_string_pretty(&r).unwrap());
    let cross = r.residual("cross_terms").unwrap();
    assert!(cross.asserted && cross.norms.linf < 1e-10);
}

#[test]
fn euler_split_is_invariant() {
    let g = line(0.0, PI, 64);
    let s = state(SUPER);
    let linf = |a: f64| {
        let opts = CheckOptions {
            split_a: a,
            ..Default::default()
        };
        run_check("euler_one_body", &s, &g, 0.2, &opts).unwrap()
    };
    let r0 = linf(0.0);
    let r1 = linf(0.8);
    assert!(r0.passed && r1.passed);
    assert!((r0.residual_linf - r1.residual_linf).abs() < 1e-12);
    assert!(r1.residual("split").unwrap().norms.linf < 1e-12);
}

#[test]
fn grid_residuals_converge_at_second_order() {
    let s = state(SUPER);
    let opts = CheckOptions {
        provenance: Provenance::Grid,
        ..Default::default()
    };
    for id in ["hamilton_jacobi", "continuity", "euler_one_body", "energy_gradients"] {
        let grids: Vec<Arc<Grid>> = [40, 80, 160, 320]
            .iter()
            .map(|&n| line(0.3, PI - 0.3, n))
            .collect();
        let (_, conv) = convergence_study(id, &s, &grids, 0.3, &opts).unwrap();
        assert!((conv.order - 2.0).abs() < 0.3, "{id}: {conv:?}");
    }
}

#[test]
fn grid_provenance_needs_cartesian_grid() {
    let opts = CheckOptions {
        provenance: Provenance::Grid,
        ..Default::default()
    };
    let err = run_check("bernoulli", &state("hydrogen_1s"), &radial(), 0.0, &opts).unwrap_err();
    assert!(matches!(err, Error::NotCartesian));
}

#[test]
fn kinetic_energy_routes_agree_for_hydrogen() {
    let r = run("ke_expectation", &state("hydrogen_1s"), &radial(), 0.0);
    let k = r.global("kinetic_routes").unwrap();
    assert!((k.expected - 0.5).abs() < 1e-8, "{k:?}");
    assert!(((k.value - k.expected) / k.expected).abs() < 1e-6);
}

#[test]
fn convergence_fit_recovers_power_law() {
    let h = [0.1, 0.05, 0.025];
    let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
    let c = convergence(&h, &e);
    assert!((c.order - 2.0).abs() < 1e-12);
    assert!((c.ratios[0] - 4.0).abs() < 1e-12);
}

#[test]
fn radial_integrals_reject_non_spherical_states() {
    let r = run("u_continuity", &state("corrupt:[delta=1e-3,sigma=0.5,at=(1,0,0); hydrogen_1s]"), &radial(), 0.0);
    assert!(r.residual("u_continuity").unwrap().passed == Some(true));
    let g = r.global("net_source").unwrap();
    assert!(!g.passed && g.warnings.iter().any(|w| w.contains("spherically symmetric")));
    assert!(!r.passed);
    let r = run("u_continuity", &state("hydrogen_2s"), &radial(), 0.0);
    assert!(r.passed, "{:?}", r.global_checks);
}
