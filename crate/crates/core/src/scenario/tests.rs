use super::*;

fn scenario(json: &str) -> Scenario {
    Scenario::from_json(json).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qfluid-scenario-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn compact_grid_specs_parse() {
    let g: GridSpec = "radial:n=400,r_min=1e-6,r_max=40".parse().unwrap();
    assert_eq!(
        g,
        GridSpec::Radial {
            n: 400,
            r_min: 1e-6,
            r_max: 40.0,
            direction: None
        }
    );
    let g: GridSpec = "cartesian:lower=(0,-1),upper=(pi,1),n=(64,32),centering=vertex".parse().unwrap();
    match &g {
        GridSpec::Cartesian {
            upper, n, centering, ..
        } => {
            assert!((upper[0] - std::f64::consts::PI).abs() < 1e-15);
            assert_eq!(n, &vec![64, 32]);
            assert_eq!(*centering, Centering::Vertex);
        }
        _ => panic!("wrong kind"),
    }
    assert_eq!(g.build().unwrap().len(), 64 * 32);
    let g: GridSpec = "cartesian:lower=0,upper=2*pi,n=50,periodic=true".parse().unwrap();
    assert!(g.build().unwrap().meta().periodic[0]);
    let json: GridSpec = r#"{"kind":"radial","n":100}"#.parse().unwrap();
    assert_eq!(json.estimated_points(), 100);
    assert!("sphere:n=3".parse::<GridSpec>().is_err());
    assert!("radial:n".parse::<GridSpec>().is_err());

    let s = scenario(
        r#"{"state_spec":"box:k=1","grid_spec":"cartesian:lower=0,upper=pi,n=64",
            "conservation":{"components":["box:k=1"],"coeffs":[1],"times":[0],"grid_spec":"cartesian:lower=0,upper=pi,n=32"}}"#,
    );
    assert_eq!(s.conservation.unwrap().grid_spec.unwrap().estimated_points(), 32);
}

#[test]
fn validation_separates_error_classes() {
    let base = r#"{"state_spec":"hydrogen_1s","grid_spec":{"kind":"radial","n":100},"checks":["bernuolli"]}"#;
    assert!(matches!(scenario(base).validate(), Err(Error::UnknownCheck(_))));

    let big = r#"{"state_spec":"box:k=1","grid_spec":{"kind":"cartesian","lower":[0,0,0],"upper":[1,1,1],"n":[1024,1024,1024]}}"#;
    assert!(matches!(scenario(big).validate(), Err(Error::BudgetExceeded { .. })));

    let tol = r#"{"state_spec":"box:k=1","grid_spec":{"kind":"radial","n":10},"tolerances":{"bernoulli":-1}}"#;
    assert!(matches!(scenario(tol).validate(), Err(Error::Scenario(_))));

    assert!(matches!(Scenario::from_json("{"), Err(Error::Json(_))));
    assert!(matches!(
        Scenario::from_json(r#"{"state_spec":"box:k=1","grid_spec":{"kind":"radial","n":10},"chekcs":[]}"#),
        Err(Error::Json(_))
    ));
    assert!(matches!(Scenario::load(Path::new("/nonexistent/s.json")), Err(Error::Io(_))));
}

#[test]
fn run_writes_deterministic_manifest() {
    let json = r#"{
        "name": "h1s",
        "state_spec": "hydrogen_1s",
        "grid_spec": {"kind": "radial", "n": 400},
        "checks": ["bernoulli", "ke_expectation", "u_continuity"],
        "trajectories": [{"seed": [1, 0, 0], "velocity": "u_minus", "dt": 0.01, "steps": 20}]
    }"#;
    let s = scenario(json);
    let dir = tmp("det");
    let a = run(
        &s,
        &RunOptions {
            jobs: Some(1),
            output_dir: Some(dir.join("a")),
        },
    )
    .unwrap();
    assert!(a.manifest.passed, "{:#?}", a.manifest);
    assert_eq!(a.manifest.summary.checks_passed, 3);
    run(
        &s,
        &RunOptions {
            jobs: Some(4),
            output_dir: Some(dir.join("b")),
        },
    )
    .unwrap();
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&dir.join("a/manifest.json")), read(&dir.join("b/manifest.json")));
    for entry in &a.manifest.checks {
        let name = entry.report.as_ref().unwrap();
        assert_eq!(read(&dir.join("a").join(name)), read(&dir.join("b").join(name)));
    }
    assert!(dir.join("a/run_info.json").exists());
    assert!(dir.join("a/fields/fields_t0.csv").exists());
    assert!(dir.join("a/trajectories/trajectory_0.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn empty_check_list_passes() {
    let s = scenario(r#"{"state_spec":"box:k=2","grid_spec":"cartesian:lower=0,upper=pi,n=64","checks":[],"dump_fields":false}"#);
    let dir = tmp("empty");
    let out = run(
        &s,
        &RunOptions {
            jobs: None,
            output_dir: Some(dir.clone()),
        },
    )
    .unwrap();
    assert!(out.manifest.passed);
    assert!(out.manifest.checks.is_empty());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn failing_checks_and_experiments_are_recorded() {
    let json = r#"{
        "state_spec": "ring:j=1",
        "grid_spec": {"kind": "cartesian", "lower": [0], "upper": [6.283185307179586], "n": [64], "periodic": [true]},
        "checks": ["bernoulli", "stationary_energy"],
        "conservation": {"components": ["box:k=1", "box:k=2"], "coeffs": ["1/sqrt(2)", [0, 0.7071067811865476]],
                         "times": [0, 0.5, 1.0],
                         "grid_spec": {"kind": "cartesian", "lower": [0], "upper": [3.141592653589793], "n": [256]}},
        "dump_fields": false
    }"#;
    let dir = tmp("fail");
    let out = run(
        &scenario(json),
        &RunOptions {
            jobs: Some(2),
            output_dir: Some(dir.clone()),
        },
    )
    .unwrap();
    let m = &out.manifest;
    assert!(!m.passed);
    assert!(!m.checks[0].passed && m.checks[0].error.as_ref().unwrap().contains("precondition"));
    assert!(m.checks[1].passed);
    let c = m.conservation.as_ref().unwrap();
    assert!(c.passed, "{c:?}");
    assert!((c.expected_e_s.unwrap() - 1.25).abs() < 1e-12);
    assert!(dir.join("conservation.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}
