use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Dir(PathBuf);

impl Dir {
    fn new(name: &str) -> Self {
        let p = std::env::temp_dir().join(format!("qfl-cli-{}-{name}", std::process::id()));
        let _ = std::fs::remove_dir_all(&p);
        std::fs::create_dir_all(&p).unwrap();
        Dir(p)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Dir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn scenario(checks: &str, out: &Path) -> String {
    format!(
        r#"{{"state_spec": "hydrogen_1s", "grid_spec": {{"kind": "radial", "n": 400}},
            "checks": {checks}, "output_dir": {:?}}}"#,
        out.to_str().unwrap()
    )
}

#[test]
fn list_checks_shows_labels() {
    let o = qfl(&["list-checks"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("bernoulli → Eq. (p2574)"));
    assert!(text.contains("euler_n_body → Eq. (8888d)"));
    assert!(text.lines().count() >= 12);

    let o = qfl(&["list-checks", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert!(v["data"].as_array().unwrap().len() >= 12);
}

#[test]
fn hydrogen_scenario_passes_and_is_reproducible() {
    let d = Dir::new("h1s");
    let a = d.write("a.json", &scenario(r#"["bernoulli", "ke_expectation", "u_continuity"]"#, &d.path("out_a")));
    let b = d.write("b.json", &scenario(r#"["bernoulli", "ke_expectation", "u_continuity"]"#, &d.path("out_b")));
    let o = qfl(&["run", &a]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 3);
    let o = Command::new(env!("CARGO_BIN_EXE_qfl"))
        .args(["run", &b])
        .env("QFL_JOBS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let ma = std::fs::read(d.path("out_a/manifest.json")).unwrap();
    let mb = std::fs::read(d.path("out_b/manifest.json")).unwrap();
    assert_eq!(ma, mb);
    let m: serde_json::Value = serde_json::from_slice(&ma).unwrap();
    assert_eq!(m["schema_version"], "1");
    assert_eq!(m["summary"]["checks_passed"], 3);
    assert!(d.path("out_a/run_info.json").exists());
}

#[test]
fn empty_check_list_exits_zero() {
    let d = Dir::new("empty");
    let s = d.write("s.json", &scenario("[]", &d.path("out")));
    let o = qfl(&["run", &s]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["checks"].as_array().unwrap().len(), 0);
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let d = Dir::new("errors");
    let unknown = d.write("u.json", &scenario(r#"["bernouli"]"#, &d.path("out")));
    let o = qfl(&["run", &unknown]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("unknown equation_id"));
    assert!(!d.path("out").exists());

    let o = qfl(&["run", d.path("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let bad = d.write("bad.json", "{not json");
    assert_eq!(qfl(&["run", &bad]).status.code(), Some(3));

    let big = d.write(
        "big.json",
        r#"{"state_spec": "box:k=1", "grid_spec": "cartesian:lower=(0,0,0),upper=(1,1,1),n=(1024,1024,1024)"}"#,
    );
    let o = qfl(&["run", &big]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("budget"));

    assert_eq!(qfl(&["run"]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let d = Dir::new("fail");
    let s = d.write(
        "s.json",
        &format!(
            r#"{{"state_spec": "corrupt:[delta=1e-3,sigma=0.5,at=(1,0,0); hydrogen_1s]",
                "grid_spec": "radial:n=400", "checks": ["bernoulli", "quantum_potential"],
                "dump_fields": false, "output_dir": {:?}}}"#,
            d.path("out").to_str().unwrap()
        ),
    );
    let o = qfl(&["run", &s]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL bernoulli") && text.contains("PASS quantum_potential"));
}

#[test]
fn trajectory_and_field_dump_write_csv() {
    let o = qfl(&[
        "trajectory",
        "--state",
        "hydrogen_1s",
        "--seed",
        "1,0,0",
        "--velocity",
        "u_minus",
        "--dt",
        "0.5",
        "--steps",
        "4",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let x: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((x - 3.0).abs() < 1e-12);

    let o = qfl(&["trajectory", "--state", "box:k=2", "--seed", "pi/2", "--velocity", "u_minus"]);
    assert_eq!(o.status.code(), Some(6));

    let o = qfl(&["field-dump", "--state", "box:k=1", "--grid", "cartesian:lower=0,upper=pi,n=16", "--at", "0.2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("x0 [bohr],rho"));
}

#[test]
fn single_check_prints_report() {
    let o = qfl(&["check", "--state", "hydrogen_2s", "--grid", "radial:n=300", "--check", "bernoulli"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["data"]["passed"], true);
    assert_eq!(v["data"]["equation_id"], "p2574");
}
