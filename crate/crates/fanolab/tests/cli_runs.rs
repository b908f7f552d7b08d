//! End-to-end CLI checks: run directories, exit codes, reproducibility, and
//! the report merger, driven through the compiled binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_BIN_EXE_fanolab"));
    assert!(p.exists(), "binary missing at {}", p.display());
    p = p.canonicalize().unwrap();
    p
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn ke_run_and_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    let cfg = |out: &Path| {
        format!(
            r#"{{
    // football Kähler-Einstein solve at small size
    "model": {{"kind": "radial", "beta0": 0.5, "beta_inf": 0.5, "t": 10.0, "n": 128}},
    "run": {{"kind": "ke", "gauge": "even", "tol": 1e-10}},
    "sampling": {{"seed": 42}},
    "output": {{"dir": "{}"}}
}}"#,
            out.display()
        )
    };
    for out in [&out1, &out2] {
        let cfgp = write_config(tmp.path(), &cfg(out));
        let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
        assert!(st.success());
        assert!(out.join("report.json").exists());
        assert!(out.join("model.json").exists());
        assert!(out.join("config.json").exists());
        assert!(out.join("meta.json").exists());
    }
    for f in ["report.json", "phi.csv", "model.json"] {
        let a = std::fs::read(out1.join(f)).unwrap();
        let b = std::fs::read(out2.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn verify_run_identical_report_bodies() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &Path| {
        let cfgp = write_config(
            &tmp.path().join("."),
            &format!(
                r#"{{
    "model": {{"kind": "radial", "beta0": 1.0, "beta_inf": 1.0, "t": 8.0, "n": 64}},
    "run": {{"kind": "verify", "suites": ["ij_sandwich", "pinsker"]}},
    "sampling": {{"seed": 42, "count": 60}},
    "output": {{"dir": "{}"}}
}}"#,
                out.display()
            ),
        );
        let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
        assert!(st.success());
    };
    let (o1, o2) = (tmp.path().join("v1"), tmp.path().join("v2"));
    run(&o1);
    run(&o2);
    let a = std::fs::read(o1.join("report.json")).unwrap();
    let b = std::fs::read(o2.join("report.json")).unwrap();
    assert_eq!(a, b, "verify reports must be byte-identical at equal seeds");
}

#[test]
fn schema_violation_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgp = write_config(
        tmp.path(),
        r#"{"model": {"kind": "radial", "t": 8.0, "n": 64, "bogus": true},
            "run": {"kind": "ke"}, "sampling": {"seed": 1},
            "output": {"dir": "/tmp/ignored"}}"#,
    );
    let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = Command::new(bin())
        .arg("validate-config")
        .arg(&cfgp)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn cfl_violation_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flow");
    let cfgp = write_config(
        tmp.path(),
        &format!(
            r#"{{
    "model": {{"kind": "radial", "beta0": 1.0, "beta_inf": 1.0, "t": 4.0, "n": 64}},
    "run": {{"kind": "flow", "dt": 50.0, "t_end": 100.0, "amplitude": 0.8}},
    "sampling": {{"seed": 3}},
    "output": {{"dir": "{}"}}
}}"#,
            out.display()
        ),
    );
    let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn resource_guard_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgp = write_config(
        tmp.path(),
        &format!(
            r#"{{
    "model": {{"kind": "product", "t": 10.0, "n": 4096}},
    "run": {{"kind": "ke"}},
    "sampling": {{"seed": 1}},
    "output": {{"dir": "{}"}}
}}"#,
            tmp.path().join("big").display()
        ),
    );
    let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
    assert_eq!(st.code(), Some(4));
}

#[test]
fn env_var_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let override_dir = tmp.path().join("env-target");
    let cfgp = write_config(
        tmp.path(),
        &format!(
            r#"{{
    "model": {{"kind": "radial", "beta0": 1.0, "beta_inf": 1.0, "t": 8.0, "n": 64}},
    "run": {{"kind": "alpha"}},
    "sampling": {{"seed": 1}},
    "output": {{"dir": "{}"}}
}}"#,
            tmp.path().join("configured").display()
        ),
    );
    let st = Command::new(bin())
        .arg("run")
        .arg(&cfgp)
        .env("FANOLAB_OUT", &override_dir)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(override_dir.join("report.json").exists());
    assert!(!tmp.path().join("configured").exists());
}

#[test]
fn report_merges_iterate_and_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |kind: &str, extra: &str, out: &Path| {
        let cfgp = write_config(
            tmp.path(),
            &format!(
                r#"{{
    "model": {{"kind": "radial", "beta0": 1.0, "beta_inf": 1.0, "t": 3.0, "n": 48}},
    "run": {{"kind": "{kind}"{extra}}},
    "sampling": {{"seed": 5}},
    "output": {{"dir": "{}"}}
}}"#,
                out.display()
            ),
        );
        let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
        assert!(st.success(), "{kind} run failed");
    };
    let it_dir = tmp.path().join("iterate");
    let fl_dir = tmp.path().join("flow");
    run("iterate", r#", "gauge": "even", "max_iter": 40, "amplitude": 0.5"#, &it_dir);
    run(
        "flow",
        r#", "dt": 0.01, "t_end": 20.0, "amplitude": 0.5"#,
        &fl_dir,
    );
    let out_stem = tmp.path().join("cmp");
    let st = Command::new(bin())
        .arg("report")
        .arg(&it_dir)
        .arg(&fl_dir)
        .arg("--out")
        .arg(&out_stem)
        .status()
        .unwrap();
    assert!(st.success());
    let body = std::fs::read_to_string(out_stem.with_extension("csv")).unwrap();
    let sup: f64 = body
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    // iteration limit and flow limit agree on the round model
    assert!(sup <= 1e-3, "iterate vs flow sup discrepancy {sup}");

    // mismatched models across runs are rejected
    let other = tmp.path().join("other-model");
    run("iterate", r#", "gauge": "even", "max_iter": 5, "amplitude": 0.5"#, &other);
    let mut cfg_text = std::fs::read_to_string(other.join("config.json")).unwrap();
    cfg_text = cfg_text.replace("\"n\": 48", "\"n\": 64");
    // rebuild the run with a different grid
    let other2 = tmp.path().join("other-model-2");
    let cfgp = write_config(tmp.path(), &cfg_text.replace(&other.display().to_string(), &other2.display().to_string()));
    let st = Command::new(bin()).arg("run").arg(&cfgp).status().unwrap();
    assert!(st.success());
    let st = Command::new(bin())
        .arg("report")
        .arg(&it_dir)
        .arg(&other2)
        .arg("--out")
        .arg(tmp.path().join("bad"))
        .status()
        .unwrap();
    assert!(!st.success());
}
