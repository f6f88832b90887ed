//! End-to-end CLI behaviour.

use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hypodecay"));
    c.env_remove("HYPODECAY_OUT");
    c
}

#[test]
fn list_shows_registry() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 10);
    for id in ["thm1_linear", "kalman_fail", "thm6_psystem_log", "ckn_sweep"] {
        assert!(text.contains(id));
    }
}

#[test]
fn malformed_config_exits_2_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let out_dir = dir.path().join("out");
    let mut v: serde_json::Value = serde_json::from_str(
        &hypodecay::experiment::registry::default_config("thm1_linear").unwrap().to_json(),
    )
    .unwrap();
    v["grid"]["N"] = serde_json::json!(-4);
    std::fs::write(&cfg, v.to_string()).unwrap();
    let st = bin().args(["run", "--config"]).arg(&cfg).env("HYPODECAY_OUT", &out_dir).status().unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_scenario_and_bad_set_exit_2() {
    assert_eq!(bin().args(["run", "--scenario", "nope"]).status().unwrap().code(), Some(2));
    let st = bin().args(["run", "--scenario", "thm1_linear", "--set", "grid.nope=1", "--dry-run"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn dry_run_applies_overrides() {
    let out = bin().args(["run", "--scenario", "heat_oracle", "--set", "grid.N=512", "--dry-run"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["grid"]["N"], 512);
    assert_eq!(v["model"], "heat");
}

#[test]
fn run_writes_under_env_dir_with_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--scenario", "heat_oracle", "--set", "grid.N=512", "--set", "time.T=60"])
        .env("HYPODECAY_OUT", dir.path())
        .output()
        .unwrap();
    let run_dir = dir.path().join("heat_oracle");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(out.status.code(), Some(report["exit_code"].as_i64().unwrap() as i32));
    assert!(run_dir.join("series.csv").exists());
    assert!(run_dir.join("series_companion.csv").exists());
    assert!(run_dir.join("timing.json").exists());
    assert_eq!(report["certificates"].as_array().unwrap().len(), 2);
}

#[test]
fn batch_over_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("cfgs");
    std::fs::create_dir(&cfgs).unwrap();
    for (name, id) in [("a", "kalman_fail"), ("b", "heat_oracle")] {
        let c = hypodecay::experiment::registry::default_config(id)
            .unwrap()
            .with_overrides(&["grid.N=256".into(), "time.T=20".into(), "analysis.fit_window=[5,20]".into()])
            .unwrap();
        std::fs::write(cfgs.join(format!("{name}.json")), c.to_json()).unwrap();
    }
    let out = dir.path().join("out");
    let st = bin().args(["batch", "--jobs", "2", "--dir"]).arg(&cfgs).arg("--out").arg(&out).status().unwrap();
    let agg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("batch.json")).unwrap()).unwrap();
    assert_eq!(st.code(), Some(agg["exit_code"].as_i64().unwrap() as i32));
    assert_eq!(agg["runs"][0]["name"], "a");
    assert!(out.join("a/report.json").exists() && out.join("b/report.json").exists());
}
