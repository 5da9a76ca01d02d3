use std::path::Path;
use std::process::{Command, Output};

fn qnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnd"))
        .args(args)
        .env_remove(qnd_core::cache::CACHE_DIR_ENV)
        .output()
        .expect("spawn qnd")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn value_of(csv: &str, metric: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{metric},")))
        .and_then(|rest| rest.split(',').next())
        .expect("metric row")
        .parse()
        .unwrap()
}

#[test]
fn metrics_at_tau_zero_hit_baselines() {
    let out = stdout(&qnd(&["metrics", "--N", "4", "--nc", "16", "--tau", "0"]));
    assert!(out.starts_with("metric,value,status\n"));
    assert!((value_of(&out, "hofmann_takeuchi") - 1.0).abs() < 1e-10);
    assert!(value_of(&out, "log_negativity").abs() < 1e-10);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# point\nN = 3\nnc=9\n--tau=0\nmetric=hofmann_takeuchi\n",
    )
    .unwrap();
    let from_file = stdout(&qnd(&["--config", cfg.to_str().unwrap(), "metrics"]));
    assert!((value_of(&from_file, "hofmann_takeuchi") - 1.0).abs() < 1e-10);
    let overridden = stdout(&qnd(&[
        "--config",
        cfg.to_str().unwrap(),
        "metrics",
        "--tau",
        "0.2",
    ]));
    assert!(value_of(&overridden, "hofmann_takeuchi") < 0.99);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    let out = qnd(&["--config", cfg.to_str().unwrap(), "metrics"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn invalid_parameters_fail() {
    for args in [
        &["metrics", "--channel", "laser"][..],
        &["metrics", "--N", "0"],
        &["metrics", "--tau", "0:1:5"],
        &["sweep", "--tau", "1:0:abc"],
        &["figure", "fig99"],
    ] {
        let out = qnd(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn sweep_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    let out = qnd(&[
        "sweep",
        "--N",
        "2,3",
        "--nc",
        "4",
        "--tau",
        "0:1:3",
        "--channel",
        "dephase",
        "--Gamma",
        "0,0.1",
        "--metric",
        "purity",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    stdout(&out);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2 * 2 * 3);
}

#[test]
fn figure_list_and_replay() {
    let list = stdout(&qnd(&["figure", "list"]));
    assert_eq!(list.lines().filter(|l| l.starts_with("fig")).count(), 14);

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    stdout(&qnd(&["figure", "fig8a", "--out", a.to_str().unwrap()]));
    let manifest = a.join("fig8a.manifest.json");
    stdout(&qnd(&[
        "replay",
        manifest.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]));
    let read = |d: &Path| std::fs::read(d.join("fig8a.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn oracle_check_passes() {
    let out = stdout(&qnd(&["oracle-check", "--level", "fast"]));
    assert!(out.trim_end().ends_with("PASS"));
}
