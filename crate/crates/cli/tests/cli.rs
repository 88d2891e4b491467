use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hdvar(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdvar")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, out: &str, t: &str, seed: &str) {
    let o = hdvar(&["simulate", "--table1", "--T", t, "--c", "1", "--seed", seed, "--out", out], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn simulate_table1_shape_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "s", "100", "7");
    let csv = fs::read_to_string(d.path().join("s/panel.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines[0].split(',').count(), 100);
    assert_eq!(fs::metadata(d.path().join("s/panel.bin")).unwrap().len(), 16 + 100 * 100 * 8);
    let m = json(&d.path().join("s/manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_same_seed_identical_files() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "a", "60", "3");
    simulate(d.path(), "b", "60", "3");
    simulate(d.path(), "c", "60", "4");
    for f in ["panel.csv", "panel.bin"] {
        assert_eq!(fs::read(d.path().join("a").join(f)).unwrap(), fs::read(d.path().join("b").join(f)).unwrap());
    }
    assert_ne!(fs::read(d.path().join("a/panel.bin")).unwrap(), fs::read(d.path().join("c/panel.bin")).unwrap());
}

#[test]
fn simulate_unstable_spec_exits_2_citing_a1() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("spec.json"), r#"{"n": 2, "p": 1, "coeffs": [[[1.1, 0.0], [0.0, 0.5]]]}"#).unwrap();
    let o = hdvar(&["simulate", "--spec", "spec.json", "--T", "50", "--out", "x"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("A1"), "{}", stderr(&o));
}

#[test]
fn simulate_custom_spec_gaussian() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("spec.json"), r#"{"n": 2, "p": 1, "coeffs": [[[0.5, 0.1], [0.0, 0.3]]]}"#).unwrap();
    let o = hdvar(&["simulate", "--spec", "spec.json", "--T", "50", "--innovations", "gaussian", "--out", "g"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(d.path().join("g/panel.csv")).unwrap().lines().count(), 51);
}

#[test]
fn fit_bic_has_small_kkt_residuals() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "s", "60", "1");
    let o = hdvar(&["fit", "--panel", "s/panel.csv", "--p", "4", "--select", "bic", "--out", "fit.json"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit = json(&d.path().join("fit.json"));
    let eqs = fit["equations"].as_array().unwrap();
    assert_eq!(eqs.len(), 60);
    for e in eqs {
        if e["converged"].as_bool().unwrap() {
            assert!(e["kkt_residual"].as_f64().unwrap() < 1e-6);
        }
    }
    assert!(d.path().join("fit.json.manifest.json").exists());
}

#[test]
fn fit_huge_lambda_is_all_zero() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "s", "40", "2");
    let o = hdvar(&["fit", "--panel", "s/panel.bin", "--p", "4", "--lambda", "1e9", "--out", "fit.json"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit = json(&d.path().join("fit.json"));
    assert!(fit["equations"].as_array().unwrap().iter().all(|e| e["nonzeros"].as_array().unwrap().is_empty()));
}

#[test]
fn fit_missing_panel_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = hdvar(&["fit", "--panel", "missing.csv", "--p", "4"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.csv"));
}

#[test]
fn fit_bad_arguments_exit_2() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "s", "40", "2");
    assert_eq!(code(&hdvar(&["fit", "--panel", "s/panel.csv", "--p", "4", "--lambda", "-1"], d.path())), 2);
    assert_eq!(code(&hdvar(&["fit", "--panel", "s/panel.csv", "--p", "40"], d.path())), 2);
    assert_eq!(code(&hdvar(&["fit", "--panel", "s/panel.csv"], d.path())), 2);
}

fn desk_spec(dir: &Path) {
    fs::write(dir.join("spec.json"), r#"{"n": 2, "p": 1, "coeffs": [[[0.5, 0.1], [0.0, 0.3]]]}"#).unwrap();
    let o = hdvar(&["simulate", "--spec", "spec.json", "--T", "300", "--innovations", "gaussian", "--seed", "5", "--out", "g"], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn diagnose_reports_every_check() {
    let d = tempfile::tempdir().unwrap();
    desk_spec(d.path());
    let o = hdvar(
        &["diagnose", "--panel", "g/panel.csv", "--spec", "spec.json", "--innovations", "gaussian", "--lambda", "0.2", "--out", "diag.json"],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&d.path().join("diag.json"));
    assert_eq!(r["lambda"], 0.2);
    assert!(r["deviation_bound"]["joint"].is_boolean());
    assert!(r["gram"]["pi2"].as_f64().unwrap() > 0.0);
    let eqs = r["equations"].as_array().unwrap();
    assert_eq!(eqs.len(), 2);
    for e in eqs {
        for key in ["db_statistic", "rsc_min_slack", "l2_error", "l2_bound", "prediction_error", "prediction_bound"] {
            assert!(e[key].is_number(), "{key}");
        }
    }
}

#[test]
fn diagnose_missing_spec_exits_2() {
    let d = tempfile::tempdir().unwrap();
    desk_spec(d.path());
    let o = hdvar(&["diagnose", "--panel", "g/panel.csv", "--spec", "nope.json"], d.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn diagnose_dimension_mismatch_exits_2() {
    let d = tempfile::tempdir().unwrap();
    desk_spec(d.path());
    fs::write(d.path().join("one.json"), r#"{"n": 1, "p": 1, "coeffs": [[[0.5]]]}"#).unwrap();
    let o = hdvar(&["diagnose", "--panel", "g/panel.csv", "--spec", "one.json"], d.path());
    assert_eq!(code(&o), 2);
}

const SMALL: &str = "t_grid = [20]\nc_grid = [1]\nreplications = 3\nbase_seed = 11\n";

#[test]
fn experiment_completes_and_writes_reports() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("cfg.toml"), SMALL).unwrap();
    let o = hdvar(&["experiment", "--config", "cfg.toml", "--out", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "table1.csv", "diagnostics.csv", "manifest.json"] {
        assert!(d.path().join("out").join(f).exists(), "{f}");
    }
    let table = fs::read_to_string(d.path().join("out/table1.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("a,mse,20,1,")));
}

#[test]
fn experiment_is_deterministic_across_threads() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("cfg.toml"), SMALL).unwrap();
    assert_eq!(code(&hdvar(&["experiment", "--config", "cfg.toml", "--out", "a"], d.path())), 0);
    assert_eq!(code(&hdvar(&["experiment", "--config", "cfg.toml", "--out", "b"], d.path())), 0);
    assert_eq!(code(&hdvar(&["--threads", "2", "experiment", "--config", "cfg.toml", "--out", "c"], d.path())), 0);
    let read = |dir: &str, f: &str| fs::read(d.path().join(dir).join(f)).unwrap();
    for f in ["table1.csv", "diagnostics.csv"] {
        assert_eq!(read("a", f), read("b", f));
        assert_eq!(read("a", f), read("c", f));
    }
    assert_eq!(read("a", "report.json"), read("b", "report.json"));
    let cells = |dir: &str| json(&d.path().join(dir).join("report.json"))["cells"].clone();
    assert_eq!(cells("a"), cells("c"));
}

#[test]
fn experiment_seed_flag_overrides_config() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("cfg.toml"), SMALL).unwrap();
    assert_eq!(code(&hdvar(&["--seed", "99", "experiment", "--config", "cfg.toml", "--out", "a"], d.path())), 0);
    assert_eq!(code(&hdvar(&["experiment", "--config", "cfg.toml", "--out", "b"], d.path())), 0);
    let r = json(&d.path().join("a/report.json"));
    assert_eq!(r["config"]["base_seed"], 99);
    assert_ne!(fs::read(d.path().join("a/table1.csv")).unwrap(), fs::read(d.path().join("b/table1.csv")).unwrap());
}

#[test]
fn experiment_bad_toml_exits_2() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.toml"), "t_grid = [100\n").unwrap();
    assert_eq!(code(&hdvar(&["experiment", "--config", "bad.toml"], d.path())), 2);
    fs::write(d.path().join("cell.toml"), "t_grid = [101]\nc_grid = [1]\n").unwrap();
    let o = hdvar(&["experiment", "--config", "cell.toml"], d.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("multiple of 5"));
}

#[test]
fn experiment_dry_run_only_validates() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("cfg.toml"), "t_grid = [100, 300]\nc_grid = [1, 2, 3]\n").unwrap();
    let o = hdvar(&["experiment", "--config", "cfg.toml", "--dry-run", "--out", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["cells"].as_array().unwrap().len(), 6);
    assert!(!d.path().join("out").exists());
}

#[test]
fn bounds_prints_json() {
    let d = tempfile::tempdir().unwrap();
    let o = hdvar(&["bounds", "--n", "10", "--p", "2", "--T", "500", "--out", "b.json"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = json(&d.path().join("b.json"));
    assert!((b["pi1"].as_f64().unwrap() - 10.0 * (-3.0f64).exp()).abs() < 1e-15);
    assert!(b["lambda"].as_f64().unwrap() > 0.0);
    assert!(b["martingale"]["bound"].is_number());
    // side condition T > eps + ln(n^2 p) fails, reported rather than fatal
    let o = hdvar(&["bounds", "--n", "100", "--p", "4", "--T", "10", "--out", "c.json"], d.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(json(&d.path().join("c.json"))["lambda"].is_null());
}

#[test]
fn help_lists_subcommands_and_flags() {
    let d = tempfile::tempdir().unwrap();
    let o = hdvar(&["--help"], d.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for w in ["simulate", "fit", "diagnose", "experiment", "bounds", "--seed", "--threads", "--verbose"] {
        assert!(text.contains(w), "{w}");
    }
}
