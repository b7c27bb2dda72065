use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn irfkit(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_irfkit"));
    cmd.args(args).env_remove("IRFKIT_THREADS");
    if let Some(t) = threads {
        cmd.env("IRFKIT_THREADS", t);
    }
    cmd.output().expect("spawn irfkit")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate_into(dir: &Path, length: &str) {
    let out = irfkit(
        &["simulate", "--dgp", "extended", "--length", length, "--seed", "3", "--out", p(dir)],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&irfkit(&["--help"], None)), 0);
    assert_eq!(code(&irfkit(&["--version"], None)), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&irfkit(&["irf"], None)), 1);
    assert_eq!(code(&irfkit(&["frobnicate"], None)), 1);
    let tmp = tempfile::tempdir().unwrap();
    let out = irfkit(&["replicate", "fig9", "--out", p(tmp.path())], None);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig1") && err.contains("figB5"), "{err}");

    simulate_into(tmp.path(), "300");
    let csv = tmp.path().join("simulated.csv");
    let out = irfkit(
        &["irf", "-i", p(&csv), "--y", "y", "--shock", "x", "--estimator", "magic", "--out", p(tmp.path())],
        None,
    );
    assert_eq!(code(&out), 1);
    assert_eq!(code(&irfkit(&["simulate", "--out", p(tmp.path())], Some("zero"))), 1);
}

#[test]
fn data_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    assert_eq!(code(&irfkit(&["test", "-i", p(&missing), "--out", p(tmp.path())], None)), 2);

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "x\n1\nabc\n3\n").unwrap();
    let out = irfkit(&["test", "-i", p(&bad), "--out", p(tmp.path())], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));

    let out = irfkit(&["replicate", "figB3", "--out", p(tmp.path())], None);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--shock-csv"));
}

#[test]
fn numerical_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("flat.csv");
    let mut text = String::from("y,x\n");
    for i in 0..200 {
        text.push_str(&format!("{},1\n", (i as f64 * 0.37).sin()));
    }
    fs::write(&csv, text).unwrap();
    let out = irfkit(
        &["irf", "-i", p(&csv), "--y", "y", "--shock", "x", "--horizon", "3", "--out", p(tmp.path())],
        None,
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_irf_multiplier_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    simulate_into(&sim, "20000");
    let csv = sim.join("simulated.csv");
    let head = fs::read_to_string(&csv).unwrap();
    assert!(head.starts_with("# irfkit simulate\n# seed: 3\n"));
    let manifest = read_json(&sim.join("manifest.json"));
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["rng"], irfkit::RNG_ALGORITHM);
    assert_eq!(manifest["config"]["command"], "simulate");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));

    let yd = tmp.path().join("y");
    let out = irfkit(
        &[
            "irf", "-i", p(&csv), "--y", "y", "--shock", "x", "--estimator", "lp-leads", "--leads", "h",
            "--controls", "y:1", "--shock-lags", "1", "--horizon", "6", "--out", p(&yd),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&yd.join("irf.json"));
    assert_eq!(r["estimator"], "lp_leads");
    let point: Vec<f64> = serde_json::from_value(r["point"].clone()).unwrap();
    assert_eq!(point.len(), 7);
    assert!((point[0] - 1.5).abs() < 0.1, "{point:?}");
    assert!(fs::read_to_string(yd.join("irf.csv")).unwrap().starts_with("h,"));

    let md = tmp.path().join("m");
    let den = yd.join("irf.json");
    let out = irfkit(&["multiplier", "--num", p(&den), "--den", p(&den), "--out", p(&md)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(&md.join("multiplier.json"));
    for v in m["values"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn var_and_nonlinear_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_into(tmp.path(), "5000");
    let csv = tmp.path().join("simulated.csv");
    let vd = tmp.path().join("var");
    let out = irfkit(
        &["irf", "-i", p(&csv), "--y", "y", "--shock", "x", "--estimator", "var-endog", "--horizon", "5", "--out", p(&vd)],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(vd.join("irf_y.csv").exists() && vd.join("irf_x.csv").exists());
    let md = tmp.path().join("vm");
    let j = vd.join("irf.json");
    assert_eq!(code(&irfkit(&["multiplier", "--num", p(&j), "--den", p(&j), "--out", p(&md)], None)), 1);
    let out = irfkit(
        &["multiplier", "--num", p(&j), "--den", p(&j), "--response", "y", "--out", p(&md)],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&csv).unwrap();
    let mut with_state = String::new();
    let mut row = 0usize;
    for line in text.lines() {
        if line.starts_with('#') {
            continue;
        }
        if row == 0 {
            with_state.push_str(&format!("{line},s\n"));
        } else {
            with_state.push_str(&format!("{line},{}\n", (row / 50) % 2));
        }
        row += 1;
    }
    let sc = tmp.path().join("state.csv");
    fs::write(&sc, with_state).unwrap();
    let nd = tmp.path().join("nl");
    let out = irfkit(
        &[
            "irf", "-i", p(&sc), "--y", "y", "--shock", "x", "--estimator", "nonlinear-lp", "--state", "s",
            "--horizon", "4", "--out", p(&nd),
        ],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(nd.join("irf_A.csv").exists() && nd.join("irf_B.csv").exists());
}

#[test]
fn test_command_writes_report_and_correlogram() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_into(tmp.path(), "500");
    let csv = tmp.path().join("simulated.csv");
    let rd = tmp.path().join("t");
    let out = irfkit(&["test", "-i", p(&csv), "--columns", "x", "--lags", "5,40", "--out", p(&rd)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&rd.join("test_report.json"));
    let tests = report["series"][0]["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 2);
    assert_eq!(tests[1]["dof"], 40);
    assert!(tests[0]["p_value"].as_f64().unwrap() < 0.01);
    let corr = fs::read_to_string(rd.join("correlogram_x.csv")).unwrap();
    assert_eq!(corr.lines().count(), 41);
}

#[test]
fn config_run_matches_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let flags = tmp.path().join("flags");
    let out = irfkit(&["replicate", "fig1", "--length", "4000", "--horizon", "4", "--out", p(&flags)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = tmp.path().join("cfg");
    let config = tmp.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({
            "command": "replicate", "figure": "fig1", "length": 4000, "horizon": 4, "out": p(&cfg)
        })
        .to_string(),
    )
    .unwrap();
    let out = irfkit(&["run", "--config", p(&config)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["fig1_gamma02_leads.csv", "manifest.json"] {
        assert_eq!(fs::read(flags.join(f)).unwrap(), fs::read(cfg.join(f)).unwrap(), "{f}");
    }

    let echoed = tmp.path().join("echo.json");
    fs::write(&echoed, read_json(&flags.join("manifest.json"))["config"].to_string()).unwrap();
    let again = tmp.path().join("again");
    let mut cfg_json = read_json(&echoed);
    cfg_json["out"] = Value::String(p(&again).into());
    fs::write(&echoed, cfg_json.to_string()).unwrap();
    let out = irfkit(&["run", "--config", p(&echoed)], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(flags.join("manifest.json")).unwrap(), fs::read(again.join("manifest.json")).unwrap());

    let nested = tmp.path().join("nested.json");
    fs::write(&nested, r#"{"command": "run", "config": "x.json"}"#).unwrap();
    assert_eq!(code(&irfkit(&["run", "--config", p(&nested)], None)), 1);
}

#[test]
fn output_independent_of_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let shock = tmp.path().join("shock.csv");
    let mut text = String::from("date,shock\n");
    for i in 0..120 {
        text.push_str(&format!("{},{}\n", 1950 + i, ((i * 37) % 11) as f64 / 5.0 - 1.0));
    }
    fs::write(&shock, text).unwrap();
    let run = |threads: &str| {
        let dir = tmp.path().join(format!("t{threads}"));
        let out = irfkit(
            &[
                "replicate", "figB3", "--shock-csv", p(&shock), "--shock-column", "shock", "--replications", "64",
                "--horizon", "4", "--out", p(&dir),
            ],
            Some(threads),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let one = run("1");
    let four = run("4");
    let mut names: Vec<_> = fs::read_dir(&one).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 2);
    for n in names {
        assert_eq!(fs::read(one.join(&n)).unwrap(), fs::read(four.join(&n)).unwrap(), "{n:?}");
    }
}
