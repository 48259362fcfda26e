use std::process::{Command, Output};

fn gelshoot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gelshoot"))
        .args(args)
        .env("GELSHOOT_LOG", "quiet")
        .output()
        .expect("spawn gelshoot")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("stderr is a JSON error object")
}

#[test]
fn b_star_prints_four_decimals() {
    let o = gelshoot(&["b-star", "--gamma", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "2.5374");
    let o = gelshoot(&["b-star", "--gamma", "2", "--digits", "6"]);
    assert_eq!(stdout(&o).trim(), "2.537440");
}

#[test]
fn classify_large_b_converges_to_one() {
    let o = gelshoot(&["classify", "--gamma", "2", "--b", "10"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["class"], "ConvergesToConstant");
    assert!((v["phi_inf"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["provenance"]["command"], "classify");
}

#[test]
fn domain_errors_exit_one() {
    let o = gelshoot(&["classify", "--gamma", "0.5", "--b", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let e = error_json(&o);
    assert_eq!(e["error"], "Domain");
    assert_eq!(e["exit_code"], 1);

    let o = gelshoot(&["classify", "--gamma", "2", "--b", "abc"]);
    assert_eq!(o.status.code(), Some(1));

    let o = gelshoot(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "Usage");
}

#[test]
fn numerical_failure_exits_two() {
    // The fixed-point map stops contracting for large perturbations.
    let o = gelshoot(&["fixedpoint", "--eps", "3", "--eta", "0.01"]);
    assert_eq!(o.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let e = error_json(&o);
    assert_eq!(e["exit_code"], 2);
    assert_eq!(e["error"], "NonContraction");
}

#[test]
fn bad_log_level_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_gelshoot"))
        .args(["params", "--gamma", "2", "--b", "3"])
        .env("GELSHOOT_LOG", "loud")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# comment\ngamma = 2\nb = 3\n\n").unwrap();
    let c = cfg.to_str().unwrap();

    let o = gelshoot(&["params", "--config", c]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["b"], 3.0);

    let o = gelshoot(&["params", "--config", c, "--b", "4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["b"], 4.0);

    std::fs::write(&cfg, "gamma = 2\nbogus = 1\n").unwrap();
    let o = gelshoot(&["params", "--config", c]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_json(&o)["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["scan-b", "--gamma", "2", "--grid", "2.05:4:6"];
    let a = gelshoot(&args);
    let b = gelshoot(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&p1, &p2] {
        let o = gelshoot(&["stability-scan", "--gamma", "2", "--grid", "1.5:4:5", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn csv_output_has_provenance_header() {
    let o = gelshoot(&["scan-b", "--gamma", "2", "--grid", "2.05:3:3"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# gelshoot "));
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(lines.next().unwrap(), "gamma,b,class,y_event,extra");
    assert_eq!(lines.count(), 3);
}

#[test]
fn json_format_override() {
    let o = gelshoot(&["greens-q", "--grid", "0:2:3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let o = gelshoot(&["greens-q", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fig3_profile_crosses_over() {
    let o = gelshoot(&["fig3", "--gamma", "2", "--b", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<Vec<f64>> =
        rdr.records().map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 10);
    assert!(rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
    assert!(rows.windows(2).all(|w| w[1][2] > w[0][2]));
    let last = rows.last().unwrap();
    assert!((last[1] - 1.0).abs() < 1e-3, "phi does not settle at 1: {}", last[1]);
}

#[test]
fn selftest_passes() {
    for cmd in ["params", "b-star", "greens-q", "laplace"] {
        let o = gelshoot(&[cmd, "--selftest"]);
        assert!(o.status.success(), "{cmd}: {}", stdout(&o));
        let text = stdout(&o);
        assert!(text.lines().count() >= 2);
        assert!(text.lines().all(|l| l.starts_with("selftest ") && l.contains(": PASS ")));
    }
}
