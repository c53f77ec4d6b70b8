use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rydres(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydres"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RYDRES_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = rydres(args, cwd);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const QUICK: &str = "[numerics]\nn_steps = 10\nsteady = false\n";

#[test]
fn prepare_row_one_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["prepare", "--out", "run"], dir.path());
    let run = dir.path().join("run");
    let s = summary(&run);
    let keys: Vec<&str> = s.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["config", "provenance", "summary"]);
    let f = s["summary"]["f"].as_f64().unwrap();
    let f_d = s["summary"]["f_d"].as_f64().unwrap();
    assert!((f - 0.999).abs() < 0.005 && (f_d - 0.992).abs() < 0.005, "{f} {f_d}");
    assert!(s["summary"]["steady"]["f_d"].as_f64().unwrap() > 0.99);
    assert_eq!(s["provenance"]["csv_schema"], 1);
    assert_eq!(first_line(&run.join("timeseries.csv")), "time,quantity,value");
    let body = std::fs::read_to_string(run.join("timeseries.csv")).unwrap();
    for q in ["p_phi_1", "p_phi_2", "p_pi_1", "p_pi_2", ",F,", ",F_D,"] {
        assert!(body.contains(q), "missing {q}");
    }
}

#[test]
fn golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        format!("{QUICK}[scan]\ngrid = [2, 2]\nbox_points = 0\n[optimize]\nbudget = 3\nstarts = 2\n[scaling]\nsizes = [2]\ntimes = [0.5]\n"),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    for (scenario, file, header) in [
        ("scan", "scan.csv", "d,delta,F_D"),
        ("scan", "contours.csv", "level,segment,d1,delta1,d2,delta2"),
        ("optimize", "trace.csv", "evaluation,omega_p,delta_p,omega_c,delta_c,value"),
        ("scaling", "scaling.csv", "n,backend,time,F,F_D"),
        ("trajectory", "jumps.csv", "trajectory,time,channel"),
        ("analytic-check", "timeseries.csv", "time,quantity,value"),
    ] {
        let out = dir.path().join(scenario);
        ok(&[scenario, "--config", c, "--out", out.to_str().unwrap()], dir.path());
        assert_eq!(first_line(&out.join(file)), header, "{scenario}/{file}");
    }
    let trace = std::fs::read_to_string(dir.path().join("optimize/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 4);
}

#[test]
fn single_cell_scan_matches_prepare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, format!("{QUICK}[scan]\nd_range = [5.0, 5.0]\ndelta_range = [2.0, 2.0]\ngrid = [1, 1]\nbox_points = 0\n")).unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["scan", "--config", c, "--out", "s"], dir.path());
    ok(&["prepare", "--config", c, "--out", "p"], dir.path());
    let scan = std::fs::read_to_string(dir.path().join("s/scan.csv")).unwrap();
    let cells: Vec<&str> = scan.lines().skip(1).collect();
    assert_eq!(cells.len(), 1);
    let cell: f64 = cells[0].split(',').nth(2).unwrap().parse().unwrap();
    let prepared = summary(&dir.path().join("p"))["summary"]["f_d"].as_f64().unwrap();
    assert!((cell - prepared).abs() < 1e-9, "{cell} vs {prepared}");
}

#[test]
fn trajectory_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[numerics]\nn_steps = 20\n[trajectory]\ncount = 3\n[lasers]\nomega_p = 30.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["trajectory", "--config", c, "--out", "a", "--seed", "7"], dir.path());
    ok(&["trajectory", "--config", c, "--out", "b", "--seed", "7"], dir.path());
    let a = std::fs::read(dir.path().join("a/jumps.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/jumps.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().lines().count() > 1, "expected at least one jump");
    assert_eq!(summary(&dir.path().join("a"))["summary"], summary(&dir.path().join("b"))["summary"]);
    ok(&["trajectory", "--config", c, "--out", "c", "--seed", "8"], dir.path());
    assert_ne!(summary(&dir.path().join("a"))["summary"], summary(&dir.path().join("c"))["summary"]);
}

fn assert_close(a: &Value, b: &Value, tol: f64, path: &str) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= tol * x.abs().max(1.0), "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                assert_close(p, q, tol, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{path}");
            for (k, v) in x {
                assert_close(v, &y[k], tol, &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[geometry]\nn = 3\n[target]\nkind = \"thermal\"\nkt_over_w = 1.2\n[lasers]\nomega_p = 9.5\nomega_c = 34.5\ndelta_p = -7.5\ndelta_c = -71.0\n[numerics]\nn_steps = 5\nsteady = false\n").unwrap();
    ok(&["prepare", "--config", cfg.to_str().unwrap(), "--out", "first", "--seed", "3"], dir.path());
    let echo = dir.path().join("first/config.toml");
    ok(&["prepare", "--config", echo.to_str().unwrap(), "--out", "second"], dir.path());
    let a = summary(&dir.path().join("first"));
    let b = summary(&dir.path().join("second"));
    assert_close(&a["summary"], &b["summary"], 1e-12, "summary");
    assert_eq!(a["config"]["numerics"]["seed"], 3);
    assert_eq!(b["config"]["numerics"], a["config"]["numerics"]);
}

#[test]
fn config_errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[numerics]\nrtol = 1e-8\nbogus = true\n").unwrap();
    let out = rydres(&["prepare", "--config", cfg.to_str().unwrap(), "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["line"], 3);
    assert!(err["error"]["message"].as_str().unwrap().contains("bogus"));
    assert!(!dir.path().join("x/summary.json").exists());
}

#[test]
fn usage_and_numeric_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = rydres(&[], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "scenario = \"scan\"\n").unwrap();
    let out = rydres(&["prepare", "--config", cfg.to_str().unwrap()], dir.path());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");

    std::fs::write(&cfg, "[geometry]\nn = 5\n[target]\nkind = \"thermal\"\nkt_over_w = 1.2\n[numerics]\nbackend = \"master_equation\"\n").unwrap();
    let out = rydres(&["prepare", "--config", cfg.to_str().unwrap(), "--out", "y"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "numeric");
    assert!(err["error"]["message"].as_str().unwrap().contains("memory policy"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, QUICK).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_rydres"))
        .args(["prepare", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("RYDRES_OUT", "from-env")
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(dir.path().join("from-env/summary.json").exists());
}
