use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use carnot_core::calculus::{convolve, sample, GridSpec};
use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_carnot-kernels"));
    c.env_remove("CARNOT_KERNELS_CONFIG");
    c
}

fn run(c: &mut Command) -> (i32, Output) {
    let o = c.output().expect("spawn");
    (o.status.code().expect("exit code"), o)
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn write_config(dir: &Path, v: Value) -> std::path::PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn unknown_check_is_a_usage_error() {
    let (code, _) = run(bin().args(["check", "nonexistent"]));
    assert_eq!(code, 2);
    let (code, _) = run(bin().args(["frobnicate"]));
    assert_eq!(code, 2);
}

#[test]
fn invalid_configs_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let p = write_config(d.path(), json!({ "thresholds": { "group_tol": -1.0 } }));
    assert_eq!(run(bin().args(["check", "assoc", "--config"]).arg(&p)).0, 2);
    let p = write_config(d.path(), json!({ "no_such_field": 1 }));
    assert_eq!(run(bin().args(["check", "assoc", "--config"]).arg(&p)).0, 2);
    assert_eq!(run(bin().args(["check", "assoc", "--config", "/nonexistent/config.json"])).0, 2);
    assert_eq!(run(bin().args(["check", "assoc", "--samples", "0"])).0, 2);
}

#[test]
fn passing_check_prints_the_report() {
    let (code, o) = run(bin().args(["check", "assoc", "--samples", "200", "--seed", "5"]));
    assert_eq!(code, 0);
    let r = stdout_json(&o);
    for k in ["check", "params", "seed", "samples", "ratio_min", "ratio_max", "fitted", "threshold", "pass", "runtime_ms"] {
        assert!(r.get(k).is_some(), "missing {k}");
    }
    assert_eq!(r["check"], "assoc");
    assert_eq!(r["seed"], 5);
    assert_eq!(r["pass"], true);
    assert_eq!(r["runtime_ms"], 0);
    assert!(r["ratio_max"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn failing_check_exits_one_and_still_writes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("report.json");
    let (code, _) = run(bin().args(["check", "sumb", "--samples", "10", "--out"]).arg(&out));
    assert_eq!(code, 1);
    let r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["pass"], false);
    let csv = fs::read_to_string(d.path().join("report-sumb.csv")).unwrap();
    assert!(csv.starts_with("index,m,N,depth,lhs,rhs,ratio\n"));
}

#[test]
fn empty_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    let p = write_config(d.path(), json!({ "checks": [] }));
    let (code, o) = run(bin().args(["suite", "--config"]).arg(&p));
    assert_eq!(code, 0);
    let s = stdout_json(&o);
    assert_eq!(s["pass"], true);
    assert_eq!(s["checks"], json!([]));
    assert_eq!(s["reports"], json!([]));
}

#[test]
fn suite_is_reproducible_across_job_counts() {
    let d = tempfile::tempdir().unwrap();
    let p = write_config(d.path(), json!({ "checks": ["assoc", "heis-bound", "moments", "scaling"], "samples": 50 }));
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(run(bin().args(["suite", "--config"]).arg(&p).arg("--out").arg(&a)).0, 0);
    assert_eq!(run(bin().args(["suite", "--jobs", "3", "--config"]).arg(&p).arg("--out").arg(&b)).0, 0);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "suite.json"));
    assert!(names.iter().any(|n| n.to_string_lossy().ends_with(".csv")));
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    let s: Value = serde_json::from_str(&fs::read_to_string(a.join("suite.json")).unwrap()).unwrap();
    assert_eq!(s["checks"], json!(["assoc", "heis-bound", "moments", "scaling"]));
}

#[test]
fn flags_override_the_environment_config() {
    let d = tempfile::tempdir().unwrap();
    let p = write_config(d.path(), json!({ "seed": 11, "samples": 30 }));
    let (code, o) = run(bin().env("CARNOT_KERNELS_CONFIG", &p).args(["check", "heis-bound"]));
    assert_eq!(code, 0);
    assert_eq!(stdout_json(&o)["seed"], 11);
    let (_, o) = run(bin().env("CARNOT_KERNELS_CONFIG", &p).args(["check", "heis-bound", "--seed", "12", "--alpha", "1"]));
    let r = stdout_json(&o);
    assert_eq!(r["seed"], 12);
    assert_eq!(r["samples"], 30);
}

#[test]
fn dist_and_volume_print_values() {
    let (code, o) = run(bin().args(["dist", "--side", "L", "--eps", "0", "--p", "1,0,0", "--q", "0,0,0"]));
    assert_eq!(code, 0);
    let v = stdout_json(&o);
    assert_eq!(v["value"], 1.0);
    assert_eq!(v["method"], "surrogate");
    let (code, o) = run(bin().args(["dist", "--side", "L", "--eps", "1", "--p", "1,0,0", "--q", "0,0,0", "--oracle"]));
    assert_eq!(code, 0);
    let v = stdout_json(&o)["value"].as_f64().unwrap();
    assert!((0.9..=1.5).contains(&v));
    let (code, o) = run(bin().args(["volume", "--side", "R", "--eps", "0", "--center", "-1,2,3", "--delta", "2"]));
    assert_eq!(code, 0);
    assert_eq!(stdout_json(&o)["value"], 16.0);
    assert_eq!(run(bin().args(["volume", "--side", "L", "--eps", "2", "--center", "0,0,0", "--delta", "1"])).0, 2);
    assert_eq!(run(bin().args(["dist", "--side", "L", "--eps", "0", "--p", "1,0", "--q", "0,0,0"])).0, 2);
}

fn grid_json(spec: &GridSpec, values: &[f64]) -> Value {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    json!({ "box": { "lo": spec.lo, "hi": spec.hi }, "n": spec.n, "values": STANDARD.encode(bytes) })
}

#[test]
fn convolve_matches_the_library() {
    let d = tempfile::tempdir().unwrap();
    let spec = GridSpec::centered(1.5, 1.5, 6).unwrap();
    let f = sample(|u| (-(u.x * u.x + u.y * u.y + u.t * u.t)).exp(), &spec).unwrap();
    let g = sample(|u| u.x * (-2.0 * (u.x * u.x + u.y * u.y) - u.t * u.t).exp(), &spec).unwrap();
    fs::write(d.path().join("f.json"), grid_json(&spec, &f.values).to_string()).unwrap();
    fs::write(d.path().join("g.json"), grid_json(&spec, &g.values).to_string()).unwrap();
    let out = d.path().join("c.json");
    let (code, _) = run(bin()
        .current_dir(d.path())
        .args(["convolve", "--f", "f.json", "--g", "g.json", "--out"])
        .arg(&out));
    assert_eq!(code, 0);
    let c: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let bytes = STANDARD.decode(c["values"].as_str().unwrap()).unwrap();
    let got: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    assert_eq!(got, convolve(&f, &g).unwrap().values);

    let other = GridSpec::centered(1.0, 1.0, 6).unwrap();
    fs::write(d.path().join("h.json"), grid_json(&other, &f.values).to_string()).unwrap();
    let (code, _) = run(bin().current_dir(d.path()).args(["convolve", "--f", "f.json", "--g", "h.json", "--out", "x.json"]));
    assert_eq!(code, 2);
}
