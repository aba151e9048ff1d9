use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const DAMPED: &str = "# damped harmonic oscillator\n\
    -(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad) - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wignerkit"))
        .current_dir(dir)
        .args(args)
        .env_remove("WIGNERKIT_THREADS")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Exit code and the parsed one-line JSON error.
fn failure(dir: &Path, args: &[&str]) -> (i32, Value) {
    let out = run(dir, args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    (out.status.code().unwrap(), serde_json::from_str(stderr.trim_end()).unwrap())
}

#[test]
fn fock1_is_nowhere_positive_above_q_ordering() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["state", "make", "fock", "--n", "1", "--dim", "20", "-o", "rho.json"]);
    ok(d, &["wigner", "--rho", "rho.json", "--s", "0", "--grid", "-4:4:41", "-o", "w.json", "--csv", "w.csv"]);
    ok(d, &["positivity", "--rho", "rho.json", "--grid", "-4:4:41", "-o", "pos.json"]);
    let pos = json(d.join("pos.json"));
    assert!((pos["s_star"].as_f64().unwrap() + 1.0).abs() <= 1e-3, "{pos}");
    let w = json(d.join("w.json"));
    assert_eq!(w["method"], "w1");
    assert_eq!(w["metadata"]["deterministic"], true);
    assert_eq!(w["metadata"]["tool"], "wignerkit");
    assert!(w["metadata"]["tolerances"].is_object());
    let csv = std::fs::read_to_string(d.join("w.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,w"));
    assert_eq!(csv.lines().count(), 1 + 41 * 41);
}

#[test]
fn field_inverts_back_to_the_state() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["state", "make", "coherent", "--beta", "0.5,-0.25", "--dim", "20", "-o", "rho.json"]);
    ok(d, &["wigner", "--rho", "rho.json", "--s", "-0.5", "--grid", "-4:4:81", "-o", "w.json"]);
    ok(d, &["invert", "--field", "w.json", "--dim", "10", "-o", "back.json", "--report", "diag.json"]);
    let a = json(d.join("rho.json"));
    let b = json(d.join("back.json"));
    for n in 0..=10 {
        for m in 0..=10 {
            for k in 0..2 {
                let x = a["rows"][n][m][k].as_f64().unwrap();
                let y = b["rows"][n][m][k].as_f64().unwrap();
                assert!((x - y).abs() < 1e-4, "({n},{m})");
            }
        }
    }
    let diag = json(d.join("diag.json"));
    assert!(diag["trace_defect"].as_f64().unwrap() < 1e-4, "{diag}");
}

#[test]
fn marginal_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["state", "make", "vacuum", "--dim", "4", "-o", "rho.json"]);
    ok(d, &["wigner", "--rho", "rho.json", "--s", "0", "--grid", "-4:4:64", "-o", "w.json"]);
    ok(d, &["marginal", "--field", "w.json", "--phi", "0.5", "-o", "m.csv"]);
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,p"));
    for l in lines {
        let (x, p) = l.split_once(',').unwrap();
        let (x, p): (f64, f64) = (x.parse().unwrap(), p.parse().unwrap());
        let want = (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * x * x).exp();
        assert!((p - want).abs() < 1e-6);
    }
}

#[test]
fn compile_prints_fokker_planck_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("damped.txt"), DAMPED).unwrap();
    ok(d, &["compile", "--master", "damped.txt", "--s", "symbolic", "-o", "fp.json"]);
    let fp = json(d.join("fp.json"));
    assert_eq!(fp["drift_alpha"], "1/2*g");
    assert_eq!(fp["drift_conj"], "1/2*g");
    assert_eq!(fp["diffusion"], "1/2*g + N*g - 1/2*g*s");
    assert_eq!(fp["residual_terms"], Value::Array(vec![]));
    assert_eq!(fp["trace_preserving"], true);
    ok(d, &["compile", "--master", "damped.txt", "--bind", "g=1", "N=1", "--s", "0", "-o", "fp0.json"]);
    let fp = json(d.join("fp0.json"));
    assert_eq!(fp["diffusion"], "3/2");
    assert_eq!(fp["drift_alpha"], "1/2");
}

fn simulate_args<'a>(csv: &'a str, field: &'a str) -> Vec<&'a str> {
    vec![
        "simulate", "--fp", "fp.json", "--init", "coherent:1,0.5", "--t", "1", "--dt", "0.05", "--n", "5000",
        "--seed", "7", "--scheme", "euler-maruyama", "--bind", "g=1", "N=0.5", "--s", "0", "-o", csv, "--field",
        field,
    ]
}

#[test]
fn repeated_simulations_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("damped.txt"), DAMPED).unwrap();
    ok(d, &["compile", "--master", "damped.txt", "-o", "fp.json"]);
    let read = |p: &str| std::fs::read(d.join(p)).unwrap();
    std::fs::create_dir(d.join("a")).unwrap();
    std::fs::create_dir(d.join("b")).unwrap();
    ok(d, &simulate_args("a/ens.csv", "a/kde.json"));
    ok(d, &simulate_args("b/ens.csv", "b/kde.json"));
    assert_eq!(read("a/ens.csv"), read("b/ens.csv"));
    // the command line is part of the metadata
    let strip = |p: &str| {
        let mut v = json(d.join(p));
        v.as_object_mut().unwrap().remove("metadata");
        v
    };
    assert_eq!(strip("a/ens.json"), strip("b/ens.json"));
    assert_eq!(strip("a/kde.json"), strip("b/kde.json"));
    // worker count does not change the ensemble
    let mut args = simulate_args("b/ens.csv", "b/kde.json");
    args.extend(["--threads", "1"]);
    ok(d, &args);
    assert_eq!(read("a/ens.csv"), read("b/ens.csv"));
    let sidecar = json(d.join("a/ens.json"));
    assert_eq!(sidecar["seed"], 7);
    assert_eq!(sidecar["steps"], 20);
}

#[test]
fn equilibrium_reconstruction() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("damped.txt"), DAMPED).unwrap();
    ok(d, &["compile", "--master", "damped.txt", "--bind", "g=1", "N=1", "--s", "0", "-o", "fp.json"]);
    ok(d, &[
        "simulate", "--fp", "fp.json", "--init", "vacuum", "--t", "15", "--dt", "1", "--n", "40000", "--seed", "3",
        "-o", "ens.csv",
    ]);
    ok(d, &["reconstruct", "--ensemble", "ens.csv", "--s", "0", "--dim", "20", "-o", "rho.json", "--report", "r.json"]);
    let rho = json(d.join("rho.json"));
    let n: f64 = (0..=20).map(|k| k as f64 * rho["rows"][k][k][0].as_f64().unwrap()).sum();
    // σ(n) ≈ 1.5/√N
    assert!((n - 1.0).abs() < 4.0 * 1.5 / 200.0, "{n}");
    let report = json(d.join("r.json"));
    assert_eq!(report["n_samples"], 40000);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["state", "make", "fock", "--n", "1", "--dim", "5", "-o", "rho.json"]);

    let (code, e) = failure(d, &["wigner", "--rho", "rho.json", "--s", "-1", "--grid", "-2:2:5", "--method", "w2", "-o", "w.json"]);
    assert_eq!(code, 3);
    assert_eq!(e["error"]["kind"], "validation");
    assert_eq!(e["error"]["code"], 3);

    let (code, e) = failure(d, &["wigner", "--rho", "rho.json", "--grid", "-2:2:5", "-o", "w.json"]);
    assert_eq!(code, 2);
    assert_eq!(e["error"]["kind"], "usage");
    assert_eq!(failure(d, &["frobnicate"]).0, 2);
    assert_eq!(failure(d, &["wigner", "--rho", "rho.json", "--s", "0", "--grid", "2:-2:5", "-o", "w.json"]).0, 3);

    let (code, e) = failure(d, &["wigner", "--rho", "missing.json", "--s", "0", "--grid", "-2:2:5", "-o", "w.json"]);
    assert_eq!(code, 3);
    assert!(e["error"]["message"].as_str().unwrap().contains("missing.json"));

    let (code, _) = failure(d, &["state", "make", "fock", "--n", "9", "--dim", "5", "-o", "x.json"]);
    assert_eq!(code, 3);

    std::fs::write(d.join("bad.txt"), "a*rho +\n  (a*rho").unwrap();
    let (code, e) = failure(d, &["compile", "--master", "bad.txt", "-o", "fp.json"]);
    assert_eq!(code, 3);
    assert!(e["error"]["message"].as_str().unwrap().contains("line"), "{e}");

    std::fs::write(d.join("damped.txt"), DAMPED).unwrap();
    ok(d, &["compile", "--master", "damped.txt", "-o", "fp.json"]);
    let (code, e) = failure(d, &[
        "simulate", "--fp", "fp.json", "--init", "vacuum", "--t", "1", "--dt", "0.1", "--n", "10", "--seed", "1",
        "--bind", "g=1", "N=0", "--s", "3", "-o", "e.csv",
    ]);
    assert_eq!(code, 3);
    assert!(e["error"]["message"].as_str().unwrap().contains("not simulable"));
}
