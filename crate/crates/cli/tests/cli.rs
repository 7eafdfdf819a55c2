use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn symtube(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symtube")).args(args).current_dir(dir).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn lattice_run_passes_and_reverifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = symtube(&["lattice", "--delta", "0.4", "--out", "lat.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["runs"][0]["report"]["passed"], Value::Bool(true));
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("lat.json")).unwrap()).unwrap();
    assert_eq!(file["config_hash"], doc["config_hash"]);
    assert_eq!(file["seed"], Value::from(0));
    let again = symtube(&["lattice", "--input", "lat.json"], dir.path());
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn corrupted_lattices_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    assert!(symtube(&["lattice", "--delta", "0.4", "--out", "lat.json"], dir.path()).status.success());
    let good: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("lat.json")).unwrap()).unwrap();

    let mut missing = good.clone();
    missing["lattice"]["points"].as_array_mut().unwrap().remove(3);
    missing["lattice"]["xgrids"].as_array_mut().unwrap().remove(3);
    std::fs::write(dir.path().join("missing.json"), missing.to_string()).unwrap();

    let mut tampered = good.clone();
    tampered["config"]["seed"] = Value::from("9");
    std::fs::write(dir.path().join("tampered.json"), tampered.to_string()).unwrap();

    std::fs::write(dir.path().join("garbage.json"), "{\"lattice\": [1, 2").unwrap();

    for name in ["missing.json", "tampered.json", "garbage.json"] {
        let out = symtube(&["lattice", "--input", name], dir.path());
        assert_eq!(out.status.code(), Some(4), "{name}");
    }
}

#[test]
fn lorentz_sweep_writes_one_file_per_delta() {
    let dir = tempfile::tempdir().unwrap();
    let out = symtube(
        &["lattice", "--cone", "lorentz3", "--delta", "0.8,0.6,0.4", "--radius", "0.6", "--xbox", "0.3", "--samples", "500", "--out", "sweep/l.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for d in ["0.8", "0.6", "0.4"] {
        assert!(dir.path().join(format!("sweep/l_delta{d}.json")).exists());
    }
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    for args in [
        vec!["sampling", "--family", "0"],
        vec!["lattice", "--cone", "lorentz2"],
        vec!["lattice", "--delta", "1.5"],
        vec!["laplace", "--s", "1,2,3"],
        vec!["params", "--config", "bad.cfg"],
        vec!["params", "--config", "absent.cfg"],
        vec!["reconstruct", "--s=-0.5"],
        vec!["params", "--p0", "2"],
    ] {
        let out = symtube(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# params run\ncone = lorentz3\ns = 3/2\nseed = 3\n").unwrap();
    let doc = json(&symtube(&["params", "--config", "run.cfg", "--seed", "4"], dir.path()));
    assert_eq!(doc["seed"], Value::from(4));
    assert_eq!(doc["config"]["cone"], Value::from("lorentz3"));
    assert_eq!(doc["q_s"]["exact"], Value::from("4"));
}

#[test]
fn laplace_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let doc = json(&symtube(&["laplace", "--s", "2.5", "--y", "0.7", "--tol", "1e-9"], dir.path()));
    assert!(doc["rel_err"].as_f64().unwrap() < 1e-6, "{doc}");
}

#[test]
fn params_windows_and_reiteration() {
    let dir = tempfile::tempdir().unwrap();
    let rank1 = json(&symtube(&["params", "--s", "2"], dir.path()));
    assert_eq!(rank1["projector_window"]["satisfied"], Value::Bool(true));
    assert_eq!(rank1["q_s"]["exact"], Value::from("inf"));
    assert!(rank1.get("open_question").is_none());

    let l3 = json(&symtube(&["params", "--cone", "lorentz3", "--s", "3/2", "--theta", "1/2", "--phi", "1/2"], dir.path()));
    assert_eq!(l3["projector_window"]["satisfied"], Value::Bool(true));
    assert_eq!(l3["projector_window"]["case"], Value::from("full"));
    assert_eq!(l3["q_s_p"]["exact"], Value::from("8"));
    assert_eq!(l3["wolff"]["xi"]["exact"], Value::from("1/3"));
    assert_eq!(l3["wolff"]["psi"]["exact"], Value::from("2/3"));

    let edge = json(&symtube(&["params", "--cone", "lorentz3", "--s", "3/2", "--q", "8"], dir.path()));
    assert_eq!(edge["projector_window"]["satisfied"], Value::Bool(false));
    assert!(edge.get("open_question").is_some());

    let re = json(&symtube(
        &["params", "--cone", "lorentz3", "--s", "3/2", "--p0", "2", "--q0", "3/2", "--p1", "4", "--q1", "6", "--phi", "1/4"],
        dir.path(),
    ));
    assert_eq!(re["reiteration"]["admissible"], Value::Bool(true), "{re}");
    assert_eq!(re["reiteration"]["balance_ok"], Value::Bool(true));
}

#[test]
fn reconstruction_reports() {
    let dir = tempfile::tempdir().unwrap();
    let zero = symtube(&["reconstruct", "--target", "zero", "--delta", "0.8"], dir.path());
    assert_eq!(zero.status.code(), Some(0));
    let text = String::from_utf8(zero.stdout).unwrap();
    let row: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(row[2], "0e0");
    assert_eq!(row[3], "0e0");

    let neumann = symtube(&["reconstruct", "--mode", "neumann", "--target", "atom", "--delta", "0.8", "--iters", "8"], dir.path());
    assert_eq!(neumann.status.code(), Some(0));
    let text = String::from_utf8(neumann.stdout).unwrap();
    assert!(text.starts_with("# command=reconstruct\n# config_hash="));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.ends_with(",true") || r.ends_with(",false")));
}

#[test]
fn outputs_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 4] = [
        &["sampling", "--delta", "0.8,0.4", "--family", "4", "--seed", "11"],
        &["reconstruct", "--mode", "neumann", "--delta", "0.8", "--iters", "6", "--seed", "5"],
        &["lattice", "--cone", "sym2", "--delta", "0.8", "--radius", "0.6", "--xbox", "0.3", "--samples", "300", "--seed", "2"],
        &["params", "--cone", "sym3", "--s", "5/2", "--theta", "1/3", "--phi", "2/5"],
    ];
    for args in runs {
        let a = symtube(args, dir.path());
        let b = symtube(args, dir.path());
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let mut with_seed = runs[0].to_vec();
    let last = with_seed.len() - 1;
    with_seed[last] = "12";
    assert_ne!(symtube(runs[0], dir.path()).stdout, symtube(&with_seed, dir.path()).stdout);
}
