//! End-to-end checks of the binary: file round trips, stdout formats,
//! exit codes, and seed defaults.

use std::path::Path;
use std::process::{Command, Output};

use copula_transport::io;
use copula_transport::{bin_copula, empirical_copula_transform, Signature};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_copula-transport"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_fail(args: &[&str]) -> (i32, String) {
    let out = run(args);
    assert!(!out.status.success(), "command {:?} unexpectedly passed", args);
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn same_signature(a: &Signature, b: &Signature) -> bool {
    a.dimension() == b.dimension()
        && a.resolution() == b.resolution()
        && a.len() == b.len()
        && a.atoms().iter().zip(b.atoms()).all(|(x, y)| {
            x.weight.to_bits() == y.weight.to_bits()
                && x.position
                    .iter()
                    .zip(&y.position)
                    .all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

#[test]
fn transform_output_rebins_to_the_in_memory_signature() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let ranks = dir.path().join("ranks.csv");
    run_ok(&[
        "gen", "pattern", "--kind", "cubic", "--noise", "0.7", "--n", "300",
        "--seed", "11", "--out", raw.to_str().unwrap(),
    ]);
    run_ok(&[
        "transform", "--input", raw.to_str().unwrap(), "--out", ranks.to_str().unwrap(),
    ]);

    let (panel, _) = io::read_panel_csv(&raw).unwrap();
    let in_memory = empirical_copula_transform(&panel);
    let (from_cli, _) = io::read_panel_csv(&ranks).unwrap();
    assert_eq!(from_cli.rows(), in_memory.rows());
    for t in 0..in_memory.rows() {
        for j in 0..in_memory.cols() {
            assert_eq!(from_cli.get(t, j).to_bits(), in_memory.get(t, j).to_bits());
        }
    }

    // and re-binning the file reproduces the in-memory signature exactly
    let rebinned = bin_copula(
        &empirical_copula_transform(&from_cli),
        8,
    )
    .unwrap();
    let direct = bin_copula(&in_memory, 8).unwrap();
    assert!(same_signature(&rebinned, &direct));
}

#[test]
fn emd_solvers_agree_within_a_hundredth() {
    let dir = tempfile::tempdir().unwrap();
    let quad = dir.path().join("quad.csv");
    let sine = dir.path().join("sine.csv");
    run_ok(&["gen", "pattern", "--kind", "quadratic", "--n", "400", "--seed", "3",
             "--out", quad.to_str().unwrap()]);
    run_ok(&["gen", "pattern", "--kind", "sine_low", "--n", "400", "--seed", "4",
             "--out", sine.to_str().unwrap()]);
    let to_sig = |csv: &Path, out: &Path| {
        let (panel, _) = io::read_panel_csv(csv).unwrap();
        let sig = bin_copula(&empirical_copula_transform(&panel), 8).unwrap();
        io::write_signature_json(out, &sig).unwrap();
    };
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    to_sig(&quad, &a);
    to_sig(&sine, &b);

    let exact: f64 = run_ok(&["emd", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap()])
        .trim()
        .parse()
        .unwrap();
    let approx: f64 = run_ok(&[
        "emd", "--a", a.to_str().unwrap(), "--b", b.to_str().unwrap(),
        "--solver", "sinkhorn", "--epsilon", "0.001",
    ])
    .trim()
    .parse()
    .unwrap();
    assert!(exact > 0.0);
    assert!(
        (exact - approx).abs() < 1e-2,
        "exact {exact} vs sinkhorn {approx}"
    );
}

#[test]
fn tdc_prints_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    run_ok(&["gen", "pattern", "--kind", "linear", "--noise", "0.2", "--n", "200",
             "--seed", "5", "--out", x.to_str().unwrap()]);
    run_ok(&["gen", "pattern", "--kind", "linear", "--noise", "0.2", "--n", "200",
             "--seed", "6", "--out", y.to_str().unwrap()]);
    let stdout = run_ok(&[
        "tdc", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(), "--grid", "8",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let value = doc["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&value));
    assert!(doc["activated"].is_string());
    assert!(doc["independence_distance"].as_f64().unwrap() >= 0.0);
    assert!(doc["target_distances"].is_array());
}

#[test]
fn matrix_and_cluster_recover_generated_classes() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    run_ok(&[
        "gen", "dataset", "--per-class", "3", "--t", "160", "--seed", "21",
        "--out-dir", ds.to_str().unwrap(),
    ]);
    let dist = dir.path().join("dist.json");
    run_ok(&[
        "matrix", "--manifest", ds.join("manifest.json").to_str().unwrap(),
        "--grid", "8", "--out", dist.to_str().unwrap(),
    ]);
    let dm = io::read_matrix_json(&dist).unwrap();
    assert_eq!(dm.len(), 6);

    let stdout = run_ok(&["cluster", "--matrix", dist.to_str().unwrap(), "--k", "2"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let assignments: Vec<u64> = doc["assignments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(assignments, [0, 0, 0, 1, 1, 1]);
}

#[test]
fn targets_file_feeds_tdc() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let y = dir.path().join("y.csv");
    run_ok(&["gen", "pattern", "--kind", "quadratic", "--n", "300", "--seed", "9",
             "--out", x.to_str().unwrap()]);
    run_ok(&["gen", "pattern", "--kind", "quadratic", "--n", "300", "--seed", "10",
             "--out", y.to_str().unwrap()]);
    let targets = dir.path().join("targets.json");
    // both panels are bivariate, so targets live on the stacked 4-d grid
    std::fs::write(
        &targets,
        r#"{
            "diag": {"kind": "monotone", "orientation": [1, 1, 1, 1]},
            "anti": {"kind": "monotone", "orientation": [1, 1, -1, -1]}
        }"#,
    )
    .unwrap();
    let stdout = run_ok(&[
        "tdc", "--x", x.to_str().unwrap(), "--y", y.to_str().unwrap(),
        "--targets", targets.to_str().unwrap(), "--grid", "8",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let activated = doc["activated"].as_str().unwrap();
    assert!(activated == "diag" || activated == "anti");
}

#[test]
fn default_seed_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run_ok(&["gen", "pattern", "--kind", "sine_high", "--n", "100", "--out", a.to_str().unwrap()]);
    run_ok(&["gen", "pattern", "--kind", "sine_high", "--n", "100", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn exit_codes_separate_usage_data_and_numerical_errors() {
    let dir = tempfile::tempdir().unwrap();

    // usage: bad estimator name
    let (code, msg) = run_fail(&["power", "--estimators", "psych", "--trials", "100"]);
    assert_eq!(code, 2, "{msg}");

    // usage: clap-level parse failure
    let (code, _) = run_fail(&["emd", "--a"]);
    assert_eq!(code, 2);

    // data: ragged csv, message names the file
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n3\n").unwrap();
    let good = dir.path().join("good.csv");
    std::fs::write(&good, "a,b\n1,2\n3,4\n5,6\n").unwrap();
    let (code, msg) = run_fail(&[
        "intra", "--a", bad.to_str().unwrap(), "--b", good.to_str().unwrap(),
    ]);
    assert_eq!(code, 3, "{msg}");
    assert!(msg.contains("bad.csv"), "diagnostic must name the file: {msg}");

    // data: non-numeric cell, message names row and column
    let words = dir.path().join("words.csv");
    std::fs::write(&words, "a,b\n1,2\nx,4\n").unwrap();
    let (code, msg) = run_fail(&[
        "intra", "--a", words.to_str().unwrap(), "--b", good.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    assert!(msg.contains("row 2"), "{msg}");

    // numerical: every rdc trial fails (sample smaller than projection count)
    let (code, msg) = run_fail(&[
        "power", "--estimators", "rdc", "--patterns", "linear", "--levels", "0",
        "--trials", "100", "--n", "10",
    ]);
    assert_eq!(code, 4, "{msg}");
}
