use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_loopnet");

const TWO_VERTEX: &str =
    r#"{"vertices": 2, "edges": [{"u": 0, "v": 1, "c": 1.0}], "killing": [1.0, 1.0]}"#;
const TREE: &str = r#"{"vertices": 3, "edges": [{"u": 0, "v": 1, "c": 1.0}, {"u": 1, "v": 2, "c": 2.0}], "killing": [1.0, 0.5, 1.0]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sample_is_deterministic_in_seed() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", TWO_VERTEX);
    let a = run(&[
        "sample",
        "--graph",
        &g,
        "--seed",
        "7",
        "--n",
        "50",
        "--occupation",
    ]);
    let b = run(&[
        "sample",
        "--graph",
        &g,
        "--seed",
        "7",
        "--n",
        "50",
        "--occupation",
    ]);
    let c = run(&[
        "sample",
        "--graph",
        &g,
        "--seed",
        "8",
        "--n",
        "50",
        "--occupation",
    ]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert!(stdout(&a).starts_with("eulerian\n"));
}

#[test]
fn sampled_file_feeds_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", TWO_VERTEX);
    let out = dir.path().join("nets.txt");
    let s = run(&[
        "sample",
        "--graph",
        &g,
        "--seed",
        "1",
        "--n",
        "20",
        "--alpha",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(s.status.success());
    let p = run(&["pmf", "--graph", &g, "--network", out.to_str().unwrap()]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    assert_eq!(stdout(&p).lines().count(), 20);
}

#[test]
fn pmf_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", TWO_VERTEX);
    let n = write(
        dir.path(),
        "n.txt",
        "eulerian\n# empty network first\n--\n0 1 1\n1 0 1\n",
    );
    let o = run(&["pmf", "--graph", &g, "--network", &n]);
    assert!(o.status.success());
    let v: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    // det(I - P) = 3/4; one exchange carries (1/2)^2.
    assert!((v[0] - 0.75).abs() < 1e-15);
    assert!((v[1] - 0.1875).abs() < 1e-15);
}

#[test]
fn non_eulerian_network_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", TWO_VERTEX);
    let n = write(dir.path(), "n.txt", "eulerian\n0 1 2\n1 0 1\n");
    let o = run(&["pmf", "--graph", &g, "--network", &n]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_graph_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "g.json",
        "{\"vertices\": 2,\n \"edges\": [{\"u\": 0, \"v\": 1, \"c\": 1.0,}]}",
    );
    let n = write(dir.path(), "n.txt", "eulerian\n");
    let o = run(&["pmf", "--graph", &g, "--network", &n]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["sample", "--graph", "x.json"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn tree_has_trivial_homology() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.json", TREE);
    let o = run(&["homology", "--graph", &g]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert!((lines[0]["pmf"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn verify_passes_and_perturbation_fails() {
    let ok = run(&["verify", "--quick", "--only", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(reports[0]["test_id"], "01-normalization");
    let bad = run(&["verify", "--only", "2", "--perturb", "0.1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn complete_graph_forms_agree() {
    let o = run(&["complete-graph", "--d", "6", "--kappa", "0.5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a = v["expected_chi"].as_f64().unwrap();
    let b = v["expected_chi_general"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-10);
}
