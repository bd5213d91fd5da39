use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn qsvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsvm"))
        .args(args)
        .env("QSVM_WORKERS", "2")
        .output()
        .expect("spawn qsvm")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_data_is_reproducible_and_labelled() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for out in [&a, &b] {
        let o = qsvm(&[
            "gen-data", "--seed", "5", "--set", "N=16", "--set", "m=16", "--set", "s=0",
            "--out", path(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows: Vec<serde_json::Value> = text
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        // s = 0, N = 16: marked elements 0..8 are positive.
        let marked = r["marked"].as_u64().unwrap();
        let expected = if marked < 8 { "+1" } else { "-1" };
        assert_eq!(r["label"], expected);
    }
}

#[test]
fn m_above_n_is_invalid_config() {
    let o = qsvm(&["gen-data", "--seed", "1", "--set", "N=16", "--set", "m=32"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_seed_is_invalid_config() {
    let o = qsvm(&["run", "--set", "N=16"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_key_is_invalid_config() {
    let o = qsvm(&["run", "--seed", "1", "--set", "N=16", "--set", "shots_per_kernel=3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn run_reports_are_byte_identical() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "N = 64\nm = 8\nR = 200\ntrials = 3\ntest_points = 16\nseed = 11\n",
    )
    .unwrap();
    let mut files = Vec::new();
    for name in ["x", "y"] {
        let out = dir.path().join(format!("{name}.jsonl"));
        let o = qsvm(&["run", "--config", path(&cfg), "--out", path(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.push((
            std::fs::read(&out).unwrap(),
            std::fs::read(out.with_extension("csv")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
    let header = String::from_utf8(files[0].0.clone()).unwrap();
    assert!(header.starts_with("{\"record\":\"header\",\"schema_version\":1"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "N = 64\nm = 8\ntrials = 3\ntest_points = 8\nseed = 11\nlearner = \"quantum_kernel\"\n").unwrap();
    let out = dir.path().join("r.jsonl");
    let o = qsvm(&[
        "run", "--config", path(&cfg), "--learner", "classical", "--trials", "2",
        "--set", "X=0", "--out", path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["config"]["learner"], "classical");
    assert_eq!(header["config"]["trials"], 2);
    assert_eq!(header["config"]["X"], 0);
}

#[test]
fn sweep_needs_four_sizes() {
    let o = qsvm(&["sweep", "--seed", "1", "--set", "N=64", "--set", "sweep_N=[16, 32, 64]"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn pattern_demo_reports_location() {
    let dir = tempdir().unwrap();
    let texts = dir.path().join("t.txt");
    std::fs::write(&texts, "10110010\n").unwrap();
    let o = qsvm(&["pattern-demo", path(&texts), "110"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("t=2"), "{stdout}");
    assert!(stdout.contains("p=0.945313"), "{stdout}");
}

#[test]
fn pattern_equal_to_text_is_at_zero() {
    let dir = tempdir().unwrap();
    let texts = dir.path().join("t.txt");
    std::fs::write(&texts, "10110010\n").unwrap();
    let o = qsvm(&["pattern-demo", path(&texts), "10110010"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("t=0"));
}

#[test]
fn absent_pattern_is_domain_failure() {
    let dir = tempdir().unwrap();
    let texts = dir.path().join("t.txt");
    std::fs::write(&texts, "10110010\n").unwrap();
    assert_eq!(code(&qsvm(&["pattern-demo", path(&texts), "111"])), 4);
}

#[test]
fn non_binary_text_is_invalid_input() {
    let dir = tempdir().unwrap();
    let texts = dir.path().join("t.txt");
    std::fs::write(&texts, "1011a010\n").unwrap();
    assert_eq!(code(&qsvm(&["pattern-demo", path(&texts), "110"])), 2);
}

#[test]
fn resource_cap_is_reported_per_trial() {
    // Faithful kernel circuits at N = 2^13 need 26 qubits.
    let o = qsvm(&[
        "run", "--seed", "1", "--set", "N=8192", "--set", "m=4", "--set", "R=10",
        "--trials", "2", "--set", "test_points=2", "--backend", "faithful",
        "--learner", "quantum_kernel",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.matches("resource cap exceeded").count(), 2, "{stdout}");
    assert!(stdout.contains("\"failed\":2"), "{stdout}");
}

#[test]
fn selftest_passes() {
    let o = qsvm(&["selftest"]);
    assert_eq!(code(&o), 0);
    assert!(!String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}
