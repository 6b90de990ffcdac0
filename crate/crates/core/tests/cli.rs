use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn saddlekit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saddlekit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn kernel_check_passes_with_a_complete_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = saddlekit(&["kernel-check"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("config-hash: "));
    let checks: Vec<&str> = report.lines().filter(|l| l.trim_start().starts_with("PASS") || l.trim_start().starts_with("FAIL")).collect();
    assert!(!checks.is_empty());
    for c in checks {
        assert!(c.contains("tolerance: ") && c.contains("invariant: "), "{c}");
    }
    assert!(dir.path().join("kernel.csv").is_file());
}

#[test]
fn failing_property_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("bad_table.cfg");
    let o = saddlekit(&["kernel-check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");
}

#[test]
fn numerical_failure_exits_with_three_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oscillating.cfg");
    let o = saddlekit(&["kernel-check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("numerical failure"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[grid]\nhh = 0.1\n").unwrap();
    let o = saddlekit(&["eigen", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("grid.hh"), "{}", stderr(&o));

    let missing = dir.path().join("nope.cfg");
    let o = saddlekit(&["eigen", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);

    let o = saddlekit(&["eigen", "--only", "abp"], dir.path());
    assert_eq!(code(&o), 2, "--only does not apply to eigen");
    let o = saddlekit(&["verify", "--only", "bogus"], dir.path());
    assert_eq!(code(&o), 2);
    let o = saddlekit(&["frobnicate"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn saddle_runs_are_deterministic() {
    let cfg = configs().join("quick.cfg");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = saddlekit(&["saddle", "--config", cfg.to_str().unwrap(), "--only", "asymptotic"], d.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["u.csv", "iterations.csv", "asymptotic_table.csv", "report.txt"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
}

#[test]
fn seed_selects_the_ensemble() {
    let cfg = configs().join("quick.cfg");
    let run = |seed: &str| {
        let d = tempfile::tempdir().unwrap();
        let o = saddlekit(&["verify", "--config", cfg.to_str().unwrap(), "--only", "weak-mp", "--seed", seed], d.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read_to_string(d.path().join("verdicts.csv")).unwrap()
    };
    let (a, b, c) = (run("3"), run("3"), run("4"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn torsion_and_layer_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = saddlekit(&["torsion"], &dir.path().join("t"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("t/torsion.csv").is_file());
    let cfg = configs().join("peierls_layer.cfg");
    let o = saddlekit(&["layer", "--config", cfg.to_str().unwrap()], &dir.path().join("l"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("l/report.txt")).unwrap();
    assert!(report.contains("arctan-oracle"));
}
