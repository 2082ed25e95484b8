use std::path::Path;
use std::process::{Command, Output};

use hilbert_workbench::workbench::{emit_csv, emit_json, parse_csv, parse_json, Cell};
use tempfile::TempDir;

fn workbench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workbench"))
        .args(args)
        .current_dir(dir)
        .env_remove("WORKBENCH_SEED")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_csv() {
    let dir = TempDir::new().unwrap();
    let out = workbench(dir.path(), &["eq3", "--out", "eq3.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!stdout.contains("FAIL"));
    let table = parse_csv(&read(dir.path(), "eq3.csv")).unwrap();
    assert_eq!(table.columns, ["observable", "lhs", "rhs", "gap"]);
}

#[test]
fn single_cat_sample_emits_one_row() {
    let dir = TempDir::new().unwrap();
    let out = workbench(dir.path(), &["cat", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let table = parse_csv(&read(dir.path(), "cat.csv")).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert!(matches!(table.rows[0][1], Cell::Float(v) if v == 1.0 || v == -1.0));
}

#[test]
fn well_spectrum_emits_five_levels() {
    let dir = TempDir::new().unwrap();
    let out = workbench(dir.path(), &["well-spectrum", "--grid-n", "2000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = parse_csv(&read(dir.path(), "well-spectrum.csv")).unwrap();
    assert_eq!(table.columns, ["n", "numeric", "analytic", "rel_err"]);
    assert_eq!(table.rows.len(), 5);
}

#[test]
fn failing_check_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = workbench(dir.path(), &["spread", "--grid-n", "128", "--tol-spread", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().lines().any(|l| l.starts_with("FAIL width_rel_err")));
}

#[test]
fn usage_and_validation_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["cat", "--hbar", "-1"][..],
        &["cat", "--bogus", "3"],
        &["telepathy"],
        &["cat", "--a1", "1", "--a2", "1"],
        &["spread", "--times", "0.3,0.1"],
        &[],
    ] {
        let out = workbench(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        assert!(!out.stderr.is_empty());
    }
    std::fs::write(dir.path().join("bad.conf"), "n = 10\nwavelength = 3\n").unwrap();
    assert_eq!(workbench(dir.path(), &["cat", "--config", "bad.conf"]).status.code(), Some(2));
    assert!(!dir.path().join("cat.csv").exists());
}

#[test]
fn io_errors_exit_three() {
    let dir = TempDir::new().unwrap();
    let out = workbench(dir.path(), &["cat", "--config", "missing.conf"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains("missing.conf"));
    let out = workbench(dir.path(), &["cat", "--n", "5", "--out", "no/such/dir/cat.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn same_seed_gives_byte_identical_files() {
    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    for format in ["csv", "json"] {
        let name = format!("cat.{format}");
        for dir in [&first, &second] {
            let out = workbench(dir.path(), &["cat", "--n", "500", "--seed", "9", "--format", format, "--out", &name]);
            assert_eq!(out.status.code(), Some(0));
        }
        assert_eq!(read(first.path(), &name), read(second.path(), &name));
    }
    workbench(second.path(), &["cat", "--n", "500", "--seed", "10"]);
    assert_ne!(read(first.path(), "cat.csv"), read(second.path(), "cat.csv"));
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = TempDir::new().unwrap();
    workbench(dir.path(), &["cat", "--n", "300", "--seed", "77", "--out", "flag.csv"]);
    let out = Command::new(env!("CARGO_BIN_EXE_workbench"))
        .args(["cat", "--n", "300", "--out", "env.csv"])
        .current_dir(dir.path())
        .env("WORKBENCH_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(dir.path(), "flag.csv"), read(dir.path(), "env.csv"));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# cat ensemble\nn = 100\nseed = 3\nformat = json\n").unwrap();
    let out = workbench(dir.path(), &["cat", "--config", "run.conf", "--n", "200", "--out", "run.json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parse_json(&read(dir.path(), "run.json")).unwrap();
    assert_eq!(doc.config.n, 200);
    assert_eq!(doc.config.seed, 3);
    assert_eq!(doc.table.rows.len(), 200);
}

#[test]
fn emitted_files_round_trip() {
    let dir = TempDir::new().unwrap();
    for experiment in ["eq3", "vn-generator", "claims"] {
        let json = format!("{experiment}.json");
        let csv = format!("{experiment}.csv");
        workbench(dir.path(), &[experiment, "--n", "20", "--format", "json", "--out", &json]);
        workbench(dir.path(), &[experiment, "--n", "20", "--out", &csv]);
        let json_text = read(dir.path(), &json);
        let doc = parse_json(&json_text).unwrap();
        assert_eq!(emit_json(&doc), json_text);
        assert!(doc.checks.iter().all(|c| c.pass));
        let csv_text = read(dir.path(), &csv);
        let table = parse_csv(&csv_text).unwrap();
        assert_eq!(emit_csv(&table), csv_text);
        assert_eq!(table, doc.table);
    }
}

#[test]
fn help_exits_zero() {
    let dir = TempDir::new().unwrap();
    let out = workbench(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("well-spectrum"));
}
