use std::path::Path;
use std::process::Command;

use levykr::harness::{self, read_rows, recompute_verdicts, ExperimentConfig};

/// Desk-sized versions of every experiment.
const SMALL: [&str; 5] = [
    r#"{"experiment": "validate-scaling", "particles": 256, "record_count": 2, "seeds": [0, 1, 2]}"#,
    r#"{"experiment": "mollify-sweep", "coefficients": "kinked", "particles": 128, "p": 2.0, "mollify_ladder": [4, 8], "seeds": [0, 1]}"#,
    r#"{"experiment": "superposition-check", "particle_ladder": [64, 128], "spacing_ladder": [0.03125, 0.015625], "record_count": 1, "seeds": [0, 1]}"#,
    r#"{"experiment": "moment-check", "particles": 200, "seeds": [0, 1, 2]}"#,
    r#"{"experiment": "relations-check", "pairs": 10, "pair_size": 8, "seeds": [4]}"#,
];

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical() {
    for text in SMALL {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        harness::run(&cfg).unwrap().write_to(a.path()).unwrap();
        harness::run(&cfg).unwrap().write_to(b.path()).unwrap();
        let (fa, fb) = (files(a.path()), files(b.path()));
        assert_eq!(fa.len(), 2);
        assert_eq!(fa, fb, "{text}");
    }
}

#[test]
fn verdicts_recompute_from_the_written_rows() {
    for text in SMALL {
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let report = harness::run(&cfg).unwrap();
        let mut buf = Vec::new();
        report.write_rows(&mut buf).unwrap();
        let (columns, rows) = read_rows(buf.as_slice()).unwrap();
        assert_eq!(columns, report.columns);
        let again = recompute_verdicts(report.kind, &columns, &rows).unwrap();
        let strip = |v: &[harness::Verdict]| v.iter().map(|v| (v.name.clone(), v.passed)).collect::<Vec<_>>();
        assert_eq!(strip(&again), strip(&report.verdicts), "{text}");
    }
}

#[test]
fn base_seed_changes_the_draws() {
    let cfg = ExperimentConfig::from_json(SMALL[3]).unwrap();
    let a = harness::run(&cfg).unwrap();
    let b = harness::run(&cfg.with_base_seed(100)).unwrap();
    assert_ne!(a.rows, b.rows);
}

#[test]
fn cli_exit_code_follows_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("moments.json");
    std::fs::write(&config, SMALL[3]).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_levykr"))
        .args(["validate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("moment-check.csv").exists());
    assert!(String::from_utf8_lossy(&status.stdout).lines().all(|l| l.starts_with("PASS")));

    std::fs::write(&config, r#"{"experiment": "moment-check", "particles": 0}"#).unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_levykr")).args(["validate", "--config"]).arg(&config).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn distance_subcommand_reads_measure_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    std::fs::write(&a, "x_1,weight\n0.0,1.0\n").unwrap();
    std::fs::write(&b, "x_1,weight\n1.0,1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_levykr"))
        .arg("distance")
        .arg(&a)
        .arg(&b)
        .args(["--delta", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    let value: f64 = line.split(',').next().unwrap().parse().unwrap();
    assert!((value - 5f64.ln()).abs() < 1e-12, "{line}");
}
