//! Run a configured experiment from code and print its verdicts.
//!
//! `cargo run --release --example run_experiment -- configs/moment_check.json`

use levykr::harness::{self, ExperimentConfig};

fn main() -> levykr::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/moment_check.json".into());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let report = harness::run(&cfg)?;
    println!("{}", report.columns.join(","));
    for row in report.rows.iter().take(5) {
        println!("{}", row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
    }
    println!("... {} rows", report.rows.len());
    for v in &report.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    Ok(())
}
