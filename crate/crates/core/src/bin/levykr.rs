use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use levykr::commands::{self, CommandOutput};
use levykr::harness::{self, ExperimentConfig, Verdict};
use levykr::ot::{CostKind, Solver};

#[derive(Parser)]
#[command(
    name = "levykr",
    version,
    about = "Lévy SDE simulation, Fokker-Planck grids and log-cost transport distances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Base seed; replaces the configured seed list by seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cost {
    Tilde,
    Plain,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one ensemble; writes trajectory.csv and moments.csv.
    Simulate(Common),
    /// Distance between two measure CSVs; prints value,solver,gap,wall_time.
    Distance {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_enum, default_value = "tilde")]
        cost: Cost,
        #[arg(long)]
        delta: f64,
        /// Entropic regularization (default 0.01 × median cost).
        #[arg(long)]
        reg: Option<f64>,
        #[arg(long, conflicts_with = "entropic")]
        exact: bool,
        #[arg(long)]
        entropic: bool,
        /// Also write the line to <out>/distance.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the 1-d Fokker-Planck equation; writes density snapshots.
    Fpe(Common),
    /// Mollify the configured coefficients along the mollification ladder.
    Mollify(Common),
    /// Evaluate the stability-bound terms along the perturbation ladder.
    Terms(Common),
    /// Run the configured experiment and write its report and verdicts.
    Validate(Common),
}

fn load(c: &Common) -> levykr::Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg = cfg.with_base_seed(s);
    }
    let out = c.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        if v.detail.is_empty() {
            println!("{tag} {}", v.name);
        } else {
            println!("{tag} {}: {}", v.name, v.detail);
        }
    }
}

fn finish(out: CommandOutput) -> bool {
    for f in &out.files {
        eprintln!("wrote {}", f.display());
    }
    print_verdicts(&out.verdicts);
    out.passed()
}

fn run(cli: Cli) -> levykr::Result<bool> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = load(&c)?;
            Ok(finish(commands::simulate(&cfg, &out)?))
        }
        Command::Fpe(c) => {
            let (cfg, out) = load(&c)?;
            Ok(finish(commands::fpe(&cfg, &out)?))
        }
        Command::Mollify(c) => {
            let (cfg, out) = load(&c)?;
            Ok(finish(commands::mollify(&cfg, &out)?))
        }
        Command::Terms(c) => {
            let (cfg, out) = load(&c)?;
            Ok(finish(commands::terms(&cfg, &out)?))
        }
        Command::Validate(c) => {
            let (cfg, out) = load(&c)?;
            let report = harness::run(&cfg)?;
            let (rows, verdicts) = report.write_to(&out)?;
            eprintln!("wrote {} and {}", rows.display(), verdicts.display());
            print_verdicts(&report.verdicts);
            eprintln!("wall time {:.2} s", report.wall_time.as_secs_f64());
            Ok(report.passed())
        }
        Command::Distance { first, second, cost, delta, reg, exact, entropic, out } => {
            let kind = match cost {
                Cost::Tilde => CostKind::SquaredLog,
                Cost::Plain => CostKind::LinearLog,
            };
            let tier = if exact {
                Some(Solver::Exact)
            } else if entropic {
                Some(Solver::Entropic)
            } else {
                None
            };
            let (line, verdict) = commands::distance(&first, &second, kind, delta, tier, reg)?;
            println!("{line}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("distance.csv"), format!("{line}\n"))?;
            }
            Ok(verdict.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
