//! Acceptance criteria at their stated tolerances and time limits. Prints
//! one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use levykr::field::CoefficientField;
use levykr::fpe::{self, DensityGrid, FpeConfig};
use levykr::harness::{self, ExperimentConfig, ExperimentReport};
use levykr::jump::total_mass;
use levykr::measure::{empirical_from_flat, DiscreteMeasure, InitialLaw};
use levykr::ot::{exact_ot, kr_tilde, median_cost, sinkhorn_ot, CostSpec};
use levykr::presets;
use levykr::rng::{self, Domain};
use levykr::sde::{self, InitialCoupling, SimConfig, StepNoise};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

type Outcome = levykr::Result<(bool, String)>;
/// Name, check and time limit in seconds.
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>, u64);

fn config(name: &str) -> ExperimentConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn summarize(report: &ExperimentReport) -> (bool, String) {
    let failed: Vec<String> =
        report.verdicts.iter().filter(|v| !v.passed).map(|v| format!("{}: {}", v.name, v.detail)).collect();
    let detail = if failed.is_empty() {
        report.verdicts.iter().filter(|v| !v.detail.is_empty()).map(|v| v.detail.clone()).collect::<Vec<_>>().join("; ")
    } else {
        failed.join("; ")
    };
    (report.passed(), detail)
}

fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (x, y) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
        let delta = 0.01 + rng.random::<f64>();
        let v = kr_tilde(&DiscreteMeasure::dirac(&[x])?, &DiscreteMeasure::dirac(&[y])?, delta)?;
        worst = worst.max((v - ((x - y).powi(2) / (delta * delta)).ln_1p()).abs());
    }
    Ok((worst <= 1e-12, format!("max error {worst:e}")))
}

fn permutation_minimum(x: &DiscreteMeasure, y: &DiscreteMeasure, spec: &CostSpec) -> f64 {
    fn rec(k: usize, perm: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if k == perm.len() {
            return f(perm);
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(k + 1, perm, f);
            perm.swap(k, i);
        }
    }
    let n = x.len();
    let mut best = f64::INFINITY;
    rec(0, &mut (0..n).collect::<Vec<_>>(), &mut |p| {
        let v: f64 = p.iter().enumerate().map(|(i, &j)| spec.eval(x.atom(i), y.atom(j))).sum::<f64>() / n as f64;
        best = best.min(v);
    });
    best
}

fn brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let (n, d) = (1 + case % 6, 1 + case % 2);
        let spec = CostSpec::squared_log(0.1 + rng.random::<f64>())?;
        let mut cloud = || empirical_from_flat(d, (0..n * d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect());
        let (x, y) = (cloud()?, cloud()?);
        worst = worst.max((exact_ot(&x, &y, &spec)?.value - permutation_minimum(&x, &y, &spec)).abs());
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:e}")))
}

fn relations() -> Outcome {
    Ok(summarize(&harness::run(&config("relations_check.json"))?))
}

fn sinkhorn_accuracy() -> Outcome {
    let spec = CostSpec::squared_log(0.1)?;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut law = || InitialLaw::Gaussian {
            mean: vec![rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0],
            std: 0.5 + rng.random::<f64>(),
        };
        let (a, b) = (law(), law());
        let x = empirical_from_flat(2, a.sample_flat(128, 2 * seed + 1)?)?;
        let y = empirical_from_flat(2, b.sample_flat(128, 2 * seed + 2)?)?;
        let exact = exact_ot(&x, &y, &spec)?.value;
        let reg = 0.01 * median_cost(&x, &y, &spec)?;
        let s = sinkhorn_ot(&x, &y, &spec, reg, 20_000, 1e-5)?;
        worst = worst.max((s.value - exact).abs() / exact);
    }
    Ok((worst <= 0.02, format!("worst relative error {:.3}%", 100.0 * worst)))
}

fn simulator_anchors() -> Outcome {
    let nu = presets::jump_measure("sym-a1")?;
    let law = presets::initial_law("gauss-0.5")?;
    let cfg = SimConfig::equispaced(1.0, 0.01, 1000, 0, 4);
    let frozen = sde::simulate(&cfg, &CoefficientField::frozen(1), &nu, &law)?;
    let start = law.sample_flat(1000, 0)?;
    let fixed = frozen.snapshots.iter().all(|s| s.positions == start);

    let ode = presets::coefficients("linear-ode")?;
    let dirac = presets::initial_law("dirac-1")?;
    let mut errors = Vec::new();
    for dt in [0.1, 0.05, 0.025, 0.0125] {
        let t = sde::simulate(&SimConfig::equispaced(1.0, dt, 1, 0, 1), &ode, &nu, &dirac)?;
        errors.push((t.snapshots[0].positions[0] - (-1.0f64).exp()).abs());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    let halves = ratios.iter().all(|r| (0.4..=0.6).contains(r));

    let dt = 0.01;
    let noise = StepNoise::new(&nu, dt)?;
    let mut rng = rng::stream(11, Domain::JumpNoise, 0);
    let steps = 100_000;
    let mut counts = [0usize; 4];
    let mut marks = Vec::new();
    for _ in 0..steps {
        counts[noise.draw(&mut rng, &mut marks).min(3)] += 1;
    }
    let pois = Poisson::new(total_mass(&nu)? * dt).expect("positive rate");
    let p: Vec<f64> = (0..3).map(|k| pois.pmf(k)).collect();
    let probs = [p[0], p[1], p[2], 1.0 - p[0] - p[1] - p[2]];
    let chi2: f64 =
        counts.iter().zip(probs).map(|(&o, q)| (o as f64 - q * steps as f64).powi(2) / (q * steps as f64)).sum();
    let critical = ChiSquared::new(3.0).expect("positive dof").inverse_cdf(0.99);

    Ok((
        fixed && halves && chi2 < critical,
        format!("frozen fixed {fixed}; ODE error ratios {ratios:.3?}; jump-count chi-square {chi2:.2} < {critical:.2}"),
    ))
}

fn coupling_zero_law() -> Outcome {
    let coeffs = presets::coefficients("smooth")?;
    let nu = presets::jump_measure("sym-a1")?;
    let cfg = SimConfig::equispaced(1.0, 0.01, 1024, 0, 5);
    let pair = sde::coupled_simulate(
        &cfg,
        &coeffs,
        &coeffs,
        &nu,
        &InitialCoupling::Diagonal(presets::initial_law("gauss-0.5")?),
    )?;
    let mut worst: f64 = 0.0;
    for (a, b) in pair.first.snapshots.iter().zip(&pair.second.snapshots) {
        worst = worst.max(kr_tilde(&a.to_measure()?, &b.to_measure()?, 0.05)?);
    }
    Ok((worst == 0.0, format!("max distance over {} times {worst:e}", cfg.record_times.len())))
}

fn experiment(name: &'static str) -> impl Fn() -> Outcome {
    move || Ok(summarize(&harness::run(&config(name))?))
}

fn fpe_conservation() -> Outcome {
    let c = presets::coefficients("smooth")?;
    let nu = presets::jump_measure("sym-a1")?;
    let rho0 = DensityGrid::from_law(&presets::initial_law("gauss-0.5")?, 4.0, 1.0 / 64.0)?;
    let dt = 0.005;
    let traj = fpe::solve(&rho0, &c, &nu, &FpeConfig::equispaced(10_000.0 * dt, dt, 1))?;
    Ok((
        traj.steps == 10_000 && traj.max_step_drift <= 1e-15 && traj.min_mass >= 0.0,
        format!(
            "{} steps, max one-step drift {:e}, min cell mass {:e}",
            traj.steps, traj.max_step_drift, traj.min_mass
        ),
    ))
}

fn determinism() -> Outcome {
    let mut same = Vec::new();
    for name in ["moment_check.json", "relations_check.json", "mollify_sweep.json"] {
        let cfg = config(name);
        let bytes = || -> levykr::Result<Vec<u8>> {
            let r = harness::run(&cfg)?;
            let mut out = Vec::new();
            r.write_rows(&mut out)?;
            r.write_verdicts(&mut out)?;
            Ok(out)
        };
        same.push((name, bytes()? == bytes()?));
    }
    Ok((same.iter().all(|s| s.1), format!("{same:?}")))
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("1 closed forms", Box::new(closed_forms), 1),
        ("2 brute-force equivalence", Box::new(brute_force), 10),
        ("3 distance relations", Box::new(relations), 30),
        ("4 entropic accuracy", Box::new(sinkhorn_accuracy), 30),
        ("5 simulator anchors", Box::new(simulator_anchors), 60),
        ("6 coupling zero law", Box::new(coupling_zero_law), 60),
        ("7 perturbation scaling", Box::new(experiment("validate_scaling.json")), 300),
        ("8 mollification ladder", Box::new(experiment("mollify_sweep.json")), 300),
        ("9 particle-grid superposition", Box::new(experiment("superposition.json")), 300),
        ("10 moment bounds", Box::new(experiment("moment_check.json")), 120),
        ("11 grid conservation", Box::new(fpe_conservation), 30),
        ("12 determinism", Box::new(determinism), 300),
    ];
    let mut all = true;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let pass = ok && in_time;
        all &= pass;
        let tag = if pass { "PASS" } else { "FAIL" };
        let late = if in_time { String::new() } else { format!(" over the {limit} s limit") };
        println!("{tag} [{name}] {:.2} s{late}: {detail}", elapsed.as_secs_f64());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
