use levykr::field::{CoefficientField, DriftField, JumpCoefficient};
use levykr::jump::total_mass;
use levykr::measure::InitialLaw;
use levykr::ot::kr_tilde;
use levykr::presets;
use levykr::rng::{self, Domain};
use levykr::sde::{self, InitialCoupling, NoiseMode, SimConfig, StepNoise};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn terminal(coeffs: &str, law: &str, dt: f64, particles: usize, seed: u64) -> Vec<f64> {
    let cfg = SimConfig::equispaced(1.0, dt, particles, seed, 1);
    let traj = sde::simulate(
        &cfg,
        &presets::coefficients(coeffs).unwrap(),
        &presets::jump_measure("sym-a1").unwrap(),
        &presets::initial_law(law).unwrap(),
    )
    .unwrap();
    traj.snapshots[0].positions.clone()
}

#[test]
fn euler_error_on_the_linear_ode_halves_with_dt() {
    let exact = (-1.0f64).exp();
    let errors: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&dt| (terminal("linear-ode", "dirac-1", dt, 4, 0)[0] - exact).abs())
        .collect();
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.4..=0.6).contains(&ratio), "errors {errors:?}");
    }
}

#[test]
fn frozen_ensemble_never_moves() {
    let start = terminal("frozen", "gauss-0.5", 1.0, 256, 3);
    let law = presets::initial_law("gauss-0.5").unwrap();
    assert_eq!(start, law.sample_flat(256, 3).unwrap());
}

#[test]
fn per_step_jump_counts_are_poisson() {
    let nu = presets::jump_measure("sym-a1").unwrap();
    let dt = 0.01;
    let noise = StepNoise::new(&nu, dt).unwrap();
    let mut rng = rng::stream(11, Domain::JumpNoise, 0);
    let steps = 100_000;
    let mut counts = [0usize; 4];
    let mut marks = Vec::new();
    for _ in 0..steps {
        counts[noise.draw(&mut rng, &mut marks).min(3)] += 1;
    }
    let law = Poisson::new(total_mass(&nu).unwrap() * dt).unwrap();
    let p: Vec<f64> = (0..3).map(|k| law.pmf(k)).collect();
    let probs = [p[0], p[1], p[2], 1.0 - p[0] - p[1] - p[2]];
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&o, q)| {
            let e = q * steps as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi-square {stat} vs {critical}, counts {counts:?}");
}

#[test]
fn compensated_jumps_are_centered() {
    let nu = presets::jump_measure("one-sided").unwrap();
    let pure_jump = CoefficientField::new("pure-jump", DriftField::zero(1), JumpCoefficient::additive(1)).unwrap();
    let n = 20_000;
    let cfg = SimConfig::equispaced(1.0, 0.01, n, 5, 1);
    let traj = sde::simulate(&cfg, &pure_jump, &nu, &InitialLaw::Dirac { at: vec![0.0] }).unwrap();
    let x = &traj.snapshots[0].positions;
    let mean = x.iter().sum::<f64>() / n as f64;
    // Var X_T = T ∫ z² ν(dz)
    let sd = nu.radial_moment(2.0).sqrt();
    assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt(), "mean {mean}");
}

#[test]
fn identical_systems_under_common_noise_stay_together() {
    let coeffs = presets::coefficients("smooth").unwrap();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let law = presets::initial_law("gauss-0.5").unwrap();
    let cfg = SimConfig::equispaced(1.0, 0.01, 512, 9, 5);
    let pair = sde::coupled_simulate(&cfg, &coeffs, &coeffs, &nu, &InitialCoupling::Diagonal(law)).unwrap();
    for k in 0..cfg.record_times.len() {
        assert_eq!(pair.max_difference(k), 0.0);
        let d = kr_tilde(
            &pair.first.snapshots[k].to_measure().unwrap(),
            &pair.second.snapshots[k].to_measure().unwrap(),
            0.05,
        )
        .unwrap();
        assert_eq!(d, 0.0);
    }
}

#[test]
fn coupled_marginal_matches_a_single_run() {
    let base = presets::coefficients("smooth").unwrap();
    let other = presets::perturbation("drift-bump").unwrap().apply(&base, 0.3).unwrap();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let law = presets::initial_law("gauss-0.5").unwrap();
    let cfg = SimConfig::equispaced(0.5, 0.01, 300, 4, 2);
    for mode in [NoiseMode::Common, NoiseMode::Independent] {
        let pair = sde::coupled_simulate_with(&cfg, &base, &other, &nu, &InitialCoupling::Diagonal(law.clone()), mode)
            .unwrap();
        assert_eq!(pair.first, sde::simulate(&cfg, &base, &nu, &law).unwrap());
    }
    let common = sde::coupled_simulate(&cfg, &base, &other, &nu, &InitialCoupling::Diagonal(law.clone())).unwrap();
    assert_eq!(common.first.jump_counts, common.second.jump_counts);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let coeffs = presets::coefficients("smooth").unwrap();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let law = presets::initial_law("gauss-0.5").unwrap();
    let cfg = SimConfig::equispaced(1.0, 0.01, 1000, 2, 4);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sde::simulate(&cfg, &coeffs, &nu, &law).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn moments_of_a_frozen_dirac() {
    let cfg = SimConfig::equispaced(1.0, 0.1, 8, 0, 5);
    let traj = sde::simulate(
        &cfg,
        &CoefficientField::frozen(1),
        &presets::jump_measure("sym-a1").unwrap(),
        &InitialLaw::Dirac { at: vec![-1.0] },
    )
    .unwrap();
    let m = sde::moment_diagnostics(&traj.snapshots).unwrap();
    assert!(m.mean_abs.iter().all(|&v| v == 1.0));
    assert!(m.mean_log.iter().all(|&v| (v - 2f64.ln()).abs() < 1e-15));
}
