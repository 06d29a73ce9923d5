use levykr::field::{gradient, CoefficientField, JumpCoefficient};
use levykr::fpe::{self, DensityGrid, FpeConfig};
use levykr::harness::grid_dt;
use levykr::jump::JumpMeasure;
use levykr::presets;

fn gauss_density(x: f64) -> f64 {
    let s = 0.5;
    (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

/// Pure-drift field of the smooth preset.
fn drift_only() -> CoefficientField {
    let smooth = presets::coefficients("smooth").unwrap();
    CoefficientField::new("drift-only", smooth.drift, JumpCoefficient::zero(1)).unwrap()
}

/// Exact density at `y` after time `t`: follow the characteristic back with
/// RK4, carrying the Jacobian `∂x0/∂y`.
fn characteristic_density(c: &CoefficientField, y: f64, t: f64) -> f64 {
    let b = c.drift.components[0].clone();
    let rhs = |s: [f64; 2]| {
        let mut g = [0.0];
        gradient(b.as_ref(), 0.0, &[s[0]], &mut g);
        [-b.value(0.0, &[s[0]]), -g[0] * s[1]]
    };
    let steps = 400;
    let k = t / steps as f64;
    let mut s = [y, 1.0];
    for _ in 0..steps {
        let add = |s: [f64; 2], d: [f64; 2], f: f64| [s[0] + f * d[0], s[1] + f * d[1]];
        let k1 = rhs(s);
        let k2 = rhs(add(s, k1, k / 2.0));
        let k3 = rhs(add(s, k2, k / 2.0));
        let k4 = rhs(add(s, k3, k));
        for i in 0..2 {
            s[i] += k / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    gauss_density(s[0]) * s[1]
}

#[test]
fn pure_drift_converges_to_the_characteristics_solution() {
    let c = drift_only();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let law = presets::initial_law("gauss-0.5").unwrap();
    let mut errors = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let rho0 = DensityGrid::from_law(&law, 4.0, h).unwrap();
        let traj = fpe::solve(&rho0, &c, &nu, &FpeConfig::equispaced(1.0, 0.4 * h, 1)).unwrap();
        let rho = &traj.snapshots[0];
        let err: f64 =
            (0..rho.cells()).map(|i| (rho.masses[i] - h * characteristic_density(&c, rho.center(i), 1.0)).abs()).sum();
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < 0.7 * w[0]), "{errors:?}");
    assert!(errors[2] < 0.05, "{errors:?}");
}

/// `(L^b + L^g_ν) f` with `g = a(x) z` and the annulus quadrature for `ν`.
fn generator(c: &CoefficientField, nu: &JumpMeasure, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, x: f64) -> f64 {
    let b = c.drift.components[0].value(0.0, &[x]);
    let a = c.jump.amplitude().unwrap().value(0.0, &[x]);
    let q = nu.quadrature();
    b * df(x) + q.integrate(|z| f(x + a * z[0]) - f(x) - a * z[0] * df(x))
}

#[test]
fn weak_form_residual_shrinks_with_the_grid() {
    let c = presets::coefficients("smooth").unwrap();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let law = presets::initial_law("gauss-0.5").unwrap();
    let f = |x: f64| (-x * x).exp();
    let df = |x: f64| -2.0 * x * (-x * x).exp();
    let mut residuals = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let rho0 = DensityGrid::from_law(&law, 4.0, h).unwrap();
        let dt = grid_dt(&rho0, &c, &nu, 0.6, 12, 0.4 * h).unwrap();
        let traj = fpe::solve(&rho0, &c, &nu, &FpeConfig::new(0.6, dt, vec![0.45, 0.5, 0.55])).unwrap();
        let pair = |rho: &DensityGrid, g: &dyn Fn(f64) -> f64| -> f64 {
            (0..rho.cells()).map(|i| rho.masses[i] * g(rho.center(i))).sum()
        };
        let s = &traj.snapshots;
        let lhs = (pair(&s[2], &f) - pair(&s[0], &f)) / 0.1;
        let rhs = pair(&s[1], &|x| generator(&c, &nu, f, df, x));
        residuals.push((lhs - rhs).abs());
    }
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
    assert!(residuals[2] < 0.01, "{residuals:?}");
}

#[test]
fn mass_is_conserved_over_ten_thousand_steps() {
    let c = presets::coefficients("smooth").unwrap();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let rho0 = DensityGrid::from_law(&presets::initial_law("gauss-0.5").unwrap(), 4.0, 1.0 / 64.0).unwrap();
    let dt = 0.005;
    let traj = fpe::solve(&rho0, &c, &nu, &FpeConfig::equispaced(10_000.0 * dt, dt, 1)).unwrap();
    assert_eq!(traj.steps, 10_000);
    assert!(traj.max_step_drift <= 1e-15, "{}", traj.max_step_drift);
    assert!(traj.min_mass >= 0.0);
    let end = &traj.snapshots[0];
    assert!((end.interior_mass() + end.escaped - rho0.total_mass()).abs() <= 1e-12);
}

#[test]
fn frozen_coefficients_fix_the_density() {
    let nu = presets::jump_measure("sym-a1").unwrap();
    let rho0 = DensityGrid::from_law(&presets::initial_law("gauss-0.5").unwrap(), 4.0, 1.0 / 64.0).unwrap();
    let traj = fpe::solve(&rho0, &CoefficientField::frozen(1), &nu, &FpeConfig::equispaced(1.0, 0.01, 4)).unwrap();
    for s in &traj.snapshots {
        assert_eq!(s.masses, rho0.masses);
        assert_eq!(s.escaped, 0.0);
    }
}

#[test]
fn oversized_steps_are_rejected() {
    let c = presets::coefficients("smooth").unwrap();
    let nu = presets::jump_measure("sym-a1").unwrap();
    let rho0 = DensityGrid::from_law(&presets::initial_law("gauss-0.5").unwrap(), 4.0, 1.0 / 64.0).unwrap();
    assert!(fpe::solve(&rho0, &c, &nu, &FpeConfig::equispaced(1.0, 0.5, 1)).is_err());
}
