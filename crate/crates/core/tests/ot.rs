use std::f64::consts::LN_2;

use levykr::measure::{empirical_from_flat, DiscreteMeasure, InitialLaw};
use levykr::ot::{self, exact_ot, kr_tilde, median_cost, sinkhorn_ot, CostSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum over all permutation couplings (Birkhoff extreme points).
fn brute_force(x: &DiscreteMeasure, y: &DiscreteMeasure, spec: &CostSpec) -> f64 {
    let n = x.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    fn rec(k: usize, perm: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if k == perm.len() {
            f(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(k + 1, perm, f);
            perm.swap(k, i);
        }
    }
    rec(0, &mut perm, &mut |p| {
        let v: f64 = p.iter().enumerate().map(|(i, &j)| spec.eval(x.atom(i), y.atom(j))).sum::<f64>() / n as f64;
        best = best.min(v);
    });
    best
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> DiscreteMeasure {
    empirical_from_flat(d, (0..n * d).map(|_| spread * (rng.random::<f64>() - 0.5)).collect()).unwrap()
}

#[test]
fn exact_matches_permutation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..100 {
        let n = 2 + case % 5;
        let d = 1 + case % 2;
        let delta = 0.2 + rng.random::<f64>();
        let spec = CostSpec::squared_log(delta).unwrap();
        let x = random_cloud(&mut rng, n, d, 4.0);
        let y = random_cloud(&mut rng, n, d, 4.0);
        let r = exact_ot(&x, &y, &spec).unwrap();
        let bf = brute_force(&x, &y, &spec);
        assert!((r.value - bf).abs() <= 1e-12, "case {case}: {} vs {bf}", r.value);
        assert!(r.duality_gap.unwrap().abs() <= 1e-9);
    }
}

#[test]
fn exact_handles_duplicates_and_unequal_sizes() {
    let spec = CostSpec::squared_log(0.5).unwrap();
    let x = empirical_from_flat(1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 2.0]).unwrap();
    let y = DiscreteMeasure::new(1, vec![0.0, 1.0, 2.0], vec![0.5, 1.0 / 3.0, 1.0 / 6.0]).unwrap();
    let r = exact_ot(&x, &y, &spec).unwrap();
    assert!(r.value.abs() < 1e-15);
    let plan = r.plan.unwrap();
    assert!(plan.is_feasible(1e-9));
}

#[test]
fn exact_large_two_d_instance_has_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_cloud(&mut rng, 512, 2, 4.0);
    let y = random_cloud(&mut rng, 512, 2, 4.0);
    let t = std::time::Instant::now();
    let r = exact_ot(&x, &y, &CostSpec::squared_log(1.0).unwrap()).unwrap();
    eprintln!("512x512 2-d: {} pivots in {:?}", r.iterations, t.elapsed());
    assert!(r.duality_gap.unwrap().abs() <= 1e-9);
    assert!(r.plan.unwrap().is_feasible(1e-9));
}

/// Pairs of 2-d gaussian clouds with random centres and spreads.
fn gaussian_cloud_pair(seed: u64, n: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut law = || InitialLaw::Gaussian {
        mean: vec![rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0],
        std: 0.5 + rng.random::<f64>(),
    };
    let (a, b) = (law(), law());
    let x = empirical_from_flat(2, a.sample_flat(n, 2 * seed + 1).unwrap()).unwrap();
    let y = empirical_from_flat(2, b.sample_flat(n, 2 * seed + 2).unwrap()).unwrap();
    (x, y)
}

#[test]
fn sinkhorn_tracks_exact_on_gaussian_clouds() {
    let spec = CostSpec::squared_log(0.1).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let (x, y) = gaussian_cloud_pair(seed, 128);
        let exact = exact_ot(&x, &y, &spec).unwrap().value;
        let reg = 0.01 * median_cost(&x, &y, &spec).unwrap();
        let s = sinkhorn_ot(&x, &y, &spec, reg, 20_000, 1e-5).unwrap();
        assert!(s.converged, "seed {seed}: marginal error {}", s.marginal_error);
        worst = worst.max((s.value - exact).abs() / exact);
    }
    eprintln!("worst relative error {worst}");
    assert!(worst <= 0.02);
}

#[test]
fn sinkhorn_value_is_monotone_in_regularization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = CostSpec::squared_log(1.0).unwrap();
    let x = random_cloud(&mut rng, 40, 2, 3.0);
    let y = random_cloud(&mut rng, 40, 2, 3.0);
    let exact = exact_ot(&x, &y, &spec).unwrap().value;
    let coarse = sinkhorn_ot(&x, &y, &spec, 0.1, 20_000, 1e-10).unwrap().value;
    let fine = sinkhorn_ot(&x, &y, &spec, 0.01, 20_000, 1e-10).unwrap().value;
    assert!(coarse >= fine && fine >= exact - 1e-9, "{coarse} {fine} {exact}");
}

#[test]
fn independent_gaussian_samples_have_small_uniqueness_ratio() {
    let law = InitialLaw::Gaussian { mean: vec![0.0], std: 1.0 };
    for seed in 0..10u64 {
        let x = empirical_from_flat(1, law.sample_flat(1024, 300 + seed).unwrap()).unwrap();
        let y = empirical_from_flat(1, law.sample_flat(1024, 400 + seed).unwrap()).unwrap();
        let r = ot::uniqueness_indicator(&x, &y, &[0.01]).unwrap()[0];
        assert!(r < 0.5, "seed {seed}: {r}");
    }
}

#[test]
fn dirac_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (x, y, d) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0, 0.05 + rng.random::<f64>());
        let v = kr_tilde(&DiscreteMeasure::dirac(&[x]).unwrap(), &DiscreteMeasure::dirac(&[y]).unwrap(), d).unwrap();
        assert!((v - ((x - y).powi(2) / (d * d)).ln_1p()).abs() <= 1e-12);
    }
    let v = kr_tilde(&DiscreteMeasure::dirac(&[0.0]).unwrap(), &DiscreteMeasure::dirac(&[1.0]).unwrap(), 1.0).unwrap();
    assert!((v - LN_2).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetry_monotonicity_and_relations(
        xs in prop::collection::vec(-3.0f64..3.0, 1..24),
        ys in prop::collection::vec(-3.0f64..3.0, 1..24),
        delta in 0.05f64..2.0,
    ) {
        let x = empirical_from_flat(1, xs).unwrap();
        let y = empirical_from_flat(1, ys).unwrap();
        let a = kr_tilde(&x, &y, delta).unwrap();
        let b = kr_tilde(&y, &x, delta).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        let wider = kr_tilde(&x, &y, 1.5 * delta).unwrap();
        prop_assert!(wider <= a + 1e-12);
        let rel = ot::remark_relations_check(&x, &y, delta).unwrap();
        prop_assert!(rel.holds);
        let plan = exact_ot(&x, &y, &CostSpec::squared_log(delta).unwrap()).unwrap().plan.unwrap();
        prop_assert!(plan.is_feasible(1e-9));
    }
}

#[test]
fn large_equal_weight_line_problems_match_the_simplex() {
    let spec = CostSpec::squared_log(0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 700;
    for case in 0..3 {
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        // mostly small displacements plus a few far moves, as in coupled ensembles
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                if rng.random::<f64>() < 0.01 {
                    rng.random::<f64>() * 4.0 - 2.0
                } else {
                    x + 0.02 * case as f64 * rng.random::<f64>()
                }
            })
            .collect();
        let x = empirical_from_flat(1, xs.clone()).unwrap();
        let y = empirical_from_flat(1, ys.clone()).unwrap();
        let r = exact_ot(&x, &y, &spec).unwrap();
        let w = vec![1.0 / n as f64; n];
        let c = |i: usize, j: usize| spec.eval(&[xs[i]], &[ys[j]]);
        let s = ot::simplex::solve(&w, &w, &c, 1e-12, usize::MAX);
        assert!(s.optimal);
        assert!((r.value - s.primal).abs() <= 1e-9, "case {case}: {} vs {}", r.value, s.primal);
        assert!(r.duality_gap.unwrap().abs() <= 1e-9);
    }
}
