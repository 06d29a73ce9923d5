//! Discrete maximal function and the empirical constants of the maximal
//! inequalities for a smooth bump.

use std::sync::Arc;

use levykr::analysis::{lemma1_check, lp_norm, maximal_function};
use levykr::field::{ScalarField, SmoothBump};
use levykr::grid::{GridFunction, GridSpec};

fn main() -> levykr::Result<()> {
    let grid = GridSpec::new(1, 4.0, 1.0 / 128.0)?;
    let phi: Arc<dyn ScalarField> = Arc::new(SmoothBump::new(vec![0.5], 1.5, 1.0));
    let f = GridFunction::sample(&grid, |x| phi.value(0.0, x));
    let m = maximal_function(&f, 4.0)?;
    println!("||f||_2 = {:.4}, ||Mf||_2 = {:.4}", lp_norm(&f, 2.0), lp_norm(&m, 2.0));

    let r = lemma1_check(phi.as_ref(), &grid, 2000, 0)?;
    println!("pointwise constant {:.4} over {} pairs", r.c_hat, r.pairs_used);
    for (p, ratio) in r.maximal_ratios {
        println!("p = {p}: ||M phi||_p / ||phi||_p = {ratio:.4}");
    }
    Ok(())
}
