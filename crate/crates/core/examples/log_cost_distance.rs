//! Exact and entropic transport under the two logarithmic costs, and the
//! comparison inequalities between them.

use levykr::measure::empirical_from_flat;
use levykr::ot::{self, exact_ot, median_cost, sinkhorn_ot, CostSpec};
use levykr::presets;

fn main() -> levykr::Result<()> {
    let a = presets::initial_law("gauss-2d")?;
    let x = empirical_from_flat(2, a.sample_flat(128, 1)?)?;
    let y = empirical_from_flat(2, a.sample_flat(128, 2)?.iter().map(|v| v + 0.3).collect())?;

    for delta in [0.05, 0.2, 1.0] {
        let spec = CostSpec::squared_log(delta)?;
        let exact = exact_ot(&x, &y, &spec)?;
        let reg = 0.01 * median_cost(&x, &y, &spec)?;
        let ent = sinkhorn_ot(&x, &y, &spec, reg, 20_000, 1e-5)?;
        let rel = ot::remark_relations_check(&x, &y, delta)?;
        println!(
            "delta {delta}: exact {:.5} (gap {:.1e}), entropic {:.5}, plain {:.5}, relations hold: {}",
            exact.value,
            exact.duality_gap.unwrap_or(f64::NAN),
            ent.value,
            rel.plain,
            rel.holds
        );
    }
    // the ratio tends to 0 only when the two measures coincide
    let ratios = ot::uniqueness_indicator(&x, &y, &[0.1, 0.01, 0.001])?;
    println!("uniqueness ratios {ratios:.4?}");
    Ok(())
}
