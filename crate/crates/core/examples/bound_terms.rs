//! Raw terms of the stability bound along a drift perturbation ladder.

use levykr::analysis::{self, BoundInputs, BoundReport, Window};
use levykr::field::CoefficientField;
use levykr::fpe::{self, DensityGrid, FpeConfig};
use levykr::grid::GridSpec;
use levykr::harness::grid_dt;
use levykr::presets;

fn main() -> levykr::Result<()> {
    let base = presets::coefficients("smooth")?;
    let nu = presets::jump_measure("sym-a1")?;
    let law = presets::initial_law("gauss-0.5")?;
    let p = 4.0;
    let window = Window::autonomous(GridSpec::new(1, 4.0, 1.0 / 128.0)?, 1.0)?;
    let rho_norm = |c: &CoefficientField| -> levykr::Result<f64> {
        let rho0 = DensityGrid::from_law(&law, 4.0, 1.0 / 128.0)?;
        let dt = grid_dt(&rho0, c, &nu, 1.0, 4, 0.01)?;
        let traj = fpe::solve(&rho0, c, &nu, &FpeConfig::equispaced(1.0, dt, 4))?;
        Ok(traj.sup_lq_norm(analysis::conjugate(p)))
    };
    let rho1 = rho_norm(&base)?;
    println!("h,{}", BoundReport::COLUMNS.join(","));
    for h in [0.1, 0.2, 0.4] {
        let other = presets::perturbation("drift-bump")?.apply(&base, h)?;
        let rho2 = rho_norm(&other)?;
        let r = analysis::theorem_terms(&BoundInputs {
            b1: &base.drift,
            b2: &other.drift,
            g1: &base.jump,
            g2: &other.jump,
            nu: &nu,
            p,
            window: &window,
            rho_norms: [rho1, rho2],
            delta: 0.05,
            initial_distance: 0.0,
        })?;
        let vals: Vec<String> = r.values().iter().map(|v| format!("{v:.4}")).collect();
        println!("{h},{}", vals.join(","));
    }
    Ok(())
}
