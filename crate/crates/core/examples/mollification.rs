//! Mollify kinked coefficients and watch the approximation error `δ_n`.

use levykr::analysis::{self, Window};
use levykr::grid::GridSpec;
use levykr::presets;

fn main() -> levykr::Result<()> {
    let c = presets::coefficients("kinked")?;
    let nu = presets::jump_measure("sym-a1")?;
    let grid = GridSpec::new(1, 4.0, 1.0 / 256.0)?;
    let window = Window::autonomous(grid.clone(), 1.0)?;
    let mut prev: Option<f64> = None;
    for n in [4, 8, 16, 32, 64] {
        let eps = 1.0 / n as f64;
        let bn = analysis::mollify_drift(&c.drift, &grid, eps)?;
        let gn = analysis::mollify_jump(&c.jump, &grid, eps)?;
        let d = analysis::delta_n(&c.drift, &bn, &c.jump, &gn, &nu, 2.0, &window)?;
        match prev {
            Some(q) => println!("n = {n:>2}: delta_n = {d:.4e}  ratio {:.3}", d / q),
            None => println!("n = {n:>2}: delta_n = {d:.4e}"),
        }
        prev = Some(d);
    }
    Ok(())
}
