//! Truncated power-law jump measure: total mass, exact sampling and the
//! annulus quadrature used for compensators.

use levykr::jump::{sample_jump, total_mass, JumpMeasure, SignMode};
use levykr::rng::{self, Domain};

fn main() -> levykr::Result<()> {
    let nu = JumpMeasure::new(1, 1.0, 0.1, 1.0, SignMode::OneSided)?;
    let lambda = total_mass(&nu)?;
    let q = nu.quadrature();
    println!("total mass {lambda:.6}, quadrature mass {:.6} on {} nodes", q.total_weight(), q.len());

    let mut rng = rng::stream(0, Domain::JumpNoise, 0);
    let n = 100_000;
    let mean: f64 = (0..n).map(|_| sample_jump(&nu, &mut rng).0[0]).sum::<f64>() / n as f64;
    // ∫ z ν(dz) / λ
    let exact = q.integrate(|z| z[0]) / lambda;
    println!("sampled mean jump {mean:.5}, quadrature {exact:.5}");
    Ok(())
}
