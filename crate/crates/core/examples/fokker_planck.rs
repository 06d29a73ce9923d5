//! Finite-volume solution of the nonlocal Fokker-Planck equation, checked
//! against a particle ensemble at the final time.

use levykr::fpe::{self, density_to_measure, DensityGrid, FpeConfig};
use levykr::harness::grid_dt;
use levykr::ot::kr_tilde;
use levykr::presets;
use levykr::sde::{self, SimConfig};

fn main() -> levykr::Result<()> {
    let coeffs = presets::coefficients("smooth")?;
    let nu = presets::jump_measure("sym-a1")?;
    let law = presets::initial_law("gauss-0.5")?;

    let rho0 = DensityGrid::from_law(&law, 4.0, 1.0 / 128.0)?;
    let dt = grid_dt(&rho0, &coeffs, &nu, 1.0, 4, 0.01)?;
    let traj = fpe::solve(&rho0, &coeffs, &nu, &FpeConfig::equispaced(1.0, dt, 4))?;
    for s in &traj.snapshots {
        println!(
            "t = {:.2}: mass {:.15}, escaped {:.1e}, L2 norm {:.4}",
            s.time,
            s.interior_mass(),
            s.escaped,
            s.lq_norm(2.0)
        );
    }
    println!("{} steps, max one-step drift {:e}", traj.steps, traj.max_step_drift);

    let n = 2048;
    let grid_measure = density_to_measure(traj.snapshots.last().expect("recorded"), Some(n))?;
    let particles = sde::simulate(&SimConfig::equispaced(1.0, dt, n, 0, 1), &coeffs, &nu, &law)?;
    let d = kr_tilde(&grid_measure, &particles.snapshots[0].to_measure()?, 0.05)?;
    println!("grid vs {n} particles at T: {d:.4}");
    Ok(())
}
