//! Simulate a particle ensemble and print its moment diagnostics.

use levykr::presets;
use levykr::sde::{self, SimConfig};

fn main() -> levykr::Result<()> {
    let coeffs = presets::coefficients("smooth")?;
    let nu = presets::jump_measure("sym-a1")?;
    let law = presets::initial_law("gauss-0.5")?;
    let cfg = SimConfig::equispaced(2.0, 0.01, 2048, 7, 8);
    let traj = sde::simulate(&cfg, &coeffs, &nu, &law)?;
    let m = sde::moment_diagnostics(&traj.snapshots)?;
    println!("{:>6} {:>10} {:>16}", "t", "E|X|", "E log(1+|X|^2)");
    for k in 0..m.times.len() {
        println!("{:>6.2} {:>10.5} {:>16.5}", m.times[k], m.mean_abs[k], m.mean_log[k]);
    }
    let jumps: u64 = traj.jump_counts.iter().sum();
    println!("{jumps} jumps over {} particles, {} escaped", cfg.particles, traj.escaped.len());
    traj.to_csv(std::io::sink())?;
    Ok(())
}
