//! Single-shot operations behind the `levykr` subcommands other than
//! `validate`. Each writes its CSV files into a directory and returns
//! verdicts; the binary maps them to the exit code.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{self, BoundInputs, BoundReport, Window};
use crate::error::{config_err, Result};
use crate::fpe::{self, DensityGrid, FpeConfig};
use crate::grid::{GridFunction, GridSpec};
use crate::harness::{grid_dt, ExperimentConfig, Verdict};
use crate::measure::{self, DiscreteMeasure};
use crate::ot::{self, CostKind, CostSpec, Solver};
use crate::presets;
use crate::sde::{self, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
}

impl CommandOutput {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn verdict(name: &str, passed: bool, detail: String) -> Verdict {
    Verdict { name: name.to_string(), passed, detail }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = BufWriter::new(File::create(&path)?);
    Ok((path, f))
}

/// `trajectory.csv` (time, particle_id, x_1..x_d) and `moments.csv`.
pub fn simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<CommandOutput> {
    let coeffs = presets::coefficients(&cfg.coefficients)?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let mut sim = SimConfig::equispaced(cfg.horizon, cfg.dt, cfg.particles, cfg.seeds[0], cfg.record_count);
    sim.record_times.insert(0, 0.0);
    let traj = sde::simulate(&sim, &coeffs, &nu, &law)?;
    let (tpath, tf) = create(dir, "trajectory.csv")?;
    traj.to_csv(tf)?;
    let m = sde::moment_diagnostics(&traj.snapshots)?;
    let (mpath, mf) = create(dir, "moments.csv")?;
    let mut w = csv::Writer::from_writer(mf);
    w.write_record(["time", "mean_abs", "mean_log"]).map_err(measure::csv_err)?;
    for k in 0..m.times.len() {
        w.write_record([m.times[k].to_string(), m.mean_abs[k].to_string(), m.mean_log[k].to_string()])
            .map_err(measure::csv_err)?;
    }
    w.flush()?;
    Ok(CommandOutput {
        files: vec![tpath, mpath],
        verdicts: vec![
            verdict("no particle escaped", traj.escaped.is_empty(), format!("{} escaped", traj.escaped.len())),
            verdict(
                "moments finite",
                m.sup_abs.is_finite() && m.sup_log.is_finite(),
                format!("sup E|X| {} sup E log(1+|X|^2) {}", m.sup_abs, m.sup_log),
            ),
        ],
    })
}

/// `density_<k>.csv` (center, mass) per recorded time and `fpe_summary.csv`.
pub fn fpe(cfg: &ExperimentConfig, dir: &Path) -> Result<CommandOutput> {
    let coeffs = presets::coefficients(&cfg.coefficients)?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let rho0 = DensityGrid::from_law(&law, cfg.half_width, cfg.spacing)?;
    let dt = grid_dt(&rho0, &coeffs, &nu, cfg.horizon, cfg.record_count, cfg.dt)?;
    let mut fc = FpeConfig::equispaced(cfg.horizon, dt, cfg.record_count);
    fc.record_times.insert(0, 0.0);
    let traj = fpe::solve(&rho0, &coeffs, &nu, &fc)?;
    let mut files = Vec::new();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let (p, f) = create(dir, &format!("density_{k}.csv"))?;
        snap.to_csv(f)?;
        files.push(p);
    }
    let (spath, sf) = create(dir, "fpe_summary.csv")?;
    let mut w = csv::Writer::from_writer(sf);
    w.write_record(["time", "interior_mass", "escaped", "min_mass"]).map_err(measure::csv_err)?;
    for s in &traj.snapshots {
        w.write_record([
            s.time.to_string(),
            s.interior_mass().to_string(),
            s.escaped.to_string(),
            s.min_mass().to_string(),
        ])
        .map_err(measure::csv_err)?;
    }
    w.flush()?;
    files.push(spath);
    let escaped = traj.snapshots.last().map_or(0.0, |s| s.escaped);
    Ok(CommandOutput {
        files,
        verdicts: vec![
            verdict(
                "mass conserved to 1e-15 per step",
                traj.max_step_drift <= 1e-15,
                format!("max one-step drift {:e} over {} steps of {dt}", traj.max_step_drift, traj.steps),
            ),
            verdict("nonnegative", traj.min_mass >= 0.0, format!("min cell mass {:e}", traj.min_mass)),
            verdict("escape <= 1e-6", escaped <= 1e-6, format!("escaped mass {escaped:e}")),
        ],
    })
}

/// Mollified drift and jump amplitude per `n` (`drift_n<n>.csv`,
/// `amplitude_n<n>.csv`) and `mollify.csv` with `δ_n` and its parts.
pub fn mollify(cfg: &ExperimentConfig, dir: &Path) -> Result<CommandOutput> {
    let coeffs = presets::coefficients(&cfg.coefficients)?;
    let nu = cfg.jump_measure.resolve()?;
    let grid = GridSpec::new(coeffs.dim(), cfg.half_width, cfg.spacing)?;
    let window = Window::autonomous(grid.clone(), cfg.horizon)?;
    let b = GridFunction::sample(&grid, |x| coeffs.drift.components[0].value(0.0, x));
    let b_lp = analysis::lp_norm(&b, cfg.p);
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut young = true;
    for &n in &cfg.mollify_ladder {
        let eps = 1.0 / n as f64;
        let bn = analysis::mollify(&b, eps)?;
        let (p, f) = create(dir, &format!("drift_n{n}.csv"))?;
        bn.to_csv(f)?;
        files.push(p);
        if let Some(a) = coeffs.jump.amplitude() {
            let an = analysis::mollify(&GridFunction::sample(&grid, |x| a.value(0.0, x)), eps)?;
            let (p, f) = create(dir, &format!("amplitude_n{n}.csv"))?;
            an.to_csv(f)?;
            files.push(p);
        }
        let drift_n = analysis::mollify_drift(&coeffs.drift, &grid, eps)?;
        let jump_n = analysis::mollify_jump(&coeffs.jump, &grid, eps)?;
        let parts = analysis::delta_components(&coeffs.drift, &drift_n, &coeffs.jump, &jump_n, &nu, cfg.p, &window)?;
        let bn_lp = analysis::lp_norm(&bn, cfg.p);
        young &= bn_lp <= b_lp * (1.0 + 1e-9);
        rows.push((n, eps, parts, bn_lp));
    }
    let (spath, sf) = create(dir, "mollify.csv")?;
    let mut w = csv::Writer::from_writer(sf);
    w.write_record(["n", "eps", "delta_n", "drift_gap", "jump_gap2", "jump_gap4", "drift_lp", "mollified_lp"])
        .map_err(measure::csv_err)?;
    for (n, eps, parts, bn_lp) in &rows {
        let total: f64 = parts.iter().sum();
        let rec = [*n as f64, *eps, total, parts[0], parts[1], parts[2], b_lp, *bn_lp];
        w.write_record(rec.iter().map(|v| v.to_string())).map_err(measure::csv_err)?;
    }
    w.flush()?;
    files.push(spath);
    let dn: Vec<f64> = rows.iter().map(|r| r.2.iter().sum()).collect();
    Ok(CommandOutput {
        files,
        verdicts: vec![
            verdict("mollification contracts L^p", young, String::new()),
            verdict("delta_n nonincreasing in n", dn.windows(2).all(|w| w[1] <= w[0]), format!("{dn:?}")),
        ],
    })
}

/// One [`BoundReport`] row per perturbation size (`h = 0` first) in `terms.csv`.
pub fn terms(cfg: &ExperimentConfig, dir: &Path) -> Result<CommandOutput> {
    let base = presets::coefficients(&cfg.coefficients)?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let pert = presets::perturbation(cfg.jump_perturbation.as_deref().unwrap_or(&cfg.drift_perturbation))?;
    let grid = GridSpec::new(base.dim(), cfg.half_width, cfg.spacing)?;
    let window = Window::autonomous(grid, cfg.horizon)?;
    let q = analysis::conjugate(cfg.p);
    let rho_norm = |c: &crate::field::CoefficientField| -> Result<f64> {
        if c.dim() != 1 {
            return Ok(f64::NAN);
        }
        let rho0 = DensityGrid::from_law(&law, cfg.half_width, cfg.spacing)?;
        let dt = grid_dt(&rho0, c, &nu, cfg.horizon, cfg.record_count, cfg.dt)?;
        let traj = fpe::solve(&rho0, c, &nu, &FpeConfig::equispaced(cfg.horizon, dt, cfg.record_count))?;
        Ok(traj.sup_lq_norm(q).max(rho0.lq_norm(q)))
    };
    let rho1 = rho_norm(&base)?;
    let mut hs = vec![0.0];
    hs.extend(cfg.ladder.iter().copied().filter(|h| *h > 0.0));
    let mut reports = Vec::new();
    for &h in &hs {
        let other = pert.apply(&base, h)?;
        let rho2 = if h == 0.0 { rho1 } else { rho_norm(&other)? };
        reports.push((
            h,
            analysis::theorem_terms(&BoundInputs {
                b1: &base.drift,
                b2: &other.drift,
                g1: &base.jump,
                g2: &other.jump,
                nu: &nu,
                p: cfg.p,
                window: &window,
                rho_norms: [rho1, rho2],
                delta: cfg.delta,
                initial_distance: 0.0,
            })?,
        ));
    }
    let (path, f) = create(dir, "terms.csv")?;
    let mut w = csv::Writer::from_writer(f);
    let mut header = vec!["h"];
    header.extend(BoundReport::COLUMNS);
    w.write_record(&header).map_err(measure::csv_err)?;
    for (h, r) in &reports {
        w.write_record(std::iter::once(h.to_string()).chain(r.values().iter().map(|v| v.to_string())))
            .map_err(measure::csv_err)?;
    }
    w.flush()?;
    // density norms are unavailable (NaN) beyond 1-d
    let ok = reports.iter().all(|(_, r)| r.values().iter().all(|v| v.is_nan() || (v.is_finite() && *v >= 0.0)));
    Ok(CommandOutput { files: vec![path], verdicts: vec![verdict("terms finite and nonnegative", ok, String::new())] })
}

/// Result line `value,solver,gap,wall_time` for two measure files. `gap`
/// is the duality gap of the exact tier or the marginal error of the
/// entropic tier.
pub fn distance(
    mu_path: &Path,
    nu_path: &Path,
    kind: CostKind,
    delta: f64,
    tier: Option<Solver>,
    reg: Option<f64>,
) -> Result<(String, Verdict)> {
    let mu = DiscreteMeasure::from_csv(File::open(mu_path)?)?;
    let nu = DiscreteMeasure::from_csv(File::open(nu_path)?)?;
    if mu.dim() != nu.dim() {
        return Err(config_err("measures have different dimensions"));
    }
    let start = Instant::now();
    let r = ot::distance(&mu, &nu, &CostSpec::new(kind, delta)?, tier, reg)?;
    let gap = r.duality_gap.unwrap_or(r.marginal_error);
    let line = format!("{},{},{},{}", r.value, r.solver.as_str(), gap, start.elapsed().as_secs_f64());
    Ok((line, verdict("solver converged", r.converged, String::new())))
}
