//! Euler scheme for `dX = b(t,X) dt + ∫ g(t,X-,z) Ñ(dt,dz)` with exact
//! compound-Poisson jumps.
//!
//! Each step draws a Poisson(λΔt) number of marks from `ν/λ`, applies all of
//! them at the pre-step state, and adds the compensator drift
//! `-∫ g ν(dz)` to `b`. Particle `i` reads its noise from stream
//! `(seed, JumpNoise, i)`; two systems simulated on the same seed therefore
//! see identical jump times and marks.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{config_err, Error, Result};
use crate::field::{CoefficientField, JumpCoefficient};
use crate::jump::{compensator_drift, sample_jump_into, total_mass, JumpMeasure, JumpQuadrature};
use crate::measure::{EnsembleSnapshot, InitialLaw};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub particles: usize,
    pub seed: u64,
    /// Must lie on the step grid `k Δt`.
    pub record_times: Vec<f64>,
    /// Particles leaving `[-safety_box, safety_box]^d` are reported.
    pub safety_box: f64,
}

impl SimConfig {
    pub fn new(horizon: f64, dt: f64, particles: usize, seed: u64, record_times: Vec<f64>) -> Self {
        SimConfig { horizon, dt, particles, seed, record_times, safety_box: 1e3 }
    }

    /// `count` equispaced record times ending at the horizon (t = 0 excluded).
    pub fn equispaced(horizon: f64, dt: f64, particles: usize, seed: u64, count: usize) -> Self {
        let times = (1..=count).map(|k| horizon * k as f64 / count as f64).collect();
        Self::new(horizon, dt, particles, seed, times)
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(config_err(format!("need 0 < dt <= T, got dt = {}, T = {}", self.dt, self.horizon)));
        }
        let k = (self.horizon / self.dt).round();
        if ((k * self.dt) - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(config_err("dt must divide the horizon"));
        }
        Ok(k as usize)
    }

    fn record_steps(&self) -> Result<Vec<usize>> {
        let steps = self.steps()?;
        self.record_times
            .iter()
            .map(|&t| {
                if !(0.0..=self.horizon * (1.0 + 1e-12)).contains(&t) {
                    return Err(config_err(format!("record time {t} outside [0, T]")));
                }
                let k = (t / self.dt).round();
                if (k * self.dt - t).abs() > 1e-9 * self.horizon.max(1.0) {
                    return Err(config_err(format!("record time {t} is not on the step grid")));
                }
                Ok((k as usize).min(steps))
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(config_err("need at least one particle"));
        }
        self.record_steps().map(|_| ())
    }

    fn step_time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Recorded snapshots plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<EnsembleSnapshot>,
    /// Ids of particles that left the safety box at some step.
    pub escaped: Vec<usize>,
    /// Total number of jumps per particle over `[0, T]`.
    pub jump_counts: Vec<u64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.snapshots.first().map_or(0, |s| s.dim)
    }

    /// CSV with columns `time, particle_id, x_1..x_d`.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.dim();
        let mut header = vec!["time".to_string(), "particle_id".to_string()];
        header.extend((1..=d).map(|k| format!("x_{k}")));
        w.write_record(&header).map_err(crate::measure::csv_err)?;
        for snap in &self.snapshots {
            for i in 0..snap.len() {
                let mut row = vec![snap.time.to_string(), i.to_string()];
                row.extend(snap.particle(i).iter().map(|v| v.to_string()));
                w.write_record(&row).map_err(crate::measure::csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-step jump noise: a Poisson count and that many marks.
pub struct StepNoise {
    poisson: Option<Poisson<f64>>,
    nu: JumpMeasure,
}

impl StepNoise {
    pub fn new(nu: &JumpMeasure, dt: f64) -> Result<Self> {
        let mean = total_mass(nu)? * dt;
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| Error::Numerical(format!("poisson({mean}): {e}")))?)
        } else {
            None
        };
        Ok(StepNoise { poisson, nu: nu.clone() })
    }

    /// Draw one step's marks into `marks` (row-major); returns the count.
    pub fn draw<R: Rng>(&self, rng: &mut R, marks: &mut Vec<f64>) -> usize {
        marks.clear();
        let count = match &self.poisson {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        };
        let d = self.nu.dim;
        marks.resize(count * d, 0.0);
        for j in 0..count {
            sample_jump_into(&self.nu, rng, &mut marks[j * d..(j + 1) * d]);
        }
        count
    }
}

/// Compensator evaluation with a fast path for `g = a(t,x) z`.
struct Compensator {
    quad: JumpQuadrature,
    /// `-∫ z ν(dz)` by the same quadrature.
    linear: Vec<f64>,
}

impl Compensator {
    fn new(nu: &JumpMeasure) -> Result<Self> {
        let quad = nu.quadrature();
        let linear = compensator_drift(&JumpCoefficient::additive(nu.dim), &quad, 0.0, &vec![0.0; nu.dim])?;
        Ok(Compensator { quad, linear })
    }

    fn eval(&self, g: &JumpCoefficient, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        match g.amplitude() {
            Some(a) => {
                let a = a.value(t, x);
                for (o, l) in out.iter_mut().zip(&self.linear) {
                    *o = a * l;
                }
            }
            None => out.copy_from_slice(&compensator_drift(g, &self.quad, t, x)?),
        }
        Ok(())
    }
}

struct ParticleRun {
    /// `records × systems × d`.
    states: Vec<f64>,
    escaped: bool,
    jumps: u64,
}

/// Advance one particle for every coefficient set in lock-step on one
/// noise stream.
#[allow(clippy::too_many_arguments)]
fn run_particle(
    cfg: &SimConfig,
    steps: usize,
    record_steps: &[usize],
    systems: &[&CoefficientField],
    starts: &[&[f64]],
    noise: &StepNoise,
    comp: &Compensator,
    stream: u64,
) -> Result<ParticleRun> {
    let d = starts[0].len();
    let s = systems.len();
    let mut rng = rng::stream(cfg.seed, Domain::JumpNoise, stream);
    let mut x: Vec<f64> = starts.iter().flat_map(|p| p.iter().copied()).collect();
    let mut states = Vec::with_capacity(record_steps.len() * s * d);
    let mut next_record = 0;
    let mut marks = Vec::new();
    let mut drift = vec![0.0; d];
    let mut comp_v = vec![0.0; d];
    let mut jump = vec![0.0; d];
    let mut incr = vec![0.0; d];
    let mut escaped = false;
    let mut jumps = 0u64;

    let record = |k: usize, x: &[f64], states: &mut Vec<f64>, next: &mut usize| {
        while *next < record_steps.len() && record_steps[*next] == k {
            states.extend_from_slice(x);
            *next += 1;
        }
    };
    record(0, &x, &mut states, &mut next_record);
    for k in 0..steps {
        let t = cfg.step_time(k);
        let count = noise.draw(&mut rng, &mut marks);
        jumps += count as u64;
        for (si, field) in systems.iter().enumerate() {
            let xs = &mut x[si * d..(si + 1) * d];
            field.drift.eval(t, xs, &mut drift);
            comp.eval(&field.jump, t, xs, &mut comp_v)?;
            for i in 0..d {
                incr[i] = (drift[i] + comp_v[i]) * cfg.dt;
            }
            for j in 0..count {
                field.jump.eval(t, xs, &marks[j * d..(j + 1) * d], &mut jump);
                for i in 0..d {
                    incr[i] += jump[i];
                }
            }
            for i in 0..d {
                xs[i] += incr[i];
            }
            if xs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("particle {stream} became non-finite at t = {t}")));
            }
            if xs.iter().any(|v| v.abs() > cfg.safety_box) {
                escaped = true;
            }
        }
        record(k + 1, &x, &mut states, &mut next_record);
    }
    Ok(ParticleRun { states, escaped, jumps })
}

fn run_systems(
    cfg: &SimConfig,
    systems: &[&CoefficientField],
    nu: &JumpMeasure,
    starts: &[Vec<f64>],
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    let d = nu.dim;
    for f in systems {
        if f.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
        }
    }
    for s in starts {
        if s.len() != cfg.particles * d {
            return Err(Error::DimensionMismatch { expected: cfg.particles * d, got: s.len() });
        }
    }
    let steps = cfg.steps()?;
    let record_steps = cfg.record_steps()?;
    let mut order: Vec<usize> = (0..record_steps.len()).collect();
    order.sort_by_key(|&r| record_steps[r]);
    let sorted_steps: Vec<usize> = order.iter().map(|&r| record_steps[r]).collect();
    let noise = StepNoise::new(nu, cfg.dt)?;
    let comp = Compensator::new(nu)?;

    let runs: Vec<ParticleRun> = (0..cfg.particles)
        .into_par_iter()
        .map(|i| {
            let st: Vec<&[f64]> = starts.iter().map(|s| &s[i * d..(i + 1) * d]).collect();
            run_particle(cfg, steps, &sorted_steps, systems, &st, &noise, &comp, i as u64)
        })
        .collect::<Result<_>>()?;

    let s = systems.len();
    let escaped: Vec<usize> = runs.iter().enumerate().filter(|(_, r)| r.escaped).map(|(i, _)| i).collect();
    let jump_counts: Vec<u64> = runs.iter().map(|r| r.jumps).collect();
    Ok((0..s)
        .map(|si| {
            let mut snapshots: Vec<EnsembleSnapshot> = Vec::with_capacity(record_steps.len());
            for (slot, &r) in order.iter().enumerate() {
                let mut positions = Vec::with_capacity(cfg.particles * d);
                for run in &runs {
                    let base = (slot * s + si) * d;
                    positions.extend_from_slice(&run.states[base..base + d]);
                }
                snapshots.push(EnsembleSnapshot { time: cfg.record_times[r], dim: d, positions });
            }
            // restore the caller's record order
            let mut out = vec![None; record_steps.len()];
            for (slot, snap) in order.iter().zip(snapshots) {
                out[*slot] = Some(snap);
            }
            Trajectory {
                snapshots: out.into_iter().map(|s| s.expect("every record filled")).collect(),
                escaped: escaped.clone(),
                jump_counts: jump_counts.clone(),
            }
        })
        .collect())
}

/// Simulate `cfg.particles` independent copies started from `mu0`.
pub fn simulate(cfg: &SimConfig, coeffs: &CoefficientField, nu: &JumpMeasure, mu0: &InitialLaw) -> Result<Trajectory> {
    if mu0.dim() != nu.dim {
        return Err(Error::DimensionMismatch { expected: nu.dim, got: mu0.dim() });
    }
    let starts = mu0.sample_flat(cfg.particles, cfg.seed)?;
    Ok(run_systems(cfg, &[coeffs], nu, &[starts])?.remove(0))
}

/// How the two systems of a pair draw their starting points.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCoupling {
    /// Both systems start from the same draw of one law.
    Diagonal(InitialLaw),
    /// Independent draws (second law sampled on `seed + 1`).
    Independent(InitialLaw, InitialLaw),
    /// Explicit paired starting points, row-major.
    Paired(Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Both systems read the same Poisson random measure.
    Common,
    /// The second system uses noise from `seed + 1`.
    Independent,
}

/// Two systems on one probability space.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedEnsemble {
    pub first: Trajectory,
    pub second: Trajectory,
}

impl PairedEnsemble {
    /// `Z_t = Y¹_t - Y²_t` at record `k`, row-major.
    pub fn difference(&self, k: usize) -> Vec<f64> {
        let a = &self.first.snapshots[k].positions;
        let b = &self.second.snapshots[k].positions;
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    /// `max_i |Z^i_t|` at record `k`.
    pub fn max_difference(&self, k: usize) -> f64 {
        let d = self.first.dim();
        self.difference(k).chunks_exact(d).map(|z| z.iter().map(|c| c * c).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

pub fn coupled_simulate(
    cfg: &SimConfig,
    coeffs1: &CoefficientField,
    coeffs2: &CoefficientField,
    nu: &JumpMeasure,
    pi0: &InitialCoupling,
) -> Result<PairedEnsemble> {
    coupled_simulate_with(cfg, coeffs1, coeffs2, nu, pi0, NoiseMode::Common)
}

pub fn coupled_simulate_with(
    cfg: &SimConfig,
    coeffs1: &CoefficientField,
    coeffs2: &CoefficientField,
    nu: &JumpMeasure,
    pi0: &InitialCoupling,
    noise: NoiseMode,
) -> Result<PairedEnsemble> {
    if coeffs1.dim() != coeffs2.dim() {
        return Err(Error::DimensionMismatch { expected: coeffs1.dim(), got: coeffs2.dim() });
    }
    let (s1, s2) = match pi0 {
        InitialCoupling::Diagonal(law) => {
            let s = law.sample_flat(cfg.particles, cfg.seed)?;
            (s.clone(), s)
        }
        InitialCoupling::Independent(a, b) => {
            (a.sample_flat(cfg.particles, cfg.seed)?, b.sample_flat(cfg.particles, cfg.seed.wrapping_add(1))?)
        }
        InitialCoupling::Paired(a, b) => (a.clone(), b.clone()),
    };
    match noise {
        NoiseMode::Common => {
            let mut out = run_systems(cfg, &[coeffs1, coeffs2], nu, &[s1, s2])?;
            let second = out.pop().expect("two systems");
            let first = out.pop().expect("two systems");
            Ok(PairedEnsemble { first, second })
        }
        NoiseMode::Independent => {
            let first = run_systems(cfg, &[coeffs1], nu, &[s1])?.remove(0);
            let cfg2 = SimConfig { seed: cfg.seed.wrapping_add(1), ..cfg.clone() };
            let second = run_systems(&cfg2, &[coeffs2], nu, &[s2])?.remove(0);
            Ok(PairedEnsemble { first, second })
        }
    }
}

/// Empirical `E|X_t|` and `E log(1 + |X_t|²)` per recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub times: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub mean_log: Vec<f64>,
    pub sup_abs: f64,
    pub sup_log: f64,
}

pub fn moment_diagnostics(traj: &[EnsembleSnapshot]) -> Result<MomentReport> {
    if traj.is_empty() {
        return Err(config_err("empty trajectory"));
    }
    let mut times = Vec::new();
    let mut mean_abs = Vec::new();
    let mut mean_log = Vec::new();
    for snap in traj {
        let n = snap.len();
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let norms2 = snap.positions.chunks_exact(snap.dim).map(|x| x.iter().map(|c| c * c).sum::<f64>());
        let (mut a, mut l) = (0.0, 0.0);
        for r2 in norms2 {
            a += r2.sqrt();
            l += r2.ln_1p();
        }
        times.push(snap.time);
        mean_abs.push(a / n as f64);
        mean_log.push(l / n as f64);
    }
    let sup_abs = mean_abs.iter().copied().fold(0.0, f64::max);
    let sup_log = mean_log.iter().copied().fold(0.0, f64::max);
    Ok(MomentReport { times, mean_abs, mean_log, sup_abs, sup_log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{DriftField, Linear};
    use crate::jump::SignMode;
    use std::sync::Arc;

    fn nu1() -> JumpMeasure {
        JumpMeasure::new(1, 1.0, 0.1, 1.0, SignMode::Symmetric).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig::new(1.0, 0.3, 4, 0, vec![]);
        assert!(c.steps().is_err());
        c.dt = 0.25;
        assert_eq!(c.steps().unwrap(), 4);
        c.record_times = vec![0.3];
        assert!(c.validate().is_err());
        c.record_times = vec![1.5];
        assert!(c.validate().is_err());
        c.record_times = vec![0.0, 0.5];
        assert!(c.validate().is_ok());
        c.particles = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn frozen_dynamics_is_a_fixed_point() {
        let cfg = SimConfig::equispaced(1.0, 0.01, 64, 9, 5);
        let law = InitialLaw::Gaussian { mean: vec![0.0], std: 1.0 };
        let traj = simulate(&cfg, &CoefficientField::frozen(1), &nu1(), &law).unwrap();
        let x0 = law.sample_flat(64, 9).unwrap();
        for s in &traj.snapshots {
            assert_eq!(s.positions, x0);
        }
        assert!(traj.jump_counts.iter().sum::<u64>() > 0);
    }

    #[test]
    fn records_follow_caller_order() {
        let cfg = SimConfig::new(1.0, 0.1, 8, 1, vec![1.0, 0.0, 0.5]);
        let f = CoefficientField::new(
            "lin",
            DriftField { components: vec![Arc::new(Linear { coeffs: vec![-1.0], offset: 0.0 })] },
            JumpCoefficient::zero(1),
        )
        .unwrap();
        let traj = simulate(&cfg, &f, &nu1(), &InitialLaw::Dirac { at: vec![1.0] }).unwrap();
        let times: Vec<f64> = traj.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![1.0, 0.0, 0.5]);
        assert_eq!(traj.snapshots[1].positions[0], 1.0);
        assert!((traj.snapshots[0].positions[0] - 0.9f64.powi(10)).abs() < 1e-14);
    }

    #[test]
    fn moment_constants() {
        let snap = |x: f64| EnsembleSnapshot { time: 0.0, dim: 1, positions: vec![x; 3] };
        let r = moment_diagnostics(&[snap(0.0), snap(0.0)]).unwrap();
        assert_eq!((r.sup_abs, r.sup_log), (0.0, 0.0));
        let r = moment_diagnostics(&[snap(1.0), snap(-1.0)]).unwrap();
        assert_eq!(r.mean_abs, vec![1.0, 1.0]);
        assert!(r.mean_log.iter().all(|l| (l - 2f64.ln()).abs() < 1e-15));
        assert!(moment_diagnostics(&[]).is_err());
    }

    #[test]
    fn escapes_are_flagged_not_clipped() {
        let mut cfg = SimConfig::new(1.0, 0.1, 4, 0, vec![1.0]);
        cfg.safety_box = 1.5;
        let f = CoefficientField::new(
            "push",
            DriftField { components: vec![Arc::new(Linear { coeffs: vec![0.0], offset: 1.0 })] },
            JumpCoefficient::zero(1),
        )
        .unwrap();
        let traj = simulate(&cfg, &f, &nu1(), &InitialLaw::Dirac { at: vec![1.0] }).unwrap();
        assert_eq!(traj.escaped, vec![0, 1, 2, 3]);
        assert!((traj.snapshots[0].positions[0] - 2.0).abs() < 1e-12);
    }
}
