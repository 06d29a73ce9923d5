//! Finite-volume solver for the 1-d nonlocal Fokker-Planck equation.
//!
//! The generator is split as in the particle simulator: transport by the
//! compensated drift `b_eff = b - ∫ g ν(dz)` (first-order upwind), then
//! jump redistribution `∂_t ρ = ∫ (T_z ρ - ρ) ν(dz)`, explicit in time,
//! with the pushforward `x ↦ x + g(t, x, z)` deposited linearly onto the two
//! nearest cell centers. Mass leaving `[-L, L]` is moved to an escape ledger.

use crate::error::{config_err, Error, Result};
use crate::field::CoefficientField;
use crate::jump::{compensator_drift, JumpMeasure, JumpQuadrature, RADIAL_ORDER, RADIAL_PANELS};
use crate::measure::{empirical_from_flat, neumaier_sum, DiscreteMeasure, InitialLaw};
use crate::quad;

/// Cell masses on `[-L, L]` split into cells of width `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub half_width: f64,
    pub spacing: f64,
    pub masses: Vec<f64>,
    /// Mass that left the box so far.
    pub escaped: f64,
    pub time: f64,
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl DensityGrid {
    pub fn zeros(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && spacing > 0.0 && spacing < 2.0 * half_width) {
            return Err(config_err(format!("invalid density grid: L = {half_width}, h = {spacing}")));
        }
        let cells = (2.0 * half_width / spacing).round();
        if (cells * spacing - 2.0 * half_width).abs() > 1e-9 * half_width {
            return Err(config_err("cell width must divide the box width"));
        }
        Ok(DensityGrid { half_width, spacing, masses: vec![0.0; cells as usize], escaped: 0.0, time: 0.0 })
    }

    /// Cell masses of `law`, renormalized to the box.
    pub fn from_law(law: &InitialLaw, half_width: f64, spacing: f64) -> Result<Self> {
        if law.dim() != 1 {
            return Err(Error::Unsupported("density grids are 1-d".into()));
        }
        law.validate()?;
        let mut rho = Self::zeros(half_width, spacing)?;
        let (gx, gw) = quad::gauss_legendre(8);
        rho.add_law(law, 1.0, &gx, &gw);
        let total = neumaier_sum(rho.masses.iter().copied());
        if !(total > 0.0) {
            return Err(config_err("initial law puts no mass in the box"));
        }
        rho.masses.iter_mut().for_each(|m| *m /= total);
        Ok(rho)
    }

    fn add_law(&mut self, law: &InitialLaw, scale: f64, gx: &[f64], gw: &[f64]) {
        let h = self.spacing;
        match law {
            InitialLaw::Dirac { at } => self.deposit_split(at[0], scale),
            InitialLaw::Gaussian { mean, std } if *std == 0.0 => self.deposit_split(mean[0], scale),
            InitialLaw::Gaussian { mean, std } => {
                let norm = 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt());
                for i in 0..self.cells() {
                    let c = self.center(i);
                    let m: f64 = gx
                        .iter()
                        .zip(gw)
                        .map(|(x, w)| {
                            let u = (c + 0.5 * h * x - mean[0]) / std;
                            0.5 * h * w * norm * (-0.5 * u * u).exp()
                        })
                        .sum();
                    self.masses[i] += scale * m;
                }
            }
            InitialLaw::UniformBox { lo, hi } => {
                let (a, b) = (lo[0], hi[0]);
                for i in 0..self.cells() {
                    let left = self.center(i) - 0.5 * h;
                    let overlap = (b.min(left + h) - a.max(left)).max(0.0);
                    self.masses[i] += scale * overlap / (b - a);
                }
            }
            InitialLaw::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                for c in components {
                    self.add_law(&c.law, scale * c.weight / total, gx, gw);
                }
            }
        }
    }

    fn deposit_split(&mut self, y: f64, mass: f64) {
        match self.locate(y) {
            Target::Split(j, theta) => {
                self.masses[j] += mass * (1.0 - theta);
                self.masses[j + 1] += mass * theta;
            }
            Target::Cell(j) => self.masses[j] += mass,
            Target::Outside => self.escaped += mass,
        }
    }

    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    pub fn interior_mass(&self) -> f64 {
        neumaier_sum(self.masses.iter().copied())
    }

    /// Interior plus escaped mass.
    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.masses.iter().copied().chain([self.escaped]))
    }

    pub fn min_mass(&self) -> f64 {
        self.masses.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `‖ρ‖_{L^q}` of the piecewise-constant density `m_i / h`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        let h = self.spacing;
        if q.is_infinite() {
            return self.masses.iter().fold(0.0f64, |m, v| m.max(v.abs())) / h;
        }
        neumaier_sum(self.masses.iter().map(|m| h * (m.abs() / h).powf(q))).powf(1.0 / q)
    }

    fn locate(&self, y: f64) -> Target {
        let n = self.cells();
        if !(y >= -self.half_width && y < self.half_width) {
            return Target::Outside;
        }
        let s = (y - self.center(0)) / self.spacing;
        if s <= 0.0 {
            return Target::Cell(0);
        }
        let j = s.floor() as usize;
        if j >= n - 1 {
            return Target::Cell(n - 1);
        }
        Target::Split(j, s - j as f64)
    }

    /// CSV `center,mass`.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["center", "mass"]).map_err(crate::measure::csv_err)?;
        for (i, m) in self.masses.iter().enumerate() {
            w.write_record([self.center(i).to_string(), m.to_string()]).map_err(crate::measure::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    /// Linear split between cells `j` and `j + 1`, fraction `θ` to `j + 1`.
    Split(usize, f64),
    Cell(usize),
    Outside,
}

/// One upwind transport step with face velocities `b_faces` (length cells + 1).
///
/// Fails before touching `rho` if `Δt max|b| / h` exceeds `cfl`.
pub fn drift_step(rho: &mut DensityGrid, b_faces: &[f64], dt: f64, cfl: f64) -> Result<()> {
    let n = rho.cells();
    if b_faces.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: b_faces.len() });
    }
    let courant = dt * b_faces.iter().fold(0.0f64, |m, b| m.max(b.abs())) / rho.spacing;
    if !(courant <= cfl) {
        return Err(Error::Cfl { courant, limit: cfl });
    }
    let r = dt / rho.spacing;
    // flux through face k, positive to the right; no inflow through the box faces
    let flux: Vec<f64> = (0..=n)
        .map(|k| {
            let b = b_faces[k];
            let left = if k > 0 { rho.masses[k - 1] } else { 0.0 };
            let right = if k < n { rho.masses[k] } else { 0.0 };
            r * (b.max(0.0) * left - (-b).max(0.0) * right)
        })
        .collect();
    for i in 0..n {
        rho.masses[i] += flux[i] - flux[i + 1];
    }
    rho.escaped += flux[n] - flux[0];
    Ok(())
}

/// Precomputed pushforward targets for every (cell, node) pair.
#[derive(Debug, Clone)]
pub struct JumpPlan {
    nodes: usize,
    weights: Vec<f64>,
    targets: Vec<Target>,
}

impl JumpPlan {
    pub fn new(rho: &DensityGrid, g: &crate::field::JumpCoefficient, zq: &JumpQuadrature, t: f64) -> Result<Self> {
        if g.dim() != 1 || zq.dim != 1 {
            return Err(Error::Unsupported("density grids are 1-d".into()));
        }
        let mut targets = Vec::with_capacity(rho.cells() * zq.len());
        let mut jump = [0.0];
        for i in 0..rho.cells() {
            let x = [rho.center(i)];
            for k in 0..zq.len() {
                g.eval(t, &x, zq.node(k), &mut jump);
                if !jump[0].is_finite() {
                    return Err(Error::Numerical(format!("non-finite jump at x = {}", x[0])));
                }
                targets.push(rho.locate(x[0] + jump[0]));
            }
        }
        Ok(JumpPlan { nodes: zq.len(), weights: zq.weights.clone(), targets })
    }

    /// `Δt · Σ w_k`, which must not exceed one.
    pub fn courant(&self, dt: f64) -> f64 {
        dt * neumaier_sum(self.weights.iter().copied())
    }
}

/// One explicit Euler step of the jump redistribution.
pub fn jump_step(rho: &mut DensityGrid, plan: &JumpPlan, dt: f64) -> Result<()> {
    let courant = plan.courant(dt);
    if !(courant <= 1.0) {
        return Err(Error::Cfl { courant, limit: 1.0 });
    }
    let n = rho.cells();
    if plan.targets.len() != n * plan.nodes {
        return Err(Error::DimensionMismatch { expected: n * plan.nodes, got: plan.targets.len() });
    }
    let mut acc: Vec<Acc> = rho.masses.iter().map(|&m| Acc { sum: m, comp: 0.0 }).collect();
    let mut escaped = Acc { sum: rho.escaped, comp: 0.0 };
    for i in 0..n {
        let m = rho.masses[i];
        if m == 0.0 {
            continue;
        }
        for (k, target) in plan.targets[i * plan.nodes..(i + 1) * plan.nodes].iter().enumerate() {
            let a = dt * plan.weights[k] * m;
            acc[i].add(-a);
            match *target {
                Target::Split(j, theta) => {
                    // the larger share is rounded, the smaller is its exact complement
                    let (big, small, big_at) = if theta >= 0.5 {
                        let big = a * theta;
                        (big, a - big, j + 1)
                    } else {
                        let big = a * (1.0 - theta);
                        (big, a - big, j)
                    };
                    let small_at = if big_at == j { j + 1 } else { j };
                    acc[big_at].add(big);
                    acc[small_at].add(small);
                }
                Target::Cell(j) => acc[j].add(a),
                Target::Outside => escaped.add(a),
            }
        }
    }
    for (m, a) in rho.masses.iter_mut().zip(&acc) {
        *m = a.value();
    }
    rho.escaped = escaped.value();
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpeConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Gauss order per radial panel of the z-quadrature.
    pub z_order: usize,
    /// Bound on `Δt max|b_eff| / h`.
    pub cfl: f64,
    /// Must lie on the step grid.
    pub record_times: Vec<f64>,
}

impl FpeConfig {
    pub fn new(horizon: f64, dt: f64, record_times: Vec<f64>) -> Self {
        FpeConfig { horizon, dt, z_order: RADIAL_ORDER, cfl: 0.5, record_times }
    }

    /// `count` equispaced record times ending at the horizon.
    pub fn equispaced(horizon: f64, dt: f64, count: usize) -> Self {
        Self::new(horizon, dt, (1..=count).map(|k| horizon * k as f64 / count as f64).collect())
    }

    fn steps(&self) -> Result<(usize, Vec<usize>)> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(config_err(format!("need 0 < dt <= T, got dt = {}, T = {}", self.dt, self.horizon)));
        }
        let k = (self.horizon / self.dt).round();
        if (k * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(config_err("dt must divide the horizon"));
        }
        let rec = self
            .record_times
            .iter()
            .map(|&t| {
                let s = (t / self.dt).round();
                if !(0.0..=k).contains(&s) || (s * self.dt - t).abs() > 1e-9 * self.horizon.max(1.0) {
                    return Err(config_err(format!("record time {t} is not on the step grid")));
                }
                Ok(s as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        if rec.windows(2).any(|w| w[1] < w[0]) {
            return Err(config_err("record times must be nondecreasing"));
        }
        Ok((k as usize, rec))
    }
}

/// Densities at the recorded times plus conservation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FpeTrajectory {
    pub snapshots: Vec<DensityGrid>,
    pub steps: usize,
    /// Largest one-step change of interior plus escaped mass.
    pub max_step_drift: f64,
    /// Smallest cell mass seen at any step.
    pub min_mass: f64,
}

impl FpeTrajectory {
    /// `max_t ‖ρ_t‖_{L^q}` over the recorded snapshots.
    pub fn sup_lq_norm(&self, q: f64) -> f64 {
        self.snapshots.iter().map(|s| s.lq_norm(q)).fold(0.0, f64::max)
    }
}

fn face_velocities(rho: &DensityGrid, coeffs: &CoefficientField, zq: &JumpQuadrature, t: f64) -> Result<Vec<f64>> {
    let mut b = [0.0];
    (0..=rho.cells())
        .map(|k| {
            let x = [-rho.half_width + k as f64 * rho.spacing];
            coeffs.drift.eval(t, &x, &mut b);
            let c = compensator_drift(&coeffs.jump, zq, t, &x)?;
            Ok(b[0] + c[0])
        })
        .collect()
}

/// Largest step allowed by the drift CFL bound and `Δt λ <= 1`, with
/// velocities sampled at `t = 0`.
pub fn stable_dt(
    rho: &DensityGrid,
    coeffs: &CoefficientField,
    nu: &JumpMeasure,
    z_order: usize,
    cfl: f64,
) -> Result<f64> {
    let zq = nu.quadrature_with(RADIAL_PANELS, z_order);
    let bmax = face_velocities(rho, coeffs, &zq, 0.0)?.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let lambda = zq.total_weight();
    let mut dt = f64::INFINITY;
    if bmax > 0.0 {
        dt = dt.min(cfl * rho.spacing / bmax);
    }
    if lambda > 0.0 {
        dt = dt.min(1.0 / lambda);
    }
    Ok(dt)
}

/// March `rho0` to the horizon: each step applies the jump redistribution,
/// then the compensated drift.
pub fn solve(
    rho0: &DensityGrid,
    coeffs: &CoefficientField,
    nu: &JumpMeasure,
    cfg: &FpeConfig,
) -> Result<FpeTrajectory> {
    if coeffs.dim() != 1 || nu.dim != 1 {
        return Err(Error::Unsupported("density grids are 1-d".into()));
    }
    let (steps, record) = cfg.steps()?;
    let zq = nu.quadrature_with(RADIAL_PANELS, cfg.z_order);
    let autonomous = coeffs.drift.is_autonomous() && coeffs.jump.is_autonomous();
    let mut rho = rho0.clone();
    let mut faces = face_velocities(&rho, coeffs, &zq, 0.0)?;
    let mut plan = JumpPlan::new(&rho, &coeffs.jump, &zq, 0.0)?;
    let courant = plan.courant(cfg.dt);
    if courant > 1.0 {
        return Err(Error::Cfl { courant, limit: 1.0 });
    }
    let mut snapshots = Vec::with_capacity(record.len());
    let mut next = 0;
    let mut mass = rho.total_mass();
    let mut max_step_drift: f64 = 0.0;
    let mut min_mass = rho.min_mass();
    for k in 0..=steps {
        while next < record.len() && record[next] == k {
            snapshots.push(rho.clone());
            next += 1;
        }
        if k == steps {
            break;
        }
        let t = k as f64 * cfg.dt;
        if !autonomous && k > 0 {
            faces = face_velocities(&rho, coeffs, &zq, t)?;
            plan = JumpPlan::new(&rho, &coeffs.jump, &zq, t)?;
        }
        jump_step(&mut rho, &plan, cfg.dt)?;
        drift_step(&mut rho, &faces, cfg.dt, cfg.cfl)?;
        rho.time = (k + 1) as f64 * cfg.dt;
        let now = rho.total_mass();
        max_step_drift = max_step_drift.max((now - mass).abs());
        mass = now;
        min_mass = min_mass.min(rho.min_mass());
    }
    Ok(FpeTrajectory { snapshots, steps, max_step_drift, min_mass })
}

/// Atoms at the cell centers with the cell masses, or `n_atoms` equal atoms
/// at the quantiles `(k + 1/2)/n` of the piecewise-constant density.
pub fn density_to_measure(rho: &DensityGrid, n_atoms: Option<usize>) -> Result<DiscreteMeasure> {
    let keep: Vec<usize> = (0..rho.cells()).filter(|&i| rho.masses[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    match n_atoms {
        None => DiscreteMeasure::from_masses(
            1,
            keep.iter().map(|&i| rho.center(i)).collect(),
            keep.iter().map(|&i| rho.masses[i]).collect(),
        ),
        Some(0) => Err(Error::EmptyEnsemble),
        Some(n) => {
            let total = rho.interior_mass();
            let mut coords = Vec::with_capacity(n);
            let mut cum = 0.0;
            let mut it = keep.iter().peekable();
            for k in 0..n {
                let u = (k as f64 + 0.5) / n as f64 * total;
                while let Some(&&i) = it.peek() {
                    if cum + rho.masses[i] > u || it.len() == 1 {
                        break;
                    }
                    cum += rho.masses[i];
                    it.next();
                }
                let i = **it.peek().expect("nonempty");
                let frac = ((u - cum) / rho.masses[i]).clamp(0.0, 1.0);
                coords.push(rho.center(i) + (frac - 0.5) * rho.spacing);
            }
            empirical_from_flat(1, coords)
        }
    }
}
