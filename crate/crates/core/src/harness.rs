//! Configuration-driven experiments.
//!
//! Each experiment resolves its presets, fans seeds out with rayon, keeps
//! results in (rung, seed, time) order and reduces them to verdicts with a
//! pure function of the stored rows, so a report read back from disk
//! yields the same verdicts.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, BoundInputs, Window};
use crate::error::{config_err, Error, Result};
use crate::field::CoefficientField;
use crate::fpe::{self, DensityGrid, FpeConfig};
use crate::grid::GridSpec;
use crate::jump::{JumpMeasure, RADIAL_ORDER};
use crate::measure::{self, DiscreteMeasure, InitialLaw};
use crate::ot;
use crate::presets::{self, fingerprint, JumpRef, LawRef};
use crate::rng::{self, Domain};
use crate::sde::{self, InitialCoupling, NoiseMode, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ValidateScaling,
    MollifySweep,
    SuperpositionCheck,
    MomentCheck,
    RelationsCheck,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::ValidateScaling => "validate-scaling",
            ExperimentKind::MollifySweep => "mollify-sweep",
            ExperimentKind::SuperpositionCheck => "superposition-check",
            ExperimentKind::MomentCheck => "moment-check",
            ExperimentKind::RelationsCheck => "relations-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChoice {
    Common,
    Independent,
}

/// Every knob of every experiment; unset fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub coefficients: String,
    pub drift_perturbation: String,
    pub jump_perturbation: Option<String>,
    pub jump_measure: JumpRef,
    pub initial_law: LawRef,
    pub particles: usize,
    pub dt: f64,
    pub horizon: f64,
    pub record_count: usize,
    pub delta: f64,
    /// Perturbation sizes `h` of the scaling ladder.
    pub ladder: Vec<f64>,
    /// Mollification indices `n`, scale `1/n`.
    pub mollify_ladder: Vec<usize>,
    /// Spatial exponent of the coefficient norms.
    pub p: f64,
    pub half_width: f64,
    pub spacing: f64,
    pub particle_ladder: Vec<usize>,
    pub spacing_ladder: Vec<f64>,
    pub seeds: Vec<u64>,
    pub noise: NoiseChoice,
    /// Random measure pairs of the relations sweep.
    pub pairs: usize,
    pub pair_size: usize,
    pub pair_dim: usize,
    pub deltas: Vec<f64>,
    /// Output directory; the CLI `--out` flag overrides it.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            coefficients: "smooth".into(),
            drift_perturbation: "drift-bump".into(),
            jump_perturbation: None,
            jump_measure: JumpRef::Name("sym-a1".into()),
            initial_law: LawRef::Name("gauss-0.5".into()),
            particles: 4096,
            dt: 0.01,
            horizon: 1.0,
            record_count: 5,
            delta: 0.05,
            ladder: vec![0.1, 0.2, 0.4],
            mollify_ladder: vec![4, 8, 16, 32],
            p: 4.0,
            half_width: 4.0,
            spacing: 1.0 / 256.0,
            particle_ladder: vec![256, 1024, 4096],
            spacing_ladder: vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
            seeds: (0..10).collect(),
            noise: NoiseChoice::Common,
            pairs: 100,
            pair_size: 32,
            pair_dim: 1,
            deltas: vec![0.05, 0.2, 1.0, 5.0],
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Replace the seed list by `base, base+1, ...` of the same length.
    pub fn with_base_seed(mut self, base: u64) -> Self {
        let n = self.seeds.len().max(1) as u64;
        self.seeds = (base..base + n).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        presets::coefficients(&self.coefficients)?;
        presets::perturbation(&self.drift_perturbation)?;
        if let Some(j) = &self.jump_perturbation {
            presets::perturbation(j)?;
        }
        self.jump_measure.resolve()?;
        self.initial_law.resolve()?;
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(format!("{what} must be positive, got {v}")))
            }
        };
        pos(self.dt, "dt")?;
        pos(self.horizon, "horizon")?;
        pos(self.delta, "delta")?;
        pos(self.half_width, "half_width")?;
        pos(self.spacing, "spacing")?;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(config_err(format!("p must satisfy 1 < p < ∞, got {}", self.p)));
        }
        if self.particles == 0 || self.record_count == 0 || self.seeds.is_empty() {
            return Err(config_err("particles, record_count and seeds must be nonempty"));
        }
        if self.ladder.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(config_err("perturbation ladder entries must be finite and nonnegative"));
        }
        if self.mollify_ladder.iter().any(|&n| n < 2) {
            return Err(config_err("mollification indices must be at least 2"));
        }
        if self.particle_ladder.len() != self.spacing_ladder.len() {
            return Err(config_err("particle and spacing ladders must have equal length"));
        }
        for &h in &self.spacing_ladder {
            pos(h, "ladder spacing")?;
        }
        for &d in &self.deltas {
            pos(d, "relations delta")?;
        }
        Ok(())
    }

    fn coefficient_set(&self) -> Result<CoefficientField> {
        presets::coefficients(&self.coefficients)
    }

    fn sim(&self, particles: usize, dt: f64, seed: u64) -> SimConfig {
        SimConfig::equispaced(self.horizon, dt, particles, seed, self.record_count)
    }

    fn noise_mode(&self) -> NoiseMode {
        match self.noise {
            NoiseChoice::Common => NoiseMode::Common,
            NoiseChoice::Independent => NoiseMode::Independent,
        }
    }

    fn provenance(&self, extra: &[(&str, String)]) -> Result<Provenance> {
        let mut presets = vec![
            ("coefficients".to_string(), format!("{}:{}", self.coefficients, fingerprint(&self.coefficient_set()?))),
            ("jump_measure".to_string(), fingerprint(&self.jump_measure.resolve()?)),
            ("initial_law".to_string(), fingerprint(&self.initial_law.resolve()?)),
        ];
        presets.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        let mut bare = self.clone();
        bare.output = None;
        Ok(Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: fingerprint(&serde_json::to_string(&bare)?),
            seeds: self.seeds.clone(),
            presets,
        })
    }
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    /// Parse a field written by [`fmt::Display`]; round-trips exactly.
    pub fn parse(s: &str) -> Cell {
        if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(s.to_string())
        }
    }

    pub fn num(&self) -> f64 {
        match self {
            Cell::Int(i) => *i as f64,
            Cell::Num(x) => *x,
            Cell::Text(_) => f64::NAN,
        }
    }

    pub fn text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Num(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Verdict { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// `(role, fingerprint)` of every preset used.
    pub presets: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
    /// Not written to the report files.
    pub wall_time: Duration,
}

const HEADER_NOTE: &str =
    "scaling and boundedness are tested; the bound's constants are unknown, so the literal inequality is not checked";

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| config_err(format!("no column '{name}'")))
    }

    /// Rows CSV with a `#` comment header carrying provenance.
    pub fn write_rows<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.provenance;
        writeln!(out, "# experiment: {}", self.kind.as_str())?;
        writeln!(out, "# {HEADER_NOTE}")?;
        writeln!(out, "# version: {}", p.version)?;
        writeln!(out, "# config: {}", p.config_hash)?;
        writeln!(out, "# seeds: {}", p.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "))?;
        for (k, v) in &p.presets {
            writeln!(out, "# preset {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).map_err(measure::csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(measure::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_verdicts<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["verdict", "passed", "detail"]).map_err(measure::csv_err)?;
        for v in &self.verdicts {
            w.write_record([v.name.as_str(), if v.passed { "true" } else { "false" }, v.detail.as_str()])
                .map_err(measure::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<kind>.csv` and `<kind>_verdicts.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let rows = dir.join(format!("{}.csv", self.kind.as_str()));
        let verdicts = dir.join(format!("{}_verdicts.csv", self.kind.as_str()));
        self.write_rows(std::io::BufWriter::new(std::fs::File::create(&rows)?))?;
        self.write_verdicts(std::io::BufWriter::new(std::fs::File::create(&verdicts)?))?;
        Ok((rows, verdicts))
    }
}

/// Read back the `(columns, rows)` of a rows CSV.
pub fn read_rows<R: std::io::Read>(input: R) -> Result<(Vec<String>, Vec<Vec<Cell>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let columns = r.headers().map_err(measure::csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(Cell::parse).collect()).map_err(measure::csv_err))
        .collect::<Result<_>>()?;
    Ok((columns, rows))
}

/// Median, averaging the middle pair for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Distinct values of a column in first-appearance order.
fn distinct(rows: &[Vec<Cell>], col: usize) -> Vec<Cell> {
    let mut out: Vec<Cell> = Vec::new();
    for r in rows {
        if !out.contains(&r[col]) {
            out.push(r[col].clone());
        }
    }
    out
}

/// Median of `value` over rows matching every `(column, cell)` filter.
fn median_where(rows: &[Vec<Cell>], filters: &[(usize, &Cell)], value: usize) -> f64 {
    let v: Vec<f64> =
        rows.iter().filter(|r| filters.iter().all(|(c, want)| &r[*c] == *want)).map(|r| r[value].num()).collect();
    median(&v)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ")
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        Some(ExperimentKind::ValidateScaling) => run_validate_scaling(cfg),
        Some(ExperimentKind::MollifySweep) => run_mollify_sweep(cfg),
        Some(ExperimentKind::SuperpositionCheck) => run_superposition_check(cfg),
        Some(ExperimentKind::MomentCheck) => run_moment_check(cfg),
        Some(ExperimentKind::RelationsCheck) => run_relations_check(cfg),
        None => Err(config_err("config has no 'experiment' field")),
    }
}

/// Verdicts recomputed from stored rows.
pub fn recompute_verdicts(kind: ExperimentKind, columns: &[String], rows: &[Vec<Cell>]) -> Result<Vec<Verdict>> {
    let col =
        |name: &str| columns.iter().position(|c| c == name).ok_or_else(|| config_err(format!("no column '{name}'")));
    match kind {
        ExperimentKind::ValidateScaling => {
            Ok(scaling_verdicts(rows, [col("ladder")?, col("h")?, col("time")?, col("distance")?, col("term_b")?]))
        }
        ExperimentKind::MollifySweep => Ok(mollify_verdicts(
            rows,
            [col("n")?, col("delta_n")?, col("time")?, col("distance")?, col("weak_gap")?, col("identity")?],
        )),
        ExperimentKind::SuperpositionCheck => {
            Ok(superposition_verdicts(rows, [col("rung")?, col("time")?, col("distance")?, col("escaped")?]))
        }
        ExperimentKind::MomentCheck => Ok(moment_verdicts(rows, [col("dt")?, col("sup_abs")?, col("sup_log")?])),
        ExperimentKind::RelationsCheck => Ok(relations_verdicts(
            rows,
            [col("source")?, col("instance")?, col("delta")?, col("tilde")?, col("plain")?, col("holds")?],
        )),
    }
}

fn rho_sup_norm(
    coeffs: &CoefficientField,
    nu: &JumpMeasure,
    law: &InitialLaw,
    cfg: &ExperimentConfig,
    q: f64,
) -> Result<f64> {
    if coeffs.dim() != 1 {
        return Ok(f64::NAN);
    }
    let rho0 = DensityGrid::from_law(law, cfg.half_width, cfg.spacing)?;
    let dt = grid_dt(&rho0, coeffs, nu, cfg.horizon, cfg.record_count, cfg.dt)?;
    let traj = fpe::solve(&rho0, coeffs, nu, &FpeConfig::equispaced(cfg.horizon, dt, cfg.record_count))?;
    Ok(traj.sup_lq_norm(q).max(rho0.lq_norm(q)))
}

/// Largest stable grid step that is at most `cap` and puts `count` equispaced
/// record times on the step grid.
pub fn grid_dt(
    rho: &DensityGrid,
    coeffs: &CoefficientField,
    nu: &JumpMeasure,
    horizon: f64,
    count: usize,
    cap: f64,
) -> Result<f64> {
    let dt = fpe::stable_dt(rho, coeffs, nu, RADIAL_ORDER, 0.5)?.min(cap);
    let per = (horizon / (count as f64 * dt)).ceil().max(1.0);
    Ok(horizon / (per * count as f64))
}

/// Coupled ladder `b² = b¹ + h φ` (and optionally `g² = g¹ + h ψ`).
pub fn run_validate_scaling(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let base = cfg.coefficient_set()?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let grid = GridSpec::new(base.dim(), cfg.half_width, cfg.spacing)?;
    let window = Window::autonomous(grid, cfg.horizon)?;
    let q_star = analysis::conjugate(cfg.p);
    let rho1 = rho_sup_norm(&base, &nu, &law, cfg, q_star)?;

    let mut ladders = vec![("drift", presets::perturbation(&cfg.drift_perturbation)?)];
    if let Some(j) = &cfg.jump_perturbation {
        ladders.push(("jump", presets::perturbation(j)?));
    }
    let mut hs = vec![0.0];
    hs.extend(cfg.ladder.iter().copied().filter(|h| *h > 0.0));

    let mut rows = Vec::new();
    for (label, pert) in &ladders {
        for &h in &hs {
            let other = pert.apply(&base, h)?;
            let rho2 = if h == 0.0 { rho1 } else { rho_sup_norm(&other, &nu, &law, cfg, q_star)? };
            let mu0 = measure::empirical_from_flat(base.dim(), law.sample_flat(cfg.particles, cfg.seeds[0])?)?;
            let initial_distance = ot::kr_tilde(&mu0, &mu0, cfg.delta)?;
            let terms = analysis::theorem_terms(&BoundInputs {
                b1: &base.drift,
                b2: &other.drift,
                g1: &base.jump,
                g2: &other.jump,
                nu: &nu,
                p: cfg.p,
                window: &window,
                rho_norms: [rho1, rho2],
                delta: cfg.delta,
                initial_distance,
            })?;
            let per_seed: Vec<Result<Vec<(f64, f64, f64)>>> = cfg
                .seeds
                .par_iter()
                .map(|&seed| {
                    let pair = sde::coupled_simulate_with(
                        &cfg.sim(cfg.particles, cfg.dt, seed),
                        &base,
                        &other,
                        &nu,
                        &InitialCoupling::Diagonal(law.clone()),
                        cfg.noise_mode(),
                    )?;
                    (0..pair.first.snapshots.len())
                        .map(|k| {
                            let a = pair.first.snapshots[k].to_measure()?;
                            let b = pair.second.snapshots[k].to_measure()?;
                            Ok((pair.first.snapshots[k].time, ot::kr_tilde(&a, &b, cfg.delta)?, pair.max_difference(k)))
                        })
                        .collect()
                })
                .collect();
            for (seed, res) in cfg.seeds.iter().zip(per_seed) {
                for (t, d, zmax) in res? {
                    rows.push(vec![
                        Cell::from(*label),
                        h.into(),
                        (*seed).into(),
                        t.into(),
                        d.into(),
                        zmax.into(),
                        terms.term_b.into(),
                        terms.term_g2.into(),
                        terms.term_g4.into(),
                        terms.term_grad_b.into(),
                        terms.term_grad_g2.into(),
                        terms.term_grad_g4.into(),
                        terms.rho_norm_1.into(),
                        terms.rho_norm_2.into(),
                    ]);
                }
            }
        }
    }
    let columns = columns(&[
        "ladder",
        "h",
        "seed",
        "time",
        "distance",
        "max_displacement",
        "term_b",
        "term_g2",
        "term_g4",
        "term_grad_b",
        "term_grad_g2",
        "term_grad_g4",
        "rho_norm_1",
        "rho_norm_2",
    ]);
    let verdicts = scaling_verdicts(&rows, [0, 1, 3, 4, 6]);
    let mut extra = vec![("drift_perturbation", fingerprint(&ladders[0].1))];
    if ladders.len() > 1 {
        extra.push(("jump_perturbation", fingerprint(&ladders[1].1)));
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::ValidateScaling,
        columns,
        rows,
        verdicts,
        provenance: cfg.provenance(&extra)?,
        wall_time: start.elapsed(),
    })
}

fn scaling_verdicts(rows: &[Vec<Cell>], [c_ladder, c_h, c_time, c_dist, c_term]: [usize; 5]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let zero = Cell::Num(0.0);
    let zero_max = rows.iter().filter(|r| r[c_h] == zero).map(|r| r[c_dist].num()).fold(0.0, f64::max);
    out.push(Verdict::new("zero rung exact", zero_max == 0.0, format!("max distance at h = 0: {zero_max:e}")));
    let times = distinct(rows, c_time);
    for ladder in distinct(rows, c_ladder) {
        let name = ladder.text();
        let hs: Vec<Cell> = distinct(rows, c_h).into_iter().filter(|h| h.num() > 0.0).collect();
        let mut monotone = true;
        let mut detail = Vec::new();
        for t in &times {
            let med: Vec<f64> =
                hs.iter().map(|h| median_where(rows, &[(c_ladder, &ladder), (c_h, h), (c_time, t)], c_dist)).collect();
            monotone &= strictly_increasing(&med);
            detail.push(format!("t={}: {}", t, fmt_list(&med)));
        }
        out.push(Verdict::new(&format!("{name} ladder monotone in h"), monotone, detail.join("; ")));
        let last = times.last().cloned().unwrap_or(Cell::Num(f64::NAN));
        let h_vals: Vec<f64> = hs.iter().map(|h| h.num()).collect();
        let med: Vec<f64> =
            hs.iter().map(|h| median_where(rows, &[(c_ladder, &ladder), (c_h, h), (c_time, &last)], c_dist)).collect();
        let terms: Vec<f64> =
            hs.iter().map(|h| median_where(rows, &[(c_ladder, &ladder), (c_h, h), (c_time, &last)], c_term)).collect();
        let slope = log_log_slope(&h_vals, &med);
        if name == "drift" {
            let term_slope = log_log_slope(&terms, &med);
            out.push(Verdict::new(
                "drift log-log slope in [0.5, 1.5]",
                (0.5..=1.5).contains(&slope),
                format!("slope vs h {slope:.4}, vs term_b {term_slope:.4}, medians at T {}", fmt_list(&med)),
            ));
        }
    }
    out
}

/// `b^n = b¹ * χ_{1/n}`, `g^n = g¹ * χ_{1/n}` against the unmollified system.
pub fn run_mollify_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let base = cfg.coefficient_set()?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let grid = GridSpec::new(base.dim(), cfg.half_width, cfg.spacing)?;
    let window = Window::autonomous(grid.clone(), cfg.horizon)?;

    let identity = analysis::delta_n(&base.drift, &base.drift, &base.jump, &base.jump, &nu, cfg.p, &window)?;
    let mut rows = Vec::new();
    for &n in &cfg.mollify_ladder {
        let eps = 1.0 / n as f64;
        let bn = analysis::mollify_drift(&base.drift, &grid, eps)?;
        let gn = analysis::mollify_jump(&base.jump, &grid, eps)?;
        let other = CoefficientField::new(format!("{}*chi_{n}", base.name), bn, gn)?;
        let dn = analysis::delta_n(&base.drift, &other.drift, &base.jump, &other.jump, &nu, cfg.p, &window)?;
        let per_seed: Vec<Result<Vec<(f64, f64, f64)>>> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let pair = sde::coupled_simulate_with(
                    &cfg.sim(cfg.particles, cfg.dt, seed),
                    &base,
                    &other,
                    &nu,
                    &InitialCoupling::Diagonal(law.clone()),
                    cfg.noise_mode(),
                )?;
                (0..pair.first.snapshots.len())
                    .map(|k| {
                        let a = pair.first.snapshots[k].to_measure()?;
                        let b = pair.second.snapshots[k].to_measure()?;
                        Ok((pair.first.snapshots[k].time, ot::kr_tilde(&a, &b, dn)?, measure::weak_gap(&a, &b)?))
                    })
                    .collect()
            })
            .collect();
        for (seed, res) in cfg.seeds.iter().zip(per_seed) {
            for (t, d, wg) in res? {
                rows.push(vec![
                    Cell::from(n),
                    eps.into(),
                    dn.into(),
                    identity.into(),
                    (*seed).into(),
                    t.into(),
                    d.into(),
                    wg.into(),
                ]);
            }
        }
    }
    let columns = columns(&["n", "eps", "delta_n", "identity", "seed", "time", "distance", "weak_gap"]);
    let verdicts = mollify_verdicts(&rows, [0, 2, 5, 6, 7, 3]);
    Ok(ExperimentReport {
        kind: ExperimentKind::MollifySweep,
        columns,
        rows,
        verdicts,
        provenance: cfg.provenance(&[])?,
        wall_time: start.elapsed(),
    })
}

fn mollify_verdicts(rows: &[Vec<Cell>], [c_n, c_dn, c_time, c_dist, c_wg, c_id]: [usize; 6]) -> Vec<Verdict> {
    let ns = distinct(rows, c_n);
    let times = distinct(rows, c_time);
    let last = times.last().cloned().unwrap_or(Cell::Num(f64::NAN));
    let dn: Vec<f64> = ns.iter().map(|n| median_where(rows, &[(c_n, n)], c_dn)).collect();
    let ratios: Vec<f64> = dn.windows(2).map(|w| w[1] / w[0]).collect();
    // sup over recorded times of the seed median
    let sup: Vec<f64> = ns
        .iter()
        .map(|n| times.iter().map(|t| median_where(rows, &[(c_n, n), (c_time, t)], c_dist)).fold(0.0, f64::max))
        .collect();
    let wg: Vec<f64> = ns.iter().map(|n| median_where(rows, &[(c_n, n), (c_time, &last)], c_wg)).collect();
    let (lo, hi) = (sup.iter().cloned().fold(f64::INFINITY, f64::min), sup.iter().cloned().fold(0.0, f64::max));
    let identity = rows.iter().map(|r| r[c_id].num()).fold(0.0, f64::max);
    let inconclusive: Vec<String> =
        ns.iter().zip(&sup).filter(|(_, s)| **s == 0.0).map(|(n, _)| n.to_string()).collect();
    vec![
        Verdict::new("identity rung exact", identity == 0.0, format!("delta_n(b1, b1) = {identity:e}")),
        Verdict::new(
            "delta_n ratio in [0.3, 0.7]",
            !ratios.is_empty() && ratios.iter().all(|r| (0.3..=0.7).contains(r)),
            format!("delta_n {} ratios {}", fmt_list(&dn), fmt_list(&ratios)),
        ),
        Verdict::new(
            "distance at delta_n bounded (max/min < 4)",
            lo > 0.0 && hi / lo < 4.0,
            format!(
                "sup_t median {} max/min {:.4}{}",
                fmt_list(&sup),
                hi / lo,
                if inconclusive.is_empty() {
                    String::new()
                } else {
                    format!(" inconclusive n: {}", inconclusive.join(" "))
                }
            ),
        ),
        Verdict::new("weak gap decreasing", strictly_decreasing(&wg), format!("median at T {}", fmt_list(&wg))),
    ]
}

/// Particle empirical law against the grid density along a joint
/// `(N, h)` refinement ladder; the particle step matches the grid step.
pub fn run_superposition_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let coeffs = cfg.coefficient_set()?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    if coeffs.dim() != 1 {
        return Err(Error::Unsupported("the superposition check is 1-d".into()));
    }
    let mut rows = Vec::new();
    for (rung, (&n, &h)) in cfg.particle_ladder.iter().zip(&cfg.spacing_ladder).enumerate() {
        let rho0 = DensityGrid::from_law(&law, cfg.half_width, h)?;
        let dt = grid_dt(&rho0, &coeffs, &nu, cfg.horizon, cfg.record_count, cfg.dt)?;
        let traj = fpe::solve(&rho0, &coeffs, &nu, &FpeConfig::equispaced(cfg.horizon, dt, cfg.record_count))?;
        // resampled to n equal atoms so both sides are n-point empirical measures
        let grids: Vec<DiscreteMeasure> =
            traj.snapshots.iter().map(|s| fpe::density_to_measure(s, Some(n))).collect::<Result<_>>()?;
        let escaped = traj.snapshots.last().map_or(0.0, |s| s.escaped);
        let per_seed: Vec<Result<Vec<(f64, f64)>>> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let sim = sde::simulate(&cfg.sim(n, dt, seed), &coeffs, &nu, &law)?;
                sim.snapshots
                    .iter()
                    .zip(&grids)
                    .map(|(s, g)| Ok((s.time, ot::kr_tilde(&s.to_measure()?, g, cfg.delta)?)))
                    .collect()
            })
            .collect();
        for (seed, res) in cfg.seeds.iter().zip(per_seed) {
            for (t, d) in res? {
                rows.push(vec![
                    Cell::from(rung),
                    n.into(),
                    h.into(),
                    dt.into(),
                    (*seed).into(),
                    t.into(),
                    d.into(),
                    escaped.into(),
                ]);
            }
        }
    }
    let columns = columns(&["rung", "particles", "spacing", "dt", "seed", "time", "distance", "escaped"]);
    let verdicts = superposition_verdicts(&rows, [0, 5, 6, 7]);
    Ok(ExperimentReport {
        kind: ExperimentKind::SuperpositionCheck,
        columns,
        rows,
        verdicts,
        provenance: cfg.provenance(&[])?,
        wall_time: start.elapsed(),
    })
}

/// Rung score: mean over recorded times of the seed-median distance.
fn superposition_verdicts(rows: &[Vec<Cell>], [c_rung, c_time, c_dist, c_esc]: [usize; 4]) -> Vec<Verdict> {
    let rungs = distinct(rows, c_rung);
    let times = distinct(rows, c_time);
    let score: Vec<f64> = rungs
        .iter()
        .map(|r| {
            times.iter().map(|t| median_where(rows, &[(c_rung, r), (c_time, t)], c_dist)).sum::<f64>()
                / times.len() as f64
        })
        .collect();
    let escaped = rows.iter().map(|r| r[c_esc].num()).fold(0.0, f64::max);
    let halved = score.len() >= 2 && score[score.len() - 1] < 0.5 * score[0];
    vec![
        Verdict::new("grid escape <= 1e-6", escaped <= 1e-6, format!("max escaped mass {escaped:e}")),
        Verdict::new(
            "distance strictly decreasing along ladder",
            strictly_decreasing(&score),
            format!("scores {}", fmt_list(&score)),
        ),
        Verdict::new("finest below half of coarsest", halved, format!("scores {}", fmt_list(&score))),
    ]
}

/// `sup_t E|X_t|` and `sup_t E log(1+|X_t|²)` at `dt` and `dt/2`.
pub fn run_moment_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let coeffs = cfg.coefficient_set()?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let mut rows = Vec::new();
    for dt in [cfg.dt, cfg.dt / 2.0] {
        let per_seed: Vec<Result<(f64, f64)>> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let mut sim = cfg.sim(cfg.particles, dt, seed);
                sim.record_times.insert(0, 0.0);
                let traj = sde::simulate(&sim, &coeffs, &nu, &law)?;
                let m = sde::moment_diagnostics(&traj.snapshots)?;
                Ok((m.sup_abs, m.sup_log))
            })
            .collect();
        for (seed, res) in cfg.seeds.iter().zip(per_seed) {
            let (a, l) = res?;
            rows.push(vec![Cell::from(dt), (*seed).into(), a.into(), l.into()]);
        }
    }
    let columns = columns(&["dt", "seed", "sup_abs", "sup_log"]);
    let verdicts = moment_verdicts(&rows, [0, 2, 3]);
    Ok(ExperimentReport {
        kind: ExperimentKind::MomentCheck,
        columns,
        rows,
        verdicts,
        provenance: cfg.provenance(&[])?,
        wall_time: start.elapsed(),
    })
}

fn moment_verdicts(rows: &[Vec<Cell>], [c_dt, c_abs, c_log]: [usize; 3]) -> Vec<Verdict> {
    let dts = distinct(rows, c_dt);
    let mut out = Vec::new();
    let finite = rows.iter().all(|r| r[c_abs].num().is_finite() && r[c_log].num().is_finite());
    out.push(Verdict::new("moments finite", finite, String::new()));
    for (name, c) in [("E|X|", c_abs), ("E log(1+|X|^2)", c_log)] {
        let med: Vec<f64> = dts.iter().map(|dt| median_where(rows, &[(c_dt, dt)], c)).collect();
        let change = if med.len() >= 2 { ((med[1] - med[0]) / med[0]).abs() } else { f64::NAN };
        out.push(Verdict::new(
            &format!("sup {name} stable under dt halving (< 10%)"),
            change < 0.1,
            format!("medians {} relative change {change:.4}", fmt_list(&med)),
        ));
        let finest = dts.last().cloned().unwrap_or(Cell::Num(f64::NAN));
        let v: Vec<f64> = rows.iter().filter(|r| r[c_dt] == finest).map(|r| r[c].num()).collect();
        let (lo, hi) = (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(0.0, f64::max));
        let spread = (hi - lo) / median(&v);
        out.push(Verdict::new(
            &format!("sup {name} spread across seeds (< 20%)"),
            spread < 0.2,
            format!("range [{lo:.4e}, {hi:.4e}] relative spread {spread:.4}"),
        ));
    }
    out
}

/// Random weighted pair: `n` atoms uniform in `[-2, 2]^d`, weights uniform
/// then normalized.
pub fn random_pair(seed: u64, instance: u64, n: usize, dim: usize) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let mut rng = rng::stream(seed, Domain::Instances, instance);
    let mut cloud = || {
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let masses: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        DiscreteMeasure::from_masses(dim, coords, masses)
    };
    let a = cloud()?;
    let b = cloud()?;
    Ok((a, b))
}

fn measure_text(m: &DiscreteMeasure) -> String {
    m.atoms().zip(m.weights()).map(|(x, w)| format!("{x:?}:{w}")).collect::<Vec<_>>().join(" ")
}

/// Both comparison inequalities between the log distances and the
/// δ-monotonicity of `D̃_δ` on random, equal and SDE-generated pairs.
pub fn run_relations_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let mut deltas = cfg.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let mut instances: Vec<(&str, DiscreteMeasure, DiscreteMeasure)> = Vec::new();
    for k in 0..cfg.pairs {
        let (a, b) = random_pair(seed, k as u64, cfg.pair_size, cfg.pair_dim)?;
        instances.push(("random", a, b));
    }
    let (a, _) = random_pair(seed, cfg.pairs as u64, cfg.pair_size, cfg.pair_dim)?;
    instances.push(("equal", a.clone(), a));

    let base = cfg.coefficient_set()?;
    let nu = cfg.jump_measure.resolve()?;
    let law = cfg.initial_law.resolve()?;
    let other = presets::perturbation(&cfg.drift_perturbation)?.apply(&base, 0.4)?;
    let pair = sde::coupled_simulate_with(
        &cfg.sim(cfg.pair_size.max(2), cfg.dt, seed),
        &base,
        &other,
        &nu,
        &InitialCoupling::Diagonal(law),
        cfg.noise_mode(),
    )?;
    let last = pair.first.snapshots.len() - 1;
    instances.push(("sde", pair.first.snapshots[last].to_measure()?, pair.second.snapshots[last].to_measure()?));

    let results: Vec<Result<Vec<ot::RelationsReport>>> = instances
        .par_iter()
        .map(|(_, a, b)| deltas.iter().map(|&d| ot::remark_relations_check(a, b, d)).collect())
        .collect();
    let mut rows = Vec::new();
    let mut offending = Vec::new();
    for (k, ((source, a, b), res)) in instances.iter().zip(results).enumerate() {
        for (&d, r) in deltas.iter().zip(res?) {
            if !r.holds {
                offending.push(format!("instance {k} delta {d}: mu [{}] nu [{}]", measure_text(a), measure_text(b)));
            }
            rows.push(vec![
                Cell::from(*source),
                k.into(),
                d.into(),
                r.tilde.into(),
                r.plain.into(),
                r.tilde_bound.into(),
                r.plain_bound.into(),
                Cell::from(r.holds as usize),
            ]);
        }
    }
    let columns = columns(&["source", "instance", "delta", "tilde", "plain", "tilde_bound", "plain_bound", "holds"]);
    let mut verdicts = relations_verdicts(&rows, [0, 1, 2, 3, 4, 7]);
    if !offending.is_empty() {
        verdicts[0].detail = format!("{}; {}", verdicts[0].detail, offending.join("; "));
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::RelationsCheck,
        columns,
        rows,
        verdicts,
        provenance: cfg.provenance(&[])?,
        wall_time: start.elapsed(),
    })
}

fn relations_verdicts(
    rows: &[Vec<Cell>],
    [c_src, c_inst, c_delta, c_tilde, c_plain, c_holds]: [usize; 6],
) -> Vec<Verdict> {
    let violations = rows.iter().filter(|r| r[c_holds].num() != 1.0).count();
    let mut non_monotone = 0;
    for inst in distinct(rows, c_inst) {
        let mut v: Vec<(f64, f64)> =
            rows.iter().filter(|r| r[c_inst] == inst).map(|r| (r[c_delta].num(), r[c_tilde].num())).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        if v.windows(2).any(|w| w[1].1 > w[0].1 + ot::RELATIONS_SLACK) {
            non_monotone += 1;
        }
    }
    let equal = Cell::from("equal");
    let equal_max = rows
        .iter()
        .filter(|r| r[c_src] == equal)
        .map(|r| r[c_tilde].num().abs().max(r[c_plain].num().abs()))
        .fold(0.0, f64::max);
    let sde = Cell::from("sde");
    let sde_ok = rows.iter().filter(|r| r[c_src] == sde).all(|r| r[c_holds].num() == 1.0);
    vec![
        Verdict::new("relations hold", violations == 0, format!("{violations} violations over {} checks", rows.len())),
        Verdict::new(
            "tilde nonincreasing in delta",
            non_monotone == 0,
            format!("{non_monotone} non-monotone instances"),
        ),
        Verdict::new("equal pair gives zero", equal_max == 0.0, format!("max distance {equal_max:e}")),
        Verdict::new("sde pair relations hold", sde_ok, String::new()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "moment-check", "particles": 64}"#).unwrap();
        assert_eq!(cfg.experiment, Some(ExperimentKind::MomentCheck));
        assert_eq!(cfg.seeds.len(), 10);
        assert!(ExperimentConfig::from_json(r#"{"coefficients": "nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"dt": -1}"#).is_err());
        assert_eq!(cfg.with_base_seed(7).seeds, (7..17).collect::<Vec<_>>());
    }

    #[test]
    fn cells_round_trip() {
        for c in [Cell::Int(-3), Cell::Num(0.1 + 0.2), Cell::Num(1e-300), Cell::Text("drift".into())] {
            assert_eq!(Cell::parse(&c.to_string()), c);
        }
        // integral floats print without a fraction and come back as integers
        assert_eq!(Cell::parse(&Cell::Num(2.0).to_string()).num(), 2.0);
    }

    #[test]
    fn medians_and_slopes() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.3)).collect();
        assert!((log_log_slope(&x, &y) - 1.3).abs() < 1e-12);
    }
}
