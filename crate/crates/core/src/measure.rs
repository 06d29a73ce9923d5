//! Probability measures on R^d as weighted point clouds.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::rng::{self, Domain};

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;

/// A state in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite coordinate".into()));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(vec![x])
    }
}

/// Weighted point cloud. Coordinates are stored row-major, `dim` per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validating constructor: equal lengths, finite coordinates,
    /// nonnegative weights summing to one within [`MASS_TOL`].
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(config_err("dimension must be positive"));
        }
        if weights.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch { expected: dim * weights.len(), got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numerical("non-finite support coordinate".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Numerical("weights must be finite and nonnegative".into()));
        }
        let total = neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Numerical(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { dim, coords, weights })
    }

    /// Normalizes nonnegative masses before validating.
    pub fn from_masses(dim: usize, coords: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let total = neumaier_sum(masses.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Numerical("masses must have positive finite total".into()));
        }
        let weights = masses.into_iter().map(|m| m / total).collect();
        Self::new(dim, coords, weights)
    }

    pub fn dirac(at: &[f64]) -> Result<Self> {
        Self::new(at.len(), at.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        neumaier_sum(self.atoms().zip(&self.weights).map(|(x, w)| w * f(x)))
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.integrate(|x| x[k])).collect()
    }

    /// CSV with header `x_1,...,x_d,weight`.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x_{k}")).collect();
        header.push("weight".into());
        w.write_record(&header).map_err(csv_err)?;
        for (x, wt) in self.atoms().zip(&self.weights) {
            let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            row.push(wt.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`DiscreteMeasure::to_csv`]. A file
    /// without a `weight` column is read as an empirical measure.
    pub fn from_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        let weight_col = header.iter().position(|h| h.trim() == "weight");
        let dim = header.len() - usize::from(weight_col.is_some());
        if dim == 0 {
            return Err(Error::Parse("no coordinate columns".into()));
        }
        let mut coords = Vec::new();
        let mut masses = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|e| Error::Parse(format!("{field:?}: {e}")))?;
                if Some(k) == weight_col {
                    masses.push(v);
                } else {
                    coords.push(v);
                }
            }
            if weight_col.is_none() {
                masses.push(1.0);
            }
        }
        if masses.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if weight_col.is_some() {
            let m = DiscreteMeasure::new(dim, coords.clone(), masses.clone());
            if m.is_ok() {
                return m;
            }
        }
        Self::from_masses(dim, coords, masses)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Particle positions at one recorded time, each with weight 1/N.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSnapshot {
    pub time: f64,
    pub dim: usize,
    /// Row-major positions, `dim` per particle.
    pub positions: Vec<f64>,
}

impl EnsembleSnapshot {
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        empirical_from_flat(self.dim, self.positions.clone())
    }
}

/// Uniform weights over the given points; order and duplicates are kept.
pub fn empirical_measure(points: &[Point]) -> Result<DiscreteMeasure> {
    let first = points.first().ok_or(Error::EmptyEnsemble)?;
    let dim = first.dim();
    let mut coords = Vec::with_capacity(dim * points.len());
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        coords.extend_from_slice(&p.0);
    }
    empirical_from_flat(dim, coords)
}

pub fn empirical_from_flat(dim: usize, coords: Vec<f64>) -> Result<DiscreteMeasure> {
    if coords.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = coords.len() / dim;
    let w = 1.0 / n as f64;
    let mut weights = vec![w; n];
    // absorb the rounding of n * (1/n) into the last atom
    let total = neumaier_sum(weights.iter().copied());
    weights[n - 1] += 1.0 - total;
    DiscreteMeasure::new(dim, coords, weights)
}

/// `sum_i w_i log(1 + |x_i|)`, finite for every measure in the crate.
pub fn log_moment(mu: &DiscreteMeasure) -> f64 {
    mu.integrate(|x| (1.0 + x.iter().map(|c| c * c).sum::<f64>().sqrt()).ln())
}

/// Initial distribution of the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialLaw {
    Dirac {
        at: Vec<f64>,
    },
    /// Isotropic normal law.
    Gaussian {
        mean: Vec<f64>,
        std: f64,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub law: InitialLaw,
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Dirac { at } => at.len(),
            InitialLaw::Gaussian { mean, .. } => mean.len(),
            InitialLaw::UniformBox { lo, .. } => lo.len(),
            InitialLaw::Mixture { components } => components.first().map_or(0, |c| c.law.dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            InitialLaw::Dirac { at } => {
                if at.is_empty() || !finite(at) {
                    return Err(config_err("dirac location must be a finite nonempty vector"));
                }
            }
            InitialLaw::Gaussian { mean, std } => {
                if mean.is_empty() || !finite(mean) {
                    return Err(config_err("gaussian mean must be a finite nonempty vector"));
                }
                if !(std.is_finite() && *std >= 0.0) {
                    return Err(config_err(format!("gaussian std must be nonnegative, got {std}")));
                }
            }
            InitialLaw::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() || !finite(lo) || !finite(hi) {
                    return Err(config_err("uniform box bounds must be finite vectors of equal length"));
                }
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Err(config_err("uniform box needs lo <= hi"));
                }
            }
            InitialLaw::Mixture { components } => {
                if components.is_empty() {
                    return Err(config_err("mixture needs at least one component"));
                }
                let d = components[0].law.dim();
                let mut total = 0.0;
                for c in components {
                    if !(c.weight.is_finite() && c.weight >= 0.0) {
                        return Err(config_err("mixture weights must be nonnegative"));
                    }
                    if c.law.dim() != d {
                        return Err(config_err("mixture components differ in dimension"));
                    }
                    c.law.validate()?;
                    total += c.weight;
                }
                if total <= 0.0 {
                    return Err(config_err("mixture weights sum to zero"));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            InitialLaw::Dirac { at } => out.extend_from_slice(at),
            InitialLaw::Gaussian { mean, std } => {
                for m in mean {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(m + std * z);
                }
            }
            InitialLaw::UniformBox { lo, hi } => {
                for (a, b) in lo.iter().zip(hi) {
                    let u: f64 = rng.random();
                    out.push(a + (b - a) * u);
                }
            }
            InitialLaw::Mixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                let mut u: f64 = rng.random::<f64>() * total;
                let mut pick = components.len() - 1;
                for (k, c) in components.iter().enumerate() {
                    if u < c.weight {
                        pick = k;
                        break;
                    }
                    u -= c.weight;
                }
                components[pick].law.draw(rng, out);
            }
        }
    }

    /// Draw `n` i.i.d. points as a flat row-major buffer. Point `i` uses
    /// its own stream, so the result depends only on `(seed, i)`.
    pub fn sample_flat(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(config_err("sample size must be at least 1"));
        }
        let mut out = Vec::with_capacity(n * self.dim());
        for i in 0..n {
            let mut r = rng::stream(seed, Domain::InitialLaw, i as u64);
            self.draw(&mut r, &mut out);
        }
        Ok(out)
    }
}

/// Draw `n` points from `law`.
pub fn sample(law: &InitialLaw, n: usize, seed: u64) -> Result<Vec<Point>> {
    let d = law.dim();
    let flat = law.sample_flat(n, seed)?;
    Ok(flat.chunks_exact(d).map(|c| Point(c.to_vec())).collect())
}

/// Version tag of the weak-gap test-function dictionary.
pub const WEAK_GAP_DICTIONARY_VERSION: u32 = 1;

/// Bounded 1-Lipschitz features: `tanh`, `sin(k s)/k`, `cos(k s)/k` for
/// k = 1..4, applied to each coordinate and, in 2-d, to the two diagonal
/// projections.
fn feature_values(x: &[f64], out: &mut Vec<f64>) {
    let push_scalar = |s: f64, out: &mut Vec<f64>| {
        out.push(s.tanh());
        for k in 1..=4 {
            let k = k as f64;
            out.push((k * s).sin() / k);
            out.push((k * s).cos() / k);
        }
    };
    for &c in x {
        push_scalar(c, out);
    }
    if x.len() == 2 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        push_scalar(r * (x[0] + x[1]), out);
        push_scalar(r * (x[0] - x[1]), out);
    }
}

fn feature_means(mu: &DiscreteMeasure) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    let mut buf = Vec::new();
    for (x, w) in mu.atoms().zip(mu.weights()) {
        buf.clear();
        feature_values(x, &mut buf);
        if acc.is_empty() {
            acc = vec![0.0; buf.len()];
        }
        for (a, f) in acc.iter_mut().zip(&buf) {
            *a += w * f;
        }
    }
    acc
}

/// Largest discrepancy `|∫f dμ - ∫f dν|` over the fixed feature dictionary.
pub fn weak_gap(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    if mu == nu {
        return Ok(0.0);
    }
    let a = feature_means(mu);
    let b = feature_means(nu);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
