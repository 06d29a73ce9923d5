//! Mollification, space-time norms, jump-integrated norms `Γ`, discrete
//! maximal functions and the terms of the distance stability bound.
//!
//! Exponent naming: `pe`/`qe` are the spatial/temporal exponents of an
//! `L^qe(0, T; L^pe)` norm. The bound pairs a spatial exponent `p` on the
//! coefficients with the conjugate `q* = p/(p-1)` on the densities.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::field::{gradient, Combination, DriftField, JumpCoefficient, ScalarField, Tabulated};
use crate::grid::{GridFunction, GridSpec, TimeGridFunction};
use crate::jump::{JumpMeasure, JumpQuadrature};
use crate::measure::{neumaier_sum, EnsembleSnapshot};
use crate::quad;
use crate::rng::{self, Domain};

/// `χ(x) = c_d exp(-1/(1-|x|²))` on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub dim: usize,
    pub normalizer: f64,
}

fn bump_profile(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(dim: usize) -> Result<Self> {
        let (r, w) = quad::composite_uniform(0.0, 1.0, 64, 16);
        let mass = match dim {
            1 => 2.0 * r.iter().zip(&w).map(|(r, w)| w * bump_profile(r * r)).sum::<f64>(),
            2 => 2.0 * PI * r.iter().zip(&w).map(|(r, w)| w * r * bump_profile(r * r)).sum::<f64>(),
            _ => return Err(config_err("mollifier supports d = 1 or 2")),
        };
        Ok(Mollifier { dim, normalizer: 1.0 / mass })
    }

    pub fn profile(&self, x: &[f64]) -> f64 {
        self.normalizer * bump_profile(x.iter().map(|c| c * c).sum())
    }

    /// `χ_ε(x) = ε^{-d} χ(x/ε)`.
    pub fn scaled(&self, eps: f64, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| (c / eps).powi(2)).sum();
        self.normalizer * bump_profile(r2) / eps.powi(self.dim as i32)
    }
}

/// `f * χ_ε` on the grid of `f`, with `f` extended by zero outside the box.
///
/// The discrete stencil is renormalized to unit mass, so constants are
/// reproduced exactly away from the boundary.
pub fn mollify(f: &GridFunction, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(config_err(format!("mollifier scale must lie in (0, 1), got {eps}")));
    }
    let grid = &f.grid;
    let h = grid.spacing();
    if eps < 2.0 * h {
        return Err(Error::Resolution { eps, h });
    }
    let chi = Mollifier::new(grid.dim)?;
    let k = (eps / h).floor() as isize;
    let mut stencil: Vec<(isize, isize, f64)> = Vec::new();
    if grid.dim == 1 {
        for a in -k..=k {
            stencil.push((a, 0, chi.scaled(eps, &[a as f64 * h])));
        }
    } else {
        for a in -k..=k {
            for b in -k..=k {
                stencil.push((a, b, chi.scaled(eps, &[a as f64 * h, b as f64 * h])));
            }
        }
    }
    stencil.retain(|s| s.2 > 0.0);
    let total = neumaier_sum(stencil.iter().map(|s| s.2));
    stencil.iter_mut().for_each(|s| s.2 /= total);

    let n = grid.nodes as isize;
    let values = if grid.dim == 1 {
        (0..n)
            .map(|i| {
                stencil
                    .iter()
                    .filter_map(|&(a, _, w)| {
                        let j = i + a;
                        (0..n).contains(&j).then(|| w * f.values[j as usize])
                    })
                    .sum()
            })
            .collect()
    } else {
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                stencil
                    .iter()
                    .filter_map(|&(a, b, w)| {
                        let (p, q) = (i + a, j + b);
                        ((0..n).contains(&p) && (0..n).contains(&q)).then(|| w * f.values[(p * n + q) as usize])
                    })
                    .sum()
            })
            .collect()
    };
    GridFunction::new(grid.clone(), values)
}

/// Exponents of an `L^q(0, T; L^p)` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    /// Spatial exponent, `>= 1`; may be infinite.
    pub p: f64,
    /// Temporal exponent, `>= 1`; may be infinite.
    pub q: f64,
    pub horizon: f64,
}

impl NormSpec {
    pub fn new(p: f64, q: f64, horizon: f64) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) || p.is_nan() || q.is_nan() {
            return Err(config_err(format!("norm exponents must be >= 1, got p = {p}, q = {q}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(config_err("norm horizon must be positive"));
        }
        Ok(NormSpec { p, q, horizon })
    }

    /// Conjugate of the spatial exponent.
    pub fn conjugate(&self) -> f64 {
        conjugate(self.p)
    }
}

/// `p/(p-1)`, with `1 ↦ ∞` and `∞ ↦ 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn power_mean(values: impl Iterator<Item = (f64, f64)>, p: f64) -> f64 {
    if p.is_infinite() {
        values.map(|(_, v)| v.abs()).fold(0.0, f64::max)
    } else {
        neumaier_sum(values.map(|(w, v)| w * v.abs().powf(p))).powf(1.0 / p)
    }
}

/// Trapezoid `L^p` norm of a grid function.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    power_mean(f.values.iter().enumerate().map(|(i, v)| (f.grid.trapezoid_weight(i), *v)), p)
}

/// Trapezoid weights of a (possibly nonuniform) time grid.
fn time_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { 0.0 };
            let right = if k + 1 < n { times[k + 1] - times[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// `L^q(0, T; L^p)` norm: trapezoid in space, then trapezoid in time.
pub fn lq_lp_norm(f: &TimeGridFunction, spec: &NormSpec) -> Result<f64> {
    let (t0, t1) = (f.times[0], f.times[f.times.len() - 1]);
    if t0.abs() > 1e-12 || (t1 - spec.horizon).abs() > 1e-9 * spec.horizon {
        return Err(config_err(format!("time grid spans [{t0}, {t1}], expected [0, {}]", spec.horizon)));
    }
    if f.slices.iter().any(|s| s.values.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numerical("non-finite values in space-time norm".into()));
    }
    let spatial: Vec<f64> = f.slices.iter().map(|s| lp_norm(s, spec.p)).collect();
    let tw = time_weights(&f.times);
    Ok(power_mean(tw.into_iter().zip(spatial), spec.q))
}

/// Space-time sampling window `[0, T] × [-L, L]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub grid: GridSpec,
    pub horizon: f64,
    pub times: Vec<f64>,
}

impl Window {
    /// `slices` equispaced times including both ends.
    pub fn new(grid: GridSpec, horizon: f64, slices: usize) -> Result<Self> {
        if slices < 2 || !(horizon > 0.0) {
            return Err(config_err("window needs a positive horizon and at least two time slices"));
        }
        let times = (0..slices).map(|k| horizon * k as f64 / (slices - 1) as f64).collect();
        Ok(Window { grid, horizon, times })
    }

    /// Two slices; exact for time-independent integrands.
    pub fn autonomous(grid: GridSpec, horizon: f64) -> Result<Self> {
        Self::new(grid, horizon, 2)
    }

    pub fn sample(&self, f: impl Fn(f64, &[f64]) -> f64) -> TimeGridFunction {
        let slices = self.times.iter().map(|&t| GridFunction::sample(&self.grid, |x| f(t, x))).collect();
        TimeGridFunction { times: self.times.clone(), slices }
    }

    fn spec(&self, p: f64, q: f64) -> Result<NormSpec> {
        NormSpec::new(p, q, self.horizon)
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `‖ |b| ‖_{L^q(0,T;L^p)}`.
pub fn drift_norm(b: &DriftField, p: f64, q: f64, window: &Window) -> Result<f64> {
    let d = b.dim();
    let f = window.sample(|t, x| {
        let mut out = vec![0.0; d];
        b.eval(t, x, &mut out);
        euclid(&out)
    });
    lq_lp_norm(&f, &window.spec(p, q)?)
}

/// `‖ |∇b| ‖_{L^q(0,T;L^p)}` with the Frobenius norm of the Jacobian.
pub fn drift_gradient_norm(b: &DriftField, p: f64, q: f64, window: &Window) -> Result<f64> {
    let d = b.dim();
    let f = window.sample(|t, x| {
        let mut jac = vec![0.0; d * d];
        b.jacobian(t, x, &mut jac);
        euclid(&jac)
    });
    lq_lp_norm(&f, &window.spec(p, q)?)
}

/// `b¹ - b²`.
pub fn drift_difference(b1: &DriftField, b2: &DriftField) -> DriftField {
    b1.perturbed(-1.0, b2)
}

/// `g¹ - g²`; stays multiplicative when both are.
pub fn jump_difference(g1: &JumpCoefficient, g2: &JumpCoefficient) -> JumpCoefficient {
    match (g1.amplitude(), g2.amplitude()) {
        (Some(a), Some(b)) => {
            JumpCoefficient::multiplicative(Arc::new(Combination { terms: vec![(1.0, a.clone()), (-1.0, b.clone())] }))
        }
        _ => {
            let (g1, g2) = (g1.clone(), g2.clone());
            let dim = g1.dim();
            JumpCoefficient::general(dim, move |t, x, z, out| {
                let mut tmp = vec![0.0; out.len()];
                g1.eval(t, x, z, out);
                g2.eval(t, x, z, &mut tmp);
                out.iter_mut().zip(&tmp).for_each(|(o, v)| *o -= v);
            })
        }
    }
}

/// `Γ_j^{qe,pe}(g) = ∫ ‖∇^j g(·,·,z)‖^qe_{L^qe(0,T;L^pe)} ν(dz)`, `j ∈ {0, 1}`.
///
/// Non-finite results are returned as `+∞`, never as an error.
pub fn gamma_quantity(g: &JumpCoefficient, nu: &JumpMeasure, j: u8, qe: f64, pe: f64, window: &Window) -> Result<f64> {
    gamma_with(g, &nu.quadrature(), j, qe, pe, window)
}

/// [`gamma_quantity`] against an explicit z-quadrature.
pub fn gamma_with(g: &JumpCoefficient, zq: &JumpQuadrature, j: u8, qe: f64, pe: f64, window: &Window) -> Result<f64> {
    if j > 1 {
        return Err(config_err("only j = 0 and j = 1 are supported"));
    }
    if qe.is_infinite() {
        return Err(config_err("the z-integrated exponent must be finite"));
    }
    let spec = window.spec(pe, qe)?;
    let d = g.dim();
    let value = match g.amplitude() {
        // |a(t,x) z| = |a(t,x)| |z|, and |∇_x (a z)| = |∇a| |z|
        Some(a) => {
            let f = window.sample(|t, x| {
                if j == 0 {
                    a.value(t, x).abs()
                } else {
                    let mut grad = vec![0.0; d];
                    gradient(a.as_ref(), t, x, &mut grad);
                    euclid(&grad)
                }
            });
            let norm = lq_lp_norm(&f, &spec)?;
            norm.powf(qe) * zq.integrate(|z| euclid(z).powf(qe))
        }
        None => {
            let mut acc = Vec::with_capacity(zq.len());
            for k in 0..zq.len() {
                let z = zq.node(k);
                let f = window.sample(|t, x| {
                    if j == 0 {
                        let mut out = vec![0.0; d];
                        g.eval(t, x, z, &mut out);
                        euclid(&out)
                    } else {
                        let mut jac = vec![0.0; d * d];
                        g.jacobian(t, x, z, &mut jac);
                        euclid(&jac)
                    }
                });
                acc.push(zq.weights[k] * lq_lp_norm(&f, &spec)?.powf(qe));
            }
            neumaier_sum(acc)
        }
    };
    Ok(if value.is_finite() { value } else { f64::INFINITY })
}

/// Dyadic radii `h 2^k <= r_max`.
fn dyadic_steps(h: f64, r_max: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 1usize;
    while k as f64 * h <= r_max * (1.0 + 1e-12) {
        out.push(k);
        k *= 2;
    }
    out
}

/// Discrete Hardy-Littlewood maximal function of `|f|` over dyadic radii
/// up to `r_max`, zero-extended outside the box; the node value itself is
/// included as the `r → 0` limit.
pub fn maximal_function(f: &GridFunction, r_max: f64) -> Result<GridFunction> {
    let grid = &f.grid;
    if !(r_max > 0.0 && r_max <= grid.half_width * (1.0 + 1e-12)) {
        return Err(config_err(format!("maximal radius must lie in (0, L], got {r_max}")));
    }
    let steps = dyadic_steps(grid.spacing(), r_max);
    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    let n = grid.nodes;
    let values = if grid.dim == 1 {
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + abs[i];
        }
        (0..n)
            .map(|i| {
                steps.iter().fold(abs[i], |m, &k| {
                    let lo = i.saturating_sub(k);
                    let hi = (i + k).min(n - 1);
                    m.max((prefix[hi + 1] - prefix[lo]) / (2 * k + 1) as f64)
                })
            })
            .collect()
    } else {
        let offsets: Vec<Vec<(isize, isize)>> = steps
            .iter()
            .map(|&k| {
                let k = k as isize;
                (-k..=k).flat_map(|a| (-k..=k).map(move |b| (a, b))).filter(|(a, b)| a * a + b * b <= k * k).collect()
            })
            .collect();
        let ni = n as isize;
        (0..n * n)
            .map(|idx| {
                let (i, j) = ((idx / n) as isize, (idx % n) as isize);
                offsets.iter().fold(abs[idx], |m, ball| {
                    let s: f64 = ball
                        .iter()
                        .filter_map(|&(a, b)| {
                            let (p, q) = (i + a, j + b);
                            ((0..ni).contains(&p) && (0..ni).contains(&q)).then(|| abs[(p * ni + q) as usize])
                        })
                        .sum();
                    m.max(s / ball.len() as f64)
                })
            })
            .collect()
    };
    GridFunction::new(grid.clone(), values)
}

/// Empirical constants of the pointwise and `L^p` maximal inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    /// `max |φ(x)-φ(y)| / (|x-y| (M|∇φ|(x) + M|∇φ|(y)))` over sampled pairs.
    pub c_hat: f64,
    pub pairs_used: usize,
    /// `(p, ‖Mφ‖_p / ‖φ‖_p)` for `p ∈ {2, 4}`.
    pub maximal_ratios: Vec<(f64, f64)>,
}

pub fn lemma1_check(phi: &dyn ScalarField, grid: &GridSpec, n_pairs: usize, seed: u64) -> Result<Lemma1Report> {
    let d = grid.dim;
    let values = GridFunction::sample(grid, |x| phi.value(0.0, x));
    let grad = GridFunction::sample(grid, |x| {
        let mut g = vec![0.0; d];
        gradient(phi, 0.0, x, &mut g);
        euclid(&g)
    });
    let m_grad = maximal_function(&grad, grid.half_width)?;
    let mut rng = rng::stream(seed, Domain::Pairs, 0);
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let mut c_hat: f64 = 0.0;
    let mut used = 0;
    for _ in 0..n_pairs {
        let i = rng.random_range(0..grid.len());
        let j = rng.random_range(0..grid.len());
        if i == j {
            continue;
        }
        used += 1;
        grid.node(i, &mut x);
        grid.node(j, &mut y);
        let num = (values.values[i] - values.values[j]).abs();
        let dist = euclid(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        let den = dist * (m_grad.values[i] + m_grad.values[j]);
        let ratio = if num == 0.0 {
            0.0
        } else if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        };
        c_hat = c_hat.max(ratio);
    }
    let m_phi = maximal_function(&values, grid.half_width)?;
    let maximal_ratios = [2.0, 4.0].iter().map(|&p| (p, lp_norm(&m_phi, p) / lp_norm(&values, p))).collect();
    Ok(Lemma1Report { c_hat, pairs_used: used, maximal_ratios })
}

/// The three components of `δ_n`: drift `L¹(L^p)` gap, and the square and
/// fourth roots of the jump gaps `Γ_0^{2,2p}`, `Γ_0^{4,4p}`.
pub fn delta_components(
    b1: &DriftField,
    bn: &DriftField,
    g1: &JumpCoefficient,
    gn: &JumpCoefficient,
    nu: &JumpMeasure,
    p: f64,
    window: &Window,
) -> Result<[f64; 3]> {
    let drift = drift_norm(&drift_difference(b1, bn), p, 1.0, window)?;
    let dg = jump_difference(g1, gn);
    let zq = nu.quadrature();
    let g2 = gamma_with(&dg, &zq, 0, 2.0, 2.0 * p, window)?;
    let g4 = gamma_with(&dg, &zq, 0, 4.0, 4.0 * p, window)?;
    let out = [drift, g2.sqrt(), g4.powf(0.25)];
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergent(format!("delta_n components {out:?}")));
    }
    Ok(out)
}

/// `δ_n = ‖b¹-bⁿ‖_{L¹(L^p)} + Γ_0^{2,2p}(g¹-gⁿ)^{1/2} + Γ_0^{4,4p}(g¹-gⁿ)^{1/4}`.
pub fn delta_n(
    b1: &DriftField,
    bn: &DriftField,
    g1: &JumpCoefficient,
    gn: &JumpCoefficient,
    nu: &JumpMeasure,
    p: f64,
    window: &Window,
) -> Result<f64> {
    Ok(delta_components(b1, bn, g1, gn, nu, p, window)?.iter().sum())
}

/// Mollify a time-independent drift on `grid`; the result interpolates the
/// discrete convolution.
pub fn mollify_drift(b: &DriftField, grid: &GridSpec, eps: f64) -> Result<DriftField> {
    if !b.is_autonomous() {
        return Err(Error::Unsupported("mollification of time-dependent drifts".into()));
    }
    let components = b
        .components
        .iter()
        .map(|c| {
            let f = GridFunction::sample(grid, |x| c.value(0.0, x));
            Ok(Arc::new(Tabulated(mollify(&f, eps)?)) as Arc<dyn ScalarField>)
        })
        .collect::<Result<_>>()?;
    Ok(DriftField { components })
}

/// Mollify a multiplicative jump coefficient: `(a z) * χ_ε = (a * χ_ε) z`.
pub fn mollify_jump(g: &JumpCoefficient, grid: &GridSpec, eps: f64) -> Result<JumpCoefficient> {
    let a = g.amplitude().ok_or_else(|| Error::Unsupported("mollification of general jump coefficients".into()))?;
    if !a.is_autonomous() {
        return Err(Error::Unsupported("mollification of time-dependent jump coefficients".into()));
    }
    let f = GridFunction::sample(grid, |x| a.value(0.0, x));
    Ok(JumpCoefficient::multiplicative(Arc::new(Tabulated(mollify(&f, eps)?))))
}

/// Inputs of [`theorem_terms`].
#[derive(Debug, Clone)]
pub struct BoundInputs<'a> {
    pub b1: &'a DriftField,
    pub b2: &'a DriftField,
    pub g1: &'a JumpCoefficient,
    pub g2: &'a JumpCoefficient,
    pub nu: &'a JumpMeasure,
    /// Spatial exponent `p > 1` of the coefficient norms.
    pub p: f64,
    pub window: &'a Window,
    /// `‖ρ¹‖_{L^∞(L^{q*})}`, `‖ρ²‖_{L^∞(L^{q*})}`.
    pub rho_norms: [f64; 2],
    pub delta: f64,
    pub initial_distance: f64,
}

/// Raw terms of the stability bound; the unknown constants are not applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub delta: f64,
    pub p: f64,
    pub term_b: f64,
    pub term_g2: f64,
    pub term_g4: f64,
    pub term_grad_b: f64,
    pub term_grad_g2: f64,
    pub term_grad_g4: f64,
    pub rho_norm_1: f64,
    pub rho_norm_2: f64,
    pub initial_distance: f64,
}

impl BoundReport {
    pub const COLUMNS: [&'static str; 11] = [
        "delta",
        "p",
        "term_b",
        "term_g2",
        "term_g4",
        "term_grad_b",
        "term_grad_g2",
        "term_grad_g4",
        "rho_norm_1",
        "rho_norm_2",
        "initial_distance",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.delta,
            self.p,
            self.term_b,
            self.term_g2,
            self.term_g4,
            self.term_grad_b,
            self.term_grad_g2,
            self.term_grad_g4,
            self.rho_norm_1,
            self.rho_norm_2,
            self.initial_distance,
        ]
    }

    /// Header plus one row.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::COLUMNS).map_err(crate::measure::csv_err)?;
        w.write_record(self.values().iter().map(|v| v.to_string())).map_err(crate::measure::csv_err)?;
        w.flush()?;
        Ok(())
    }
}

pub fn theorem_terms(inp: &BoundInputs) -> Result<BoundReport> {
    let (p, w, delta) = (inp.p, inp.window, inp.delta);
    if !(p > 1.0 && p.is_finite()) {
        return Err(config_err(format!("bound exponent must satisfy 1 < p < ∞, got {p}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(config_err(format!("delta must be positive, got {delta}")));
    }
    let zq = inp.nu.quadrature();
    let gamma = |g: &JumpCoefficient, j: u8, k: f64| gamma_with(g, &zq, j, k, k * p, w);
    let own = [gamma(inp.g1, 0, 2.0)?, gamma(inp.g1, 0, 4.0)?, gamma(inp.g1, 1, 2.0)?, gamma(inp.g1, 1, 4.0)?];
    if own.iter().any(|v| v.is_infinite()) {
        return Err(Error::Hypothesis(format!("jump coefficient has infinite Γ quantities {own:?}")));
    }
    let dg = jump_difference(inp.g1, inp.g2);
    let (dg2, dg4) = (gamma(&dg, 0, 2.0)?, gamma(&dg, 0, 4.0)?);
    if dg2.is_infinite() || dg4.is_infinite() {
        return Err(Error::Hypothesis("jump difference has infinite Γ quantities".into()));
    }
    let db = drift_norm(&drift_difference(inp.b1, inp.b2), p, 1.0, w)?;
    let grad_b = drift_gradient_norm(inp.b1, p, 1.0, w)?;
    let d2 = delta * delta;
    let d4 = d2 * d2;
    Ok(BoundReport {
        delta,
        p,
        term_b: db / delta,
        term_g2: dg2 / d2,
        term_g4: dg4 / d4,
        term_grad_b: grad_b,
        term_grad_g2: own[2],
        term_grad_g4: own[3],
        rho_norm_1: inp.rho_norms[0],
        rho_norm_2: inp.rho_norms[1],
        initial_distance: inp.initial_distance,
    })
}

/// Gaussian kernel-density estimate of a 1-d ensemble on `grid`, with
/// bandwidth `N^{-1/5} · std`.
pub fn kde_density(snap: &EnsembleSnapshot, grid: &GridSpec) -> Result<GridFunction> {
    if snap.dim != 1 || grid.dim != 1 {
        return Err(Error::Unsupported("kernel-density estimates are 1-d only".into()));
    }
    if snap.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = snap.len() as f64;
    let mut xs = snap.positions.clone();
    xs.sort_by(f64::total_cmp);
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let bw = n.powf(-0.2) * var.sqrt();
    if !(bw > 0.0) {
        return Err(Error::Numerical("degenerate ensemble: zero spread".into()));
    }
    let norm = 1.0 / (n * bw * (2.0 * PI).sqrt());
    let reach = 8.0 * bw;
    Ok(GridFunction::sample(grid, |x| {
        let lo = xs.partition_point(|v| *v < x[0] - reach);
        let hi = xs.partition_point(|v| *v <= x[0] + reach);
        norm * xs[lo..hi].iter().map(|v| (-0.5 * ((x[0] - v) / bw).powi(2)).exp()).sum::<f64>()
    }))
}

/// `max_t ‖ρ_t‖_{L^q}` over snapshots, densities estimated by [`kde_density`].
pub fn kde_sup_norm(snaps: &[EnsembleSnapshot], grid: &GridSpec, q: f64) -> Result<f64> {
    snaps.iter().map(|s| kde_density(s, grid).map(|f| lp_norm(&f, q))).try_fold(0.0, |m, v| Ok(f64::max(m, v?)))
}
