//! Optimal transport under logarithmic costs.
//!
//! Two costs are supported: `log(1 + |x-y|²/δ²)` (the squared-log cost,
//! convenient for Itô calculus) and `log(1 + |x-y|/δ)`. Neither is a
//! metric cost, so the solvers assume nothing beyond nonnegativity.
//!
//! | solver | use |
//! |--------|-----|
//! | [`exact_ot`] | network simplex, or an auction for large 1-d equal-weight pairs, with a duality certificate |
//! | [`sinkhorn_ot`] | log-domain entropic approximation |
//! | [`kr_tilde`], [`kr_plain`] | pick a tier by size and return the value |

pub mod assignment;
pub mod simplex;
pub mod sinkhorn;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::measure::{neumaier_sum, DiscreteMeasure};

/// 1-d problems with more cells than this start from a banded arc set.
const BAND_MIN_ARCS: usize = 1 << 14;
const BAND_WIDTH: usize = 16;
/// Starting arcs of the 1-d auction: this many neighbours on each side of the
/// monotone coupling plus every `AUCTION_STRIDE`-th column.
const AUCTION_BAND: usize = 64;
const AUCTION_STRIDE: usize = 32;

/// Largest support (per side) solved exactly in `d >= 2` by the automatic tier.
pub const EXACT_TIER_MAX: usize = 512;
/// Feasibility tolerance on marginals.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Default entropic regularization relative to the median cost entry.
pub const DEFAULT_REG_FACTOR: f64 = 0.01;
/// Iteration budget and L1 marginal tolerance of the entropic tier.
pub const SINKHORN_MAX_ITER: usize = 20_000;
pub const SINKHORN_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostKind {
    /// `log(1 + |x-y|²/δ²)`.
    SquaredLog,
    /// `log(1 + |x-y|/δ)`.
    LinearLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub kind: CostKind,
    pub delta: f64,
}

impl CostSpec {
    pub fn new(kind: CostKind, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(config_err(format!("delta must be positive, got {delta}")));
        }
        Ok(CostSpec { kind, delta })
    }

    pub fn squared_log(delta: f64) -> Result<Self> {
        Self::new(CostKind::SquaredLog, delta)
    }

    pub fn linear_log(delta: f64) -> Result<Self> {
        Self::new(CostKind::LinearLog, delta)
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        match self.kind {
            CostKind::SquaredLog => (d2 / (self.delta * self.delta)).ln_1p(),
            CostKind::LinearLog => (d2.sqrt() / self.delta).ln_1p(),
        }
    }
}

/// Dense `n × m` cost matrix, row-major.
pub fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, spec: &CostSpec) -> Result<Vec<f64>> {
    check_dims(mu, nu)?;
    let mut c = Vec::with_capacity(mu.len() * nu.len());
    for x in mu.atoms() {
        for y in nu.atoms() {
            c.push(spec.eval(x, y));
        }
    }
    Ok(c)
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    Ok(())
}

fn check_masses(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    let (l, r) = (neumaier_sum(mu.weights().iter().copied()), neumaier_sum(nu.weights().iter().copied()));
    if (l - r).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals { left: l, right: r });
    }
    Ok(())
}

/// Sparse coupling with its marginal residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// Nonzero entries `(i, j, π_ij)`.
    pub entries: Vec<(usize, usize, f64)>,
    /// Max absolute row-sum violation.
    pub row_residual: f64,
    /// Max absolute column-sum violation.
    pub col_residual: f64,
}

impl TransportPlan {
    fn from_entries(mu: &DiscreteMeasure, nu: &DiscreteMeasure, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut rs = vec![0.0; mu.len()];
        let mut cs = vec![0.0; nu.len()];
        for &(i, j, p) in &entries {
            rs[i] += p;
            cs[j] += p;
        }
        let res = |s: &[f64], w: &[f64]| s.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        TransportPlan {
            rows: mu.len(),
            cols: nu.len(),
            row_residual: res(&rs, mu.weights()),
            col_residual: res(&cs, nu.weights()),
            entries,
        }
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for &(i, j, p) in &self.entries {
            out[i * self.cols + j] += p;
        }
        out
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.row_residual <= tol && self.col_residual <= tol && self.entries.iter().all(|e| e.2 >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Exact,
    Entropic,
}

impl Solver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Entropic => "entropic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistanceReport {
    pub value: f64,
    pub plan: Option<TransportPlan>,
    pub solver: Solver,
    pub iterations: usize,
    /// `primal - dual` for the exact solver.
    pub duality_gap: Option<f64>,
    /// Max marginal violation of the returned plan.
    pub marginal_error: f64,
    pub converged: bool,
    pub wall_time: Duration,
}

fn positive_support(mu: &DiscreteMeasure) -> Vec<usize> {
    (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).collect()
}

fn sorted_order(mu: &DiscreteMeasure, keep: &[usize]) -> Vec<usize> {
    let mut idx = keep.to_vec();
    if mu.dim() == 1 {
        idx.sort_by(|&a, &b| mu.atom(a)[0].total_cmp(&mu.atom(b)[0]).then(a.cmp(&b)));
    }
    idx
}

const PRICE_BLOCK: usize = 64;

/// Pricing for sorted 1-d supports. The cost grows with `|x - y|`, so along
/// a row it is unimodal in the column index; scanning outward from the
/// nearest column, a block is skipped when its cheapest cell cannot beat the
/// largest column potential in it, and the scan stops once no later block can.
struct SortedLine<'a, C: Fn(usize, usize) -> f64> {
    x: Vec<f64>,
    y: Vec<f64>,
    cost: &'a C,
}

impl<C: Fn(usize, usize) -> f64> simplex::Pricing for SortedLine<'_, C> {
    fn scan(&self, u: &[f64], v: &[f64], tol: f64, visit: &mut dyn FnMut(usize, usize, f64)) {
        let n = self.y.len();
        let blocks = n.div_ceil(PRICE_BLOCK);
        let block_max: Vec<f64> =
            v.chunks(PRICE_BLOCK).map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let mut prefix = block_max.clone();
        for k in 1..blocks {
            prefix[k] = prefix[k].max(prefix[k - 1]);
        }
        let mut suffix = block_max.clone();
        for k in (0..blocks.saturating_sub(1)).rev() {
            suffix[k] = suffix[k].max(suffix[k + 1]);
        }
        let c = self.cost;
        let mut p = 0;
        for (i, (&xi, &ui)) in self.x.iter().zip(u).enumerate() {
            while p < n && self.y[p] < xi {
                p += 1;
            }
            let mut j = p;
            while j < n {
                let k = j / PRICE_BLOCK;
                let end = ((k + 1) * PRICE_BLOCK).min(n);
                let cj = c(i, j);
                if cj - ui - suffix[k] >= -tol {
                    break;
                }
                if cj - ui - block_max[k] < -tol {
                    for jj in j..end {
                        visit(i, jj, c(i, jj) - ui - v[jj]);
                    }
                }
                j = end;
            }
            let mut j = p;
            while j > 0 {
                let k = (j - 1) / PRICE_BLOCK;
                let start = k * PRICE_BLOCK;
                let cj = c(i, j - 1);
                if cj - ui - prefix[k] >= -tol {
                    break;
                }
                if cj - ui - block_max[k] < -tol {
                    for jj in start..j {
                        visit(i, jj, c(i, jj) - ui - v[jj]);
                    }
                }
                j = start;
            }
        }
    }
}

/// Equal sorted supports with equal weights: the identity plan, value 0.
fn identity_report(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    rows: &[usize],
    cols: &[usize],
    w: f64,
    start: Instant,
) -> DistanceReport {
    let entries = rows.iter().zip(cols).map(|(&i, &j)| (i, j, w)).collect();
    let plan = TransportPlan::from_entries(mu, nu, entries);
    DistanceReport {
        value: 0.0,
        marginal_error: plan.row_residual.max(plan.col_residual),
        plan: Some(plan),
        solver: Solver::Exact,
        iterations: 0,
        duality_gap: Some(0.0),
        converged: true,
        wall_time: start.elapsed(),
    }
}

/// Exact optimal transport by network simplex.
///
/// In 1-d the supports are sorted first, so the simplex starts from the
/// monotone coupling. Equal-weight 1-d problems above the exact-tier size
/// are assignment problems and go to the auction solver instead. The
/// report's `duality_gap` certifies optimality either way.
pub fn exact_ot(mu: &DiscreteMeasure, nu: &DiscreteMeasure, spec: &CostSpec) -> Result<DistanceReport> {
    check_dims(mu, nu)?;
    check_masses(mu, nu)?;
    let start = Instant::now();
    let rows = sorted_order(mu, &positive_support(mu));
    let cols = sorted_order(nu, &positive_support(nu));
    let a: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| nu.weights()[j]).collect();
    let cost = |i: usize, j: usize| spec.eval(mu.atom(rows[i]), nu.atom(cols[j]));
    let tol = 1e-12 * (1.0 + cost_upper_bound(mu, nu, spec));
    let max_pivots = 50 * (a.len() + b.len()) * 64;
    // sorted 1-d supports: start from a band around the monotone coupling
    let candidates = if mu.dim() == 1 && a.len() * b.len() > BAND_MIN_ARCS {
        simplex::Candidates::Band(BAND_WIDTH)
    } else {
        simplex::Candidates::All
    };
    let sol = if mu.dim() == 1 {
        let line = SortedLine {
            x: rows.iter().map(|&i| mu.atom(i)[0]).collect(),
            y: cols.iter().map(|&j| nu.atom(j)[0]).collect(),
            cost: &cost,
        };
        let equal_weights = a.len() == b.len() && a.iter().chain(&b).all(|&w| w == a[0]);
        if equal_weights && line.x == line.y {
            return Ok(identity_report(mu, nu, &rows, &cols, a[0], start));
        }
        if equal_weights && a.len() > EXACT_TIER_MAX {
            let n = a.len();
            let ranges: Vec<_> =
                (0..n).map(|i| (i.saturating_sub(AUCTION_BAND), (i + AUCTION_BAND + 1).min(n))).collect();
            assignment::solve(a[0], &cost, &line, tol, &ranges, AUCTION_STRIDE)
        } else {
            simplex::solve_with(&a, &b, &cost, &line, tol, max_pivots, candidates)
        }
    } else {
        simplex::solve_with(&a, &b, &cost, &simplex::Dense { cost: &cost }, tol, max_pivots, candidates)
    };
    if !sol.optimal {
        return Err(Error::Numerical(format!("exact solver did not certify optimality ({} pivots)", sol.pivots)));
    }
    let entries: Vec<_> = sol.cells.iter().filter(|c| c.2 > 0.0).map(|&(i, j, p)| (rows[i], cols[j], p)).collect();
    let plan = TransportPlan::from_entries(mu, nu, entries);
    Ok(DistanceReport {
        value: sol.primal.max(0.0),
        marginal_error: plan.row_residual.max(plan.col_residual),
        plan: Some(plan),
        solver: Solver::Exact,
        iterations: sol.pivots,
        duality_gap: Some(sol.primal - sol.dual + sol.dual_infeasibility),
        converged: true,
        wall_time: start.elapsed(),
    })
}

/// Cost between opposite corners of the joint bounding box.
fn cost_upper_bound(mu: &DiscreteMeasure, nu: &DiscreteMeasure, spec: &CostSpec) -> f64 {
    let d = mu.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in mu.atoms().chain(nu.atoms()) {
        for k in 0..d {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    spec.eval(&lo, &hi)
}

/// Median entry of the cost matrix, used to set the default regularization.
pub fn median_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, spec: &CostSpec) -> Result<f64> {
    let mut c = cost_matrix(mu, nu, spec)?;
    let mid = c.len() / 2;
    let (_, m, _) = c.select_nth_unstable_by(mid, f64::total_cmp);
    Ok(*m)
}

/// Entropic optimal transport. The reported value is the transport cost of
/// the regularized plan, which is never below the exact value.
pub fn sinkhorn_ot(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: &CostSpec,
    reg: f64,
    max_iter: usize,
    tol: f64,
) -> Result<DistanceReport> {
    check_dims(mu, nu)?;
    check_masses(mu, nu)?;
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(config_err(format!("regularization must be positive, got {reg}")));
    }
    let start = Instant::now();
    let rows = positive_support(mu);
    let cols = positive_support(nu);
    let a: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| nu.weights()[j]).collect();
    let mut cost = Vec::with_capacity(a.len() * b.len());
    for &i in &rows {
        for &j in &cols {
            cost.push(spec.eval(mu.atom(i), nu.atom(j)));
        }
    }
    let sol = sinkhorn::solve(&a, &b, &cost, reg, max_iter, tol);
    let n = cols.len();
    let entries: Vec<_> =
        sol.plan.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(k, &p)| (rows[k / n], cols[k % n], p)).collect();
    let plan = TransportPlan::from_entries(mu, nu, entries);
    if !sol.transport_cost.is_finite() {
        return Err(Error::Numerical("entropic transport cost is not finite".into()));
    }
    Ok(DistanceReport {
        value: sol.transport_cost,
        plan: Some(plan),
        solver: Solver::Entropic,
        iterations: sol.iterations,
        duality_gap: None,
        marginal_error: sol.marginal_error,
        converged: sol.converged,
        wall_time: start.elapsed(),
    })
}

/// Solver tier used by [`distance`] when none is forced.
pub fn auto_tier(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Solver {
    if mu.dim() == 1 || (mu.len() <= EXACT_TIER_MAX && nu.len() <= EXACT_TIER_MAX) {
        Solver::Exact
    } else {
        Solver::Entropic
    }
}

/// Distance with an explicit or automatic tier. Entropic runs use
/// `reg` or the default `0.01 × median cost`.
pub fn distance(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: &CostSpec,
    tier: Option<Solver>,
    reg: Option<f64>,
) -> Result<DistanceReport> {
    match tier.unwrap_or_else(|| auto_tier(mu, nu)) {
        Solver::Exact => exact_ot(mu, nu, spec),
        Solver::Entropic => {
            let reg = match reg {
                Some(r) => r,
                None => DEFAULT_REG_FACTOR * median_cost(mu, nu, spec)?.max(f64::MIN_POSITIVE),
            };
            sinkhorn_ot(mu, nu, spec, reg, SINKHORN_MAX_ITER, SINKHORN_TOL)
        }
    }
}

/// Squared-log distance `D̃_δ(μ, ν)`.
pub fn kr_tilde(mu: &DiscreteMeasure, nu: &DiscreteMeasure, delta: f64) -> Result<f64> {
    Ok(distance(mu, nu, &CostSpec::squared_log(delta)?, None, None)?.value)
}

/// Linear-log distance `D_δ(μ, ν)`.
pub fn kr_plain(mu: &DiscreteMeasure, nu: &DiscreteMeasure, delta: f64) -> Result<f64> {
    Ok(distance(mu, nu, &CostSpec::linear_log(delta)?, None, None)?.value)
}

/// Both log distances and the two comparison inequalities between them.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationsReport {
    pub tilde: f64,
    pub plain: f64,
    /// `2 D_δ`, an upper bound for `D̃_δ`.
    pub tilde_bound: f64,
    /// `sqrt(D̃_δ / log 2) + D̃_δ`, an upper bound for `D_δ`.
    pub plain_bound: f64,
    pub holds: bool,
}

pub const RELATIONS_SLACK: f64 = 1e-9;

pub fn remark_relations_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, delta: f64) -> Result<RelationsReport> {
    let tilde = exact_ot(mu, nu, &CostSpec::squared_log(delta)?)?.value;
    let plain = exact_ot(mu, nu, &CostSpec::linear_log(delta)?)?.value;
    let tilde_bound = 2.0 * plain;
    let plain_bound = (tilde / std::f64::consts::LN_2).sqrt() + tilde;
    let holds = tilde <= tilde_bound + RELATIONS_SLACK && plain <= plain_bound + RELATIONS_SLACK;
    Ok(RelationsReport { tilde, plain, tilde_bound, plain_bound, holds })
}

/// `D̃_δ(μ, ν) / |log δ|` along a strictly decreasing ladder in (0, 1).
/// Vanishing ratios are consistent with `μ = ν`; this is a finite-δ
/// diagnostic, not a decision procedure.
pub fn uniqueness_indicator(mu: &DiscreteMeasure, nu: &DiscreteMeasure, deltas: &[f64]) -> Result<Vec<f64>> {
    if deltas.is_empty() {
        return Err(config_err("need at least one delta"));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(config_err("deltas must lie in (0, 1)"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config_err("deltas must be strictly decreasing"));
    }
    deltas.iter().map(|&d| Ok(exact_ot(mu, nu, &CostSpec::squared_log(d)?)?.value / d.ln().abs())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::empirical_from_flat;
    use std::f64::consts::LN_2;

    fn pts(v: &[f64]) -> DiscreteMeasure {
        empirical_from_flat(1, v.to_vec()).unwrap()
    }

    #[test]
    fn cost_closed_forms() {
        let s = CostSpec::squared_log(1.0).unwrap();
        assert_eq!(s.eval(&[0.5], &[0.5]), 0.0);
        assert!((s.eval(&[0.0], &[3.0]) - 10f64.ln()).abs() < 1e-15);
        let s2 = CostSpec::squared_log(0.3).unwrap();
        assert!((s2.eval(&[0.0, 0.0], &[0.3, 0.0]) - LN_2).abs() < 1e-15);
        assert!(CostSpec::squared_log(0.0).is_err());
        assert!(CostSpec::linear_log(-1.0).is_err());
        let x = pts(&[0.0, 1.0, 2.5]);
        let c = cost_matrix(&x, &x, &s).unwrap();
        for i in 0..3 {
            assert_eq!(c[i * 3 + i], 0.0);
            for j in 0..3 {
                assert_eq!(c[i * 3 + j], c[j * 3 + i]);
            }
        }
    }

    #[test]
    fn exact_examples() {
        let s = CostSpec::squared_log(1.0).unwrap();
        let r = exact_ot(&pts(&[0.3]), &pts(&[2.3]), &s).unwrap();
        assert!((r.value - 5f64.ln()).abs() < 1e-15);

        let mu = empirical_from_flat(2, vec![0.0, 0.0, 1.0, 2.0, -1.0, 0.5]).unwrap();
        let r = exact_ot(&mu, &mu, &s).unwrap();
        assert_eq!(r.value, 0.0);
        let plan = r.plan.unwrap();
        assert!(plan.entries.iter().all(|&(i, j, _)| i == j));

        // matching 0→1, 2→3 costs log 2; the crossed matching costs ½(log 10 + log 2)
        let crossed = 0.5 * (10f64.ln() + 2f64.ln());
        assert!((crossed - 1.4979).abs() < 1e-4);
        let r = exact_ot(&pts(&[0.0, 2.0]), &pts(&[1.0, 3.0]), &s).unwrap();
        assert!((r.value - LN_2).abs() < 1e-15);
        assert!(r.duality_gap.unwrap().abs() <= 1e-9);
    }

    #[test]
    fn infeasible_marginals_are_rejected() {
        let mu = pts(&[0.0, 1.0]);
        let bad = DiscreteMeasure::new(1, vec![0.0, 1.0], vec![0.5, 0.5 - 1e-13]).unwrap();
        assert!(exact_ot(&mu, &bad, &CostSpec::squared_log(1.0).unwrap()).is_ok());
        let two = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            exact_ot(&mu, &two, &CostSpec::squared_log(1.0).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kr_closed_forms() {
        let (d0, d1) = (pts(&[0.0]), pts(&[1.0]));
        assert!((kr_tilde(&d0, &d1, 1.0).unwrap() - LN_2).abs() < 1e-15);
        assert!((kr_plain(&d0, &d1, 1.0).unwrap() - LN_2).abs() < 1e-15);
        let mu = pts(&[0.1, -0.4, 2.0]);
        assert_eq!(kr_tilde(&mu, &mu, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn relations_closed_forms() {
        let r = remark_relations_check(&pts(&[0.0]), &pts(&[1.0]), 1.0).unwrap();
        assert!(r.holds);
        assert!((r.tilde - LN_2).abs() < 1e-15 && (r.plain - LN_2).abs() < 1e-15);
        assert!((r.plain_bound - (1.0 + LN_2)).abs() < 1e-15);
        let mu = pts(&[0.2, 0.7]);
        let r = remark_relations_check(&mu, &mu, 0.1).unwrap();
        assert_eq!((r.tilde, r.plain), (0.0, 0.0));
        assert!(r.holds);
    }

    #[test]
    fn uniqueness_indicator_examples() {
        let (d0, d1) = (pts(&[0.0]), pts(&[1.0]));
        let deltas = [0.1, 0.01, 0.001];
        let got = uniqueness_indicator(&d0, &d1, &deltas).unwrap();
        for (g, d) in got.iter().zip(deltas) {
            let oracle = (1.0 + 1.0 / (d * d)).ln() / d.ln().abs();
            assert!((g - oracle).abs() < 1e-14);
        }
        assert!((got[0] - 2.004_32).abs() < 1e-5 && (got[2] - 2.0).abs() < 1e-6);
        let mu = pts(&[0.3, 0.9]);
        assert_eq!(uniqueness_indicator(&mu, &mu, &deltas).unwrap(), vec![0.0; 3]);
        assert!(uniqueness_indicator(&d0, &d1, &[1.0, 0.5]).is_err());
        assert!(uniqueness_indicator(&d0, &d1, &[0.01, 0.1]).is_err());
    }

    #[test]
    fn sinkhorn_bias_on_identical_measures() {
        let mu = pts(&[0.0, 0.7, 1.9, 3.2]);
        let reg = 0.01;
        let r = sinkhorn_ot(&mu, &mu, &CostSpec::squared_log(1.0).unwrap(), reg, 5000, 1e-10).unwrap();
        assert!(r.converged);
        assert!(r.value <= reg * (mu.len() as f64).ln() + 1e-6, "{}", r.value);
        assert!(sinkhorn_ot(&mu, &mu, &CostSpec::squared_log(1.0).unwrap(), 0.0, 10, 1e-9).is_err());
    }
}
