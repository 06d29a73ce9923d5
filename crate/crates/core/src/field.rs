//! Drift and jump coefficients `b(t, x)` and `g(t, x, z)`.
//!
//! Coefficients are assembled from [`ScalarField`] profiles. Every profile
//! is stateless and `Send + Sync`, so simulation workers share them freely.

use std::fmt;
use std::sync::Arc;

use crate::error::{config_err, Result};
use crate::grid::GridFunction;

/// Step of the central-difference fallback for gradients.
pub const FD_STEP: f64 = 1e-5;

/// Real function of `(t, x)`.
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, x: &[f64]) -> f64;
    /// Analytic gradient in `x`, if the profile has one.
    fn gradient(&self, _t: f64, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Gradient of `f`, analytic when available, central differences otherwise.
pub fn gradient(f: &dyn ScalarField, t: f64, x: &[f64], out: &mut [f64]) {
    if f.gradient(t, x, out) {
        return;
    }
    let mut y = x.to_vec();
    for k in 0..x.len() {
        y[k] = x[k] + FD_STEP;
        let up = f.value(t, &y);
        y[k] = x[k] - FD_STEP;
        let down = f.value(t, &y);
        y[k] = x[k];
        out[k] = (up - down) / (2.0 * FD_STEP);
    }
}

#[derive(Debug, Clone)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl ScalarField for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _t: f64, _x: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().for_each(|o| *o = 0.0);
        true
    }
}

/// `offset + coeffs · x`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl ScalarField for Linear {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        self.offset + self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
    fn gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> bool {
        out.copy_from_slice(&self.coeffs);
        true
    }
}

/// Smooth compactly supported bump `height · exp(1 - 1/(1 - s²))`,
/// `s = |x - center| / radius`; equals `height` at the center.
#[derive(Debug, Clone)]
pub struct SmoothBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl SmoothBump {
    pub fn new(center: Vec<f64>, radius: f64, height: f64) -> Self {
        SmoothBump { center, radius, height }
    }

    fn offset(&self, x: &[f64]) -> (f64, f64) {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        (r2, r2 / (self.radius * self.radius))
    }
}

impl ScalarField for SmoothBump {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        let (_, s2) = self.offset(x);
        if s2 >= 1.0 {
            0.0
        } else {
            self.height * (1.0 - 1.0 / (1.0 - s2)).exp()
        }
    }
    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let (_, s2) = self.offset(x);
        if s2 >= 1.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return true;
        }
        let e = self.height * (1.0 - 1.0 / (1.0 - s2)).exp();
        // d/dx_k exp(1 - 1/(1-s²)) = -e · 2 (x_k - c_k) / (R² (1-s²)²)
        let factor = -2.0 * e / (self.radius * self.radius * (1.0 - s2) * (1.0 - s2));
        for (k, o) in out.iter_mut().enumerate() {
            *o = factor * (x[k] - self.center[k]);
        }
        true
    }
}

/// Continuous piecewise-linear function of one variable through `knots`,
/// zero outside the first and last knot.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(config_err("piecewise-linear knots must be strictly increasing, at least two"));
        }
        let (first, last) = (knots[0], knots[knots.len() - 1]);
        if first.1 != 0.0 || last.1 != 0.0 {
            return Err(config_err("piecewise-linear profile must vanish at its end knots"));
        }
        Ok(PiecewiseLinear { knots })
    }

    /// Symmetric tent of the given half-width.
    pub fn tent(center: f64, half_width: f64, height: f64) -> Self {
        PiecewiseLinear { knots: vec![(center - half_width, 0.0), (center, height), (center + half_width, 0.0)] }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn segment(&self, x: f64) -> Option<usize> {
        let k = &self.knots;
        if x < k[0].0 || x >= k[k.len() - 1].0 {
            return None;
        }
        Some(k.partition_point(|p| p.0 <= x) - 1)
    }
}

impl ScalarField for PiecewiseLinear {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        match self.segment(x[0]) {
            Some(i) => {
                let (x0, y0) = self.knots[i];
                let (x1, y1) = self.knots[i + 1];
                y0 + (y1 - y0) * (x[0] - x0) / (x1 - x0)
            }
            None => 0.0,
        }
    }
    fn gradient(&self, _t: f64, x: &[f64], out: &mut [f64]) -> bool {
        out[0] = match self.segment(x[0]) {
            Some(i) => {
                let (x0, y0) = self.knots[i];
                let (x1, y1) = self.knots[i + 1];
                (y1 - y0) / (x1 - x0)
            }
            None => 0.0,
        };
        true
    }
}

/// The coordinate function `x ↦ x_k`.
#[derive(Debug, Clone)]
pub struct Coordinate {
    pub dim: usize,
    pub k: usize,
}

impl ScalarField for Coordinate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        x[self.k]
    }
    fn gradient(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> bool {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = if i == self.k { 1.0 } else { 0.0 });
        true
    }
}

/// `scale · a · b`.
#[derive(Debug, Clone)]
pub struct Product {
    pub scale: f64,
    pub a: Arc<dyn ScalarField>,
    pub b: Arc<dyn ScalarField>,
}

impl ScalarField for Product {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.scale * self.a.value(t, x) * self.b.value(t, x)
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let mut ga = vec![0.0; x.len()];
        let mut gb = vec![0.0; x.len()];
        gradient(self.a.as_ref(), t, x, &mut ga);
        gradient(self.b.as_ref(), t, x, &mut gb);
        let (va, vb) = (self.a.value(t, x), self.b.value(t, x));
        for k in 0..x.len() {
            out[k] = self.scale * (ga[k] * vb + va * gb[k]);
        }
        true
    }
    fn is_autonomous(&self) -> bool {
        self.a.is_autonomous() && self.b.is_autonomous()
    }
}

/// `Σ c_i f_i`.
#[derive(Debug, Clone)]
pub struct Combination {
    pub terms: Vec<(f64, Arc<dyn ScalarField>)>,
}

impl ScalarField for Combination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(t, x)).sum()
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let mut g = vec![0.0; x.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, f) in &self.terms {
            gradient(f.as_ref(), t, x, &mut g);
            for k in 0..x.len() {
                out[k] += c * g[k];
            }
        }
        true
    }
    fn is_autonomous(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.is_autonomous())
    }
}

/// Tabulated profile, interpolated between nodes and zero outside the box.
/// Gradients fall back to central differences of the interpolant.
#[derive(Debug, Clone)]
pub struct Tabulated(pub GridFunction);

impl ScalarField for Tabulated {
    fn dim(&self) -> usize {
        self.0.grid.dim
    }
    fn value(&self, _t: f64, x: &[f64]) -> f64 {
        self.0.interpolate(x)
    }
}

/// Vector field `b(t, x)` given componentwise.
#[derive(Debug, Clone)]
pub struct DriftField {
    pub components: Vec<Arc<dyn ScalarField>>,
}

impl DriftField {
    pub fn zero(dim: usize) -> Self {
        DriftField { components: (0..dim).map(|_| Arc::new(Constant { dim, value: 0.0 }) as _).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.value(t, x);
        }
    }

    /// Row-major Jacobian `∂b_i/∂x_j`.
    pub fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, c) in self.components.iter().enumerate() {
            gradient(c.as_ref(), t, x, &mut out[i * d..(i + 1) * d]);
        }
    }

    pub fn is_autonomous(&self) -> bool {
        self.components.iter().all(|c| c.is_autonomous())
    }

    /// `self + scale · other`, componentwise.
    pub fn perturbed(&self, scale: f64, other: &DriftField) -> DriftField {
        DriftField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| Arc::new(Combination { terms: vec![(1.0, a.clone()), (scale, b.clone())] }) as _)
                .collect(),
        }
    }
}

type JumpFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// Jump coefficient `g(t, x, z)`.
#[derive(Clone)]
pub enum JumpCoefficient {
    /// `g(t, x, z) = a(t, x) z`.
    Multiplicative { dim: usize, amplitude: Arc<dyn ScalarField> },
    /// Arbitrary `g`, evaluated by closure; gradients by central differences.
    General { dim: usize, f: Arc<JumpFn> },
}

impl fmt::Debug for JumpCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpCoefficient::Multiplicative { dim, amplitude } => {
                f.debug_struct("Multiplicative").field("dim", dim).field("amplitude", amplitude).finish()
            }
            JumpCoefficient::General { dim, .. } => f.debug_struct("General").field("dim", dim).finish_non_exhaustive(),
        }
    }
}

impl JumpCoefficient {
    pub fn zero(dim: usize) -> Self {
        Self::multiplicative(Arc::new(Constant { dim, value: 0.0 }))
    }

    /// `g(t, x, z) = z`.
    pub fn additive(dim: usize) -> Self {
        Self::multiplicative(Arc::new(Constant { dim, value: 1.0 }))
    }

    pub fn multiplicative(amplitude: Arc<dyn ScalarField>) -> Self {
        JumpCoefficient::Multiplicative { dim: amplitude.dim(), amplitude }
    }

    pub fn general(dim: usize, f: impl Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        JumpCoefficient::General { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            JumpCoefficient::Multiplicative { dim, .. } | JumpCoefficient::General { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, t: f64, x: &[f64], z: &[f64], out: &mut [f64]) {
        match self {
            JumpCoefficient::Multiplicative { amplitude, .. } => {
                let a = amplitude.value(t, x);
                for (o, zk) in out.iter_mut().zip(z) {
                    *o = a * zk;
                }
            }
            JumpCoefficient::General { f, .. } => f(t, x, z, out),
        }
    }

    /// Row-major Jacobian `∂g_i/∂x_j` at fixed `z`.
    pub fn jacobian(&self, t: f64, x: &[f64], z: &[f64], out: &mut [f64]) {
        let d = x.len();
        match self {
            JumpCoefficient::Multiplicative { amplitude, .. } => {
                let mut g = vec![0.0; d];
                gradient(amplitude.as_ref(), t, x, &mut g);
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = z[i] * g[j];
                    }
                }
            }
            JumpCoefficient::General { f, .. } => {
                let mut y = x.to_vec();
                let mut up = vec![0.0; d];
                let mut down = vec![0.0; d];
                for j in 0..d {
                    y[j] = x[j] + FD_STEP;
                    f(t, &y, z, &mut up);
                    y[j] = x[j] - FD_STEP;
                    f(t, &y, z, &mut down);
                    y[j] = x[j];
                    for i in 0..d {
                        out[i * d + j] = (up[i] - down[i]) / (2.0 * FD_STEP);
                    }
                }
            }
        }
    }

    pub fn amplitude(&self) -> Option<&Arc<dyn ScalarField>> {
        match self {
            JumpCoefficient::Multiplicative { amplitude, .. } => Some(amplitude),
            JumpCoefficient::General { .. } => None,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        match self {
            JumpCoefficient::Multiplicative { amplitude, .. } => amplitude.is_autonomous(),
            // closures carry no autonomy information; norms sample time
            JumpCoefficient::General { .. } => false,
        }
    }
}

/// A named pair `(b, g)`.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub name: String,
    pub drift: DriftField,
    pub jump: JumpCoefficient,
}

impl CoefficientField {
    pub fn new(name: impl Into<String>, drift: DriftField, jump: JumpCoefficient) -> Result<Self> {
        if drift.dim() != jump.dim() {
            return Err(crate::error::Error::DimensionMismatch { expected: drift.dim(), got: jump.dim() });
        }
        Ok(CoefficientField { name: name.into(), drift, jump })
    }

    pub fn frozen(dim: usize) -> Self {
        CoefficientField { name: "frozen".into(), drift: DriftField::zero(dim), jump: JumpCoefficient::zero(dim) }
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &dyn ScalarField, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|k| {
                y[k] = x[k] + 1e-6;
                let up = f.value(0.0, &y);
                y[k] = x[k] - 1e-6;
                let down = f.value(0.0, &y);
                y[k] = x[k];
                (up - down) / 2e-6
            })
            .collect()
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let bump: Arc<dyn ScalarField> = Arc::new(SmoothBump::new(vec![0.2, -0.1], 1.5, 0.8));
        let prod = Product { scale: -1.0, a: Arc::new(Coordinate { dim: 2, k: 0 }), b: bump.clone() };
        for x in [[0.0, 0.0], [0.7, -0.4], [-0.9, 0.5]] {
            for f in [bump.as_ref(), &prod as &dyn ScalarField] {
                let mut g = [0.0; 2];
                assert!(f.gradient(0.0, &x, &mut g));
                let want = fd(f, &x);
                for k in 0..2 {
                    assert!((g[k] - want[k]).abs() < 1e-6, "{g:?} vs {want:?}");
                }
            }
        }
    }

    #[test]
    fn bump_is_compactly_supported() {
        let b = SmoothBump::new(vec![0.0], 2.0, 3.0);
        assert_eq!(b.value(0.0, &[0.0]), 3.0);
        assert_eq!(b.value(0.0, &[2.0]), 0.0);
        assert_eq!(b.value(0.0, &[-5.0]), 0.0);
    }

    #[test]
    fn piecewise_linear_profile() {
        let p = PiecewiseLinear::new(vec![(-1.0, 0.0), (0.0, 2.0), (2.0, 0.0)]).unwrap();
        assert_eq!(p.value(0.0, &[-0.5]), 1.0);
        assert_eq!(p.value(0.0, &[1.0]), 1.0);
        assert_eq!(p.value(0.0, &[3.0]), 0.0);
        let mut g = [0.0];
        p.gradient(0.0, &[1.0], &mut g);
        assert_eq!(g[0], -1.0);
        assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn jump_jacobians() {
        let amp: Arc<dyn ScalarField> = Arc::new(Linear { coeffs: vec![2.0, -1.0], offset: 0.5 });
        let g = JumpCoefficient::multiplicative(amp);
        let mut j = [0.0; 4];
        g.jacobian(0.0, &[0.1, 0.2], &[3.0, 5.0], &mut j);
        assert_eq!(j, [6.0, -3.0, 10.0, -5.0]);
        let gen = JumpCoefficient::general(2, |_, x, z, o| {
            o[0] = x[0] * z[0];
            o[1] = x[1] * x[1] * z[1];
        });
        gen.jacobian(0.0, &[0.1, 0.2], &[3.0, 5.0], &mut j);
        let want = [3.0, 0.0, 0.0, 2.0];
        for k in 0..4 {
            assert!((j[k] - want[k]).abs() < 1e-8);
        }
    }
}
