//! Truncated power-law jump measures `ν(dz) = |z|^{-d-α} dz` on the annulus
//! `ε0 <= |z| < R`.
//!
//! The finite total mass makes the driving Poisson random measure a plain
//! compound Poisson process, so jumps are simulated exactly.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::quad;

/// Which directions the measure charges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignMode {
    /// All directions.
    Symmetric,
    /// Only the half-space `z_1 > 0`.
    OneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasure {
    pub dim: usize,
    /// Stability index in (0, 2).
    pub alpha: f64,
    pub inner_cutoff: f64,
    pub outer_cutoff: f64,
    pub sign_mode: SignMode,
}

/// Radial panels and per-panel Gauss order of the annulus quadrature.
pub const RADIAL_PANELS: usize = 8;
pub const RADIAL_ORDER: usize = 8;
/// Angular nodes over the full circle (2-d only).
pub const ANGULAR_NODES: usize = 32;

impl JumpMeasure {
    pub fn new(dim: usize, alpha: f64, inner_cutoff: f64, outer_cutoff: f64, sign_mode: SignMode) -> Result<Self> {
        let m = JumpMeasure { dim, alpha, inner_cutoff, outer_cutoff, sign_mode };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(config_err(format!("jump measure dimension must be 1 or 2, got {}", self.dim)));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(config_err(format!("stability index must lie in (0, 2), got {}", self.alpha)));
        }
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff.is_finite()) {
            return Err(config_err("inner cutoff must be positive"));
        }
        if !(self.inner_cutoff < self.outer_cutoff && self.outer_cutoff.is_finite()) {
            return Err(config_err(format!(
                "inner cutoff {} must be below outer cutoff {}",
                self.inner_cutoff, self.outer_cutoff
            )));
        }
        Ok(())
    }

    /// Surface measure of the charged directions.
    fn angular_mass(&self) -> f64 {
        let full = if self.dim == 1 { 2.0 } else { 2.0 * PI };
        match self.sign_mode {
            SignMode::Symmetric => full,
            SignMode::OneSided => full / 2.0,
        }
    }

    /// `∫_a^b r^{-1-α} dr`.
    fn radial_integral(&self, a: f64, b: f64) -> f64 {
        (a.powf(-self.alpha) - b.powf(-self.alpha)) / self.alpha
    }

    /// Radial moment `∫ |z|^q ν(dz)` in closed form.
    pub fn radial_moment(&self, q: f64) -> f64 {
        let (a, b, s) = (self.inner_cutoff, self.outer_cutoff, q - self.alpha);
        let radial = if s.abs() < 1e-14 { (b / a).ln() } else { (b.powf(s) - a.powf(s)) / s };
        self.angular_mass() * radial
    }

    /// Radial CDF of `|z|` under `ν / λ`.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        if r <= self.inner_cutoff {
            return 0.0;
        }
        if r >= self.outer_cutoff {
            return 1.0;
        }
        self.radial_integral(self.inner_cutoff, r) / self.radial_integral(self.inner_cutoff, self.outer_cutoff)
    }

    fn radial_quantile(&self, u: f64) -> f64 {
        let a = self.inner_cutoff.powf(-self.alpha);
        let b = self.outer_cutoff.powf(-self.alpha);
        let r = (a - u * (a - b)).powf(-1.0 / self.alpha);
        // rounding can land on R itself; the support is half-open
        if r >= self.outer_cutoff {
            self.outer_cutoff * (1.0 - f64::EPSILON)
        } else {
            r.max(self.inner_cutoff)
        }
    }

    /// Annulus quadrature: a discrete measure whose weights integrate
    /// functions of `z` against `ν`.
    pub fn quadrature(&self) -> JumpQuadrature {
        self.quadrature_with(RADIAL_PANELS, RADIAL_ORDER)
    }

    /// [`quadrature`](Self::quadrature) with explicit radial panels and Gauss order.
    pub fn quadrature_with(&self, panels: usize, order: usize) -> JumpQuadrature {
        let (rs, ws) = quad::composite_geometric(self.inner_cutoff, self.outer_cutoff, panels, order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match self.dim {
            1 => {
                for (r, w) in rs.iter().zip(&ws) {
                    let wr = w * r.powf(-1.0 - self.alpha);
                    match self.sign_mode {
                        SignMode::Symmetric => {
                            nodes.extend_from_slice(&[*r, -*r]);
                            weights.extend_from_slice(&[wr, wr]);
                        }
                        SignMode::OneSided => {
                            nodes.push(*r);
                            weights.push(wr);
                        }
                    }
                }
            }
            _ => {
                let (angles, dtheta): (Vec<f64>, f64) = match self.sign_mode {
                    SignMode::Symmetric => {
                        // antipodal angles sit next to each other so pairs stay adjacent
                        let half = ANGULAR_NODES / 2;
                        let step = 2.0 * PI / ANGULAR_NODES as f64;
                        let a = (0..half).flat_map(|k| [k as f64 * step, k as f64 * step + PI]).collect();
                        (a, step)
                    }
                    SignMode::OneSided => {
                        let m = ANGULAR_NODES / 2;
                        let step = PI / m as f64;
                        ((0..m).map(|k| -PI / 2.0 + (k as f64 + 0.5) * step).collect(), step)
                    }
                };
                for (r, w) in rs.iter().zip(&ws) {
                    // polar Jacobian r cancels one power of the density
                    let wr = w * r.powf(-1.0 - self.alpha) * dtheta;
                    for (k, th) in angles.iter().enumerate() {
                        if self.sign_mode == SignMode::Symmetric && k % 2 == 1 {
                            let prev = &nodes[nodes.len() - 2..];
                            let (px, py) = (prev[0], prev[1]);
                            nodes.extend_from_slice(&[-px, -py]);
                        } else {
                            nodes.extend_from_slice(&[r * th.cos(), r * th.sin()]);
                        }
                        weights.push(wr);
                    }
                }
            }
        }
        JumpQuadrature { dim: self.dim, nodes, weights, paired: self.sign_mode == SignMode::Symmetric }
    }
}

/// Total mass `λ = ν({ε0 <= |z| < R})` in closed form.
pub fn total_mass(nu: &JumpMeasure) -> Result<f64> {
    nu.validate()?;
    Ok(nu.angular_mass() * nu.radial_integral(nu.inner_cutoff, nu.outer_cutoff))
}

/// One draw from `ν / λ` written into `out` (length `dim`).
///
/// Always consumes exactly two uniforms so that coupled systems stay in
/// lock-step on the same stream.
pub fn sample_jump_into<R: Rng + ?Sized>(nu: &JumpMeasure, rng: &mut R, out: &mut [f64]) {
    let u_r: f64 = rng.random();
    let u_d: f64 = rng.random();
    let r = nu.radial_quantile(u_r);
    match (nu.dim, nu.sign_mode) {
        (1, SignMode::Symmetric) => out[0] = if u_d < 0.5 { r } else { -r },
        (1, SignMode::OneSided) => out[0] = r,
        (_, mode) => {
            let th = match mode {
                SignMode::Symmetric => 2.0 * PI * u_d,
                SignMode::OneSided => PI * (u_d - 0.5),
            };
            out[0] = r * th.cos();
            out[1] = r * th.sin();
        }
    }
}

pub fn sample_jump<R: Rng + ?Sized>(nu: &JumpMeasure, rng: &mut R) -> crate::measure::Point {
    let mut z = vec![0.0; nu.dim];
    sample_jump_into(nu, rng, &mut z);
    crate::measure::Point(z)
}

/// Discrete stand-in for a jump measure: `∫ f dν ≈ Σ w_k f(z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpQuadrature {
    pub dim: usize,
    /// Row-major nodes.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Nodes come in adjacent antipodal pairs with equal weights.
    pub paired: bool,
}

impl JumpQuadrature {
    /// A single atom `weight · δ_z`.
    pub fn atom(z: &[f64], weight: f64) -> Self {
        JumpQuadrature { dim: z.len(), nodes: z.to_vec(), weights: vec![weight], paired: false }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn total_weight(&self) -> f64 {
        crate::measure::neumaier_sum(self.weights.iter().copied())
    }

    /// `Σ w_k f(z_k)` for vector-valued `f`, summing antipodal pairs first
    /// so odd integrands cancel exactly.
    pub fn integrate_vec(&self, out: &mut [f64], mut f: impl FnMut(&[f64], &mut [f64])) {
        let d = out.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        if self.paired {
            for k in (0..self.len()).step_by(2) {
                f(self.node(k), &mut a);
                f(self.node(k + 1), &mut b);
                let w = self.weights[k];
                for i in 0..d {
                    out[i] += w * (a[i] + b[i]);
                }
            }
        } else {
            for k in 0..self.len() {
                f(self.node(k), &mut a);
                let w = self.weights[k];
                for i in 0..d {
                    out[i] += w * a[i];
                }
            }
        }
    }

    /// `Σ w_k f(z_k)` for scalar `f`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut out = [0.0];
        self.integrate_vec(&mut out, |z, o| o[0] = f(z));
        out[0]
    }
}

/// `-∫ g(t, x, z) ν(dz)`: the drift that compensates the jumps.
pub fn compensator_drift(
    g: &crate::field::JumpCoefficient,
    quad: &JumpQuadrature,
    t: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    quad.integrate_vec(&mut out, |z, o| g.eval(t, x, z, o));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("compensator quadrature produced a non-finite value".into()));
    }
    out.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::JumpCoefficient;
    use crate::rng::{stream, Domain};

    fn sym1() -> JumpMeasure {
        JumpMeasure::new(1, 1.0, 0.1, 1.0, SignMode::Symmetric).unwrap()
    }

    /// Midpoint-rule oracle for `∫_a^b f`.
    fn midpoint(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn total_mass_examples() {
        let oracle = 2.0 * midpoint(0.1, 1.0, 200_000, |z| z.powi(-2));
        assert!((oracle - 18.0).abs() < 1e-6);
        assert!((total_mass(&sym1()).unwrap() - 18.0).abs() < 1e-12);

        let one = JumpMeasure::new(1, 1.0, 0.5, 1.0, SignMode::OneSided).unwrap();
        let oracle = midpoint(0.5, 1.0, 200_000, |z| z.powi(-2));
        assert!((oracle - 1.0).abs() < 1e-9);
        assert!((total_mass(&one).unwrap() - 1.0).abs() < 1e-12);

        let thin = JumpMeasure { inner_cutoff: 1.0 - 1e-10, ..one.clone() };
        assert!(total_mass(&thin).unwrap() < 1e-9);
        let bad = JumpMeasure { inner_cutoff: 1.0, ..one };
        assert!(matches!(total_mass(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn quadrature_reproduces_mass_and_moments() {
        for nu in [
            sym1(),
            JumpMeasure::new(1, 0.5, 0.05, 1.0, SignMode::OneSided).unwrap(),
            JumpMeasure::new(2, 1.5, 0.1, 1.0, SignMode::Symmetric).unwrap(),
            JumpMeasure::new(2, 1.0, 0.2, 0.8, SignMode::OneSided).unwrap(),
        ] {
            let q = nu.quadrature();
            let lam = total_mass(&nu).unwrap();
            assert!((q.total_weight() - lam).abs() < 1e-10 * lam);
            for p in [1.0, 2.0, 4.0] {
                let got = q.integrate(|z| z.iter().map(|c| c * c).sum::<f64>().sqrt().powf(p));
                let want = nu.radial_moment(p);
                assert!((got - want).abs() < 1e-10 * want, "{nu:?} p={p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn jumps_respect_support() {
        for nu in [sym1(), JumpMeasure::new(2, 1.2, 0.1, 1.0, SignMode::OneSided).unwrap()] {
            let mut r = stream(3, Domain::JumpNoise, 0);
            for _ in 0..20_000 {
                let z = sample_jump(&nu, &mut r);
                let n = z.norm();
                assert!(n >= nu.inner_cutoff * (1.0 - 1e-12) && n < nu.outer_cutoff, "{n}");
                if nu.sign_mode == SignMode::OneSided {
                    assert!(z.0[0] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn symmetric_jumps_are_centered() {
        let nu = sym1();
        let mut r = stream(4, Domain::JumpNoise, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_jump(&nu, &mut r).0[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        // second moment of the normalized law: ∫ z^2 ν / λ
        let sigma = (nu.radial_moment(2.0) / total_mass(&nu).unwrap()).sqrt();
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn radial_law_matches_cdf() {
        let nu = JumpMeasure::new(1, 1.5, 0.1, 1.0, SignMode::Symmetric).unwrap();
        let mut r = stream(5, Domain::JumpNoise, 0);
        let n = 100_000;
        let mut radii: Vec<f64> = (0..n).map(|_| sample_jump(&nu, &mut r).0[0].abs()).collect();
        radii.sort_by(f64::total_cmp);
        let ks = radii
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = nu.radial_cdf(x);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn compensator_examples() {
        let q = sym1().quadrature();
        let add = JumpCoefficient::additive(1);
        assert_eq!(compensator_drift(&add, &q, 0.0, &[0.7]).unwrap(), vec![0.0]);
        let mult =
            JumpCoefficient::multiplicative(std::sync::Arc::new(crate::field::SmoothBump::new(vec![0.0], 2.0, 1.3)));
        for x in [-1.5, -0.2, 0.0, 0.9] {
            assert_eq!(compensator_drift(&mult, &q, 0.0, &[x]).unwrap(), vec![0.0]);
        }
        let one = JumpMeasure::new(1, 1.0, 0.1, 1.0, SignMode::OneSided).unwrap().quadrature();
        let sq = JumpCoefficient::general(1, |_, _, z, out| out[0] = z[0] * z[0]);
        let got = compensator_drift(&sq, &one, 0.0, &[0.0]).unwrap()[0];
        assert!((got + 0.9).abs() < 1e-12, "{got}");
        let inf = JumpCoefficient::general(1, |_, _, z, out| out[0] = 1.0 / (z[0] - z[0]));
        assert!(matches!(compensator_drift(&inf, &one, 0.0, &[0.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn two_d_symmetric_compensator_cancels() {
        let q = JumpMeasure::new(2, 1.0, 0.1, 1.0, SignMode::Symmetric).unwrap().quadrature();
        let add = JumpCoefficient::additive(2);
        assert_eq!(compensator_drift(&add, &q, 0.0, &[0.3, -0.1]).unwrap(), vec![0.0, 0.0]);
    }
}
