//! Named coefficient sets, jump measures and initial laws.
//!
//! Every preset is compactly supported (or, for `linear-ode`, only used
//! where the flow stays bounded), so norms over `[-4, 4]` are exact.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::field::{
    CoefficientField, Combination, Coordinate, DriftField, JumpCoefficient, Linear, PiecewiseLinear, Product,
    ScalarField, SmoothBump,
};
use crate::jump::{JumpMeasure, SignMode};
use crate::measure::InitialLaw;

pub const COEFFICIENTS: [&str; 6] = ["frozen", "linear-ode", "smooth", "kinked", "smooth-2d", "additive"];
pub const PERTURBATIONS: [&str; 3] = ["drift-bump", "jump-bump", "drift-bump-2d"];
pub const JUMP_MEASURES: [&str; 4] = ["sym-a1", "sym-a15", "one-sided", "sym-2d"];
pub const INITIAL_LAWS: [&str; 4] = ["gauss-0.5", "dirac-0", "dirac-1", "gauss-2d"];

fn bump(center: Vec<f64>, radius: f64, height: f64) -> Arc<dyn ScalarField> {
    Arc::new(SmoothBump::new(center, radius, height))
}

/// `-x_k` damped by a bump of radius 3.
fn restoring(dim: usize, k: usize) -> Arc<dyn ScalarField> {
    Arc::new(Product { scale: -1.0, a: Arc::new(Coordinate { dim, k }), b: bump(vec![0.0; dim], 3.0, 1.0) })
}

pub fn coefficients(name: &str) -> Result<CoefficientField> {
    match name {
        "frozen" => Ok(CoefficientField::frozen(1)),
        "linear-ode" => CoefficientField::new(
            name,
            DriftField { components: vec![Arc::new(Linear { coeffs: vec![-1.0], offset: 0.0 })] },
            JumpCoefficient::zero(1),
        ),
        "smooth" => CoefficientField::new(
            name,
            DriftField { components: vec![restoring(1, 0)] },
            JumpCoefficient::multiplicative(bump(vec![0.0], 3.0, 0.5)),
        ),
        // W^{1,p} but not C^1: kinks at ±0.5, ±3 in b and at 0, ±3 in the amplitude
        "kinked" => CoefficientField::new(
            name,
            DriftField {
                components: vec![Arc::new(PiecewiseLinear::new(vec![
                    (-3.0, 0.0),
                    (-0.5, 0.5),
                    (0.5, -0.5),
                    (3.0, 0.0),
                ])?)],
            },
            JumpCoefficient::multiplicative(Arc::new(PiecewiseLinear::tent(0.0, 3.0, 0.5))),
        ),
        "smooth-2d" => CoefficientField::new(
            name,
            DriftField { components: vec![restoring(2, 0), restoring(2, 1)] },
            JumpCoefficient::multiplicative(bump(vec![0.0, 0.0], 3.0, 0.5)),
        ),
        "additive" => {
            CoefficientField::new(name, DriftField { components: vec![restoring(1, 0)] }, JumpCoefficient::additive(1))
        }
        _ => Err(unknown("coefficient set", name, &COEFFICIENTS)),
    }
}

/// A perturbation direction: `φ` for drifts, `ψ` (an amplitude) for jumps.
#[derive(Debug, Clone)]
pub enum Perturbation {
    Drift(DriftField),
    Jump(Arc<dyn ScalarField>),
}

pub fn perturbation(name: &str) -> Result<Perturbation> {
    match name {
        "drift-bump" => Ok(Perturbation::Drift(DriftField { components: vec![bump(vec![0.5], 1.0, 1.0)] })),
        "jump-bump" => Ok(Perturbation::Jump(bump(vec![-0.5], 1.0, 0.5))),
        "drift-bump-2d" => Ok(Perturbation::Drift(DriftField {
            components: vec![bump(vec![0.5, 0.0], 1.0, 1.0), bump(vec![0.0, 0.5], 1.0, 1.0)],
        })),
        _ => Err(unknown("perturbation", name, &PERTURBATIONS)),
    }
}

impl Perturbation {
    /// `(b + h φ, g)` or `(b, g + h ψ z)`.
    pub fn apply(&self, base: &CoefficientField, h: f64) -> Result<CoefficientField> {
        let name = format!("{}+{h}", base.name);
        match self {
            Perturbation::Drift(phi) => {
                if phi.dim() != base.dim() {
                    return Err(crate::Error::DimensionMismatch { expected: base.dim(), got: phi.dim() });
                }
                CoefficientField::new(name, base.drift.perturbed(h, phi), base.jump.clone())
            }
            Perturbation::Jump(psi) => {
                let a = base
                    .jump
                    .amplitude()
                    .ok_or_else(|| config_err("jump perturbations need a multiplicative jump coefficient"))?;
                let amp = Combination { terms: vec![(1.0, a.clone()), (h, psi.clone())] };
                CoefficientField::new(name, base.drift.clone(), JumpCoefficient::multiplicative(Arc::new(amp)))
            }
        }
    }
}

pub fn jump_measure(name: &str) -> Result<JumpMeasure> {
    match name {
        "sym-a1" => JumpMeasure::new(1, 1.0, 0.1, 1.0, SignMode::Symmetric),
        "sym-a15" => JumpMeasure::new(1, 1.5, 0.1, 1.0, SignMode::Symmetric),
        "one-sided" => JumpMeasure::new(1, 1.0, 0.5, 1.0, SignMode::OneSided),
        "sym-2d" => JumpMeasure::new(2, 1.0, 0.1, 1.0, SignMode::Symmetric),
        _ => Err(unknown("jump measure", name, &JUMP_MEASURES)),
    }
}

pub fn initial_law(name: &str) -> Result<InitialLaw> {
    match name {
        "gauss-0.5" => Ok(InitialLaw::Gaussian { mean: vec![0.0], std: 0.5 }),
        "dirac-0" => Ok(InitialLaw::Dirac { at: vec![0.0] }),
        "dirac-1" => Ok(InitialLaw::Dirac { at: vec![1.0] }),
        "gauss-2d" => Ok(InitialLaw::Gaussian { mean: vec![0.0, 0.0], std: 0.5 }),
        _ => Err(unknown("initial law", name, &INITIAL_LAWS)),
    }
}

/// A jump measure given by preset name or inline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JumpRef {
    Name(String),
    Inline(JumpMeasure),
}

impl JumpRef {
    pub fn resolve(&self) -> Result<JumpMeasure> {
        match self {
            JumpRef::Name(n) => jump_measure(n),
            JumpRef::Inline(m) => {
                m.validate()?;
                Ok(m.clone())
            }
        }
    }
}

/// An initial law given by preset name or inline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawRef {
    Name(String),
    Inline(InitialLaw),
}

impl LawRef {
    pub fn resolve(&self) -> Result<InitialLaw> {
        match self {
            LawRef::Name(n) => initial_law(n),
            LawRef::Inline(l) => {
                l.validate()?;
                Ok(l.clone())
            }
        }
    }
}

fn unknown(what: &str, name: &str, known: &[&str]) -> crate::Error {
    config_err(format!("unknown {what} '{name}'; known: {}", known.join(", ")))
}

/// FNV-1a of a preset's debug rendering; stable across runs and platforms.
pub fn fingerprint(item: &impl std::fmt::Debug) -> String {
    let text = format!("{item:?}");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_resolves() {
        for n in COEFFICIENTS {
            assert!(coefficients(n).is_ok(), "{n}");
        }
        for n in PERTURBATIONS {
            assert!(perturbation(n).is_ok(), "{n}");
        }
        for n in JUMP_MEASURES {
            assert!(jump_measure(n).is_ok(), "{n}");
        }
        for n in INITIAL_LAWS {
            assert!(initial_law(n).is_ok(), "{n}");
        }
        assert!(coefficients("nope").unwrap_err().to_string().contains("known: frozen"));
    }

    #[test]
    fn perturbations_apply() {
        let base = coefficients("smooth").unwrap();
        let up = perturbation("drift-bump").unwrap().apply(&base, 0.2).unwrap();
        let mut a = [0.0];
        let mut b = [0.0];
        base.drift.eval(0.0, &[0.5], &mut a);
        up.drift.eval(0.0, &[0.5], &mut b);
        assert!((b[0] - a[0] - 0.2).abs() < 1e-15);
        let jp = perturbation("jump-bump").unwrap().apply(&base, 0.4).unwrap();
        let (mut ga, mut gb) = ([0.0], [0.0]);
        base.jump.eval(0.0, &[-0.5], &[0.3], &mut ga);
        jp.jump.eval(0.0, &[-0.5], &[0.3], &mut gb);
        assert!((gb[0] - ga[0] - 0.4 * 0.5 * 0.3).abs() < 1e-15);
        assert!(perturbation("drift-bump-2d").unwrap().apply(&base, 0.1).is_err());
    }

    #[test]
    fn refs_parse_from_json() {
        let r: JumpRef = serde_json::from_str("\"sym-a1\"").unwrap();
        assert_eq!(r.resolve().unwrap(), jump_measure("sym-a1").unwrap());
        let r: JumpRef = serde_json::from_str(
            r#"{"dim":1,"alpha":0.5,"inner_cutoff":0.2,"outer_cutoff":2.0,"sign_mode":"one-sided"}"#,
        )
        .unwrap();
        assert_eq!(r.resolve().unwrap().alpha, 0.5);
        let l: LawRef = serde_json::from_str(r#"{"kind":"dirac","at":[2.0]}"#).unwrap();
        assert_eq!(l.resolve().unwrap(), InitialLaw::Dirac { at: vec![2.0] });
        assert_eq!(fingerprint(&jump_measure("sym-a1").unwrap()), fingerprint(&jump_measure("sym-a1").unwrap()));
        assert_ne!(fingerprint(&jump_measure("sym-a1").unwrap()), fingerprint(&jump_measure("sym-a15").unwrap()));
    }
}
