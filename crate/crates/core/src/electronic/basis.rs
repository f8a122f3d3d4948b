//! Contracted s-type Gaussian basis functions and the basis-set file format.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ElectronicError;

/// The STO-3G parameter file shipped with the crate.
pub const STO3G_JSON: &str = include_str!("../../data/sto-3g.json");

/// One Gaussian primitive `c · exp(-a r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    /// Exponent in bohr⁻².
    pub exponent: f64,
    pub coefficient: f64,
}

/// Basis-set file contents: element symbol to contraction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisSet {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub units: Option<BTreeMap<String, String>>,
    pub elements: BTreeMap<String, Vec<Primitive>>,
}

impl BasisSet {
    pub fn from_json_str(text: &str) -> Result<Self, ElectronicError> {
        let set: Self = serde_json::from_str(text).map_err(|e| ElectronicError::InvalidBasis(e.to_string()))?;
        for (element, prims) in &set.elements {
            if prims.is_empty() {
                return Err(ElectronicError::InvalidBasis(format!("{element}: no primitives")));
            }
            if let Some(p) = prims.iter().find(|p| !(p.exponent > 0.0) || !p.coefficient.is_finite()) {
                return Err(ElectronicError::InvalidBasis(format!(
                    "{element}: bad primitive (exponent {}, coefficient {})",
                    p.exponent, p.coefficient
                )));
            }
        }
        Ok(set)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ElectronicError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ElectronicError::InvalidBasis(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn sto3g() -> Self {
        Self::from_json_str(STO3G_JSON).expect("shipped STO-3G file is valid")
    }

    /// Normalized contracted orbital for `element` centred at `center` (bohr).
    pub fn orbital(&self, element: &str, center: [f64; 3]) -> Result<ContractedOrbital, ElectronicError> {
        let prims = self
            .elements
            .get(element)
            .ok_or_else(|| ElectronicError::UnknownElement(element.to_string()))?;
        ContractedOrbital::new(center, prims)
    }
}

/// A normalized contraction of s-type Gaussians.
///
/// The stored coefficients already include each primitive's normalization
/// constant and the overall contraction normalization, so
/// `Σ cᵢ cⱼ (π/(aᵢ+aⱼ))^{3/2} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractedOrbital {
    pub center: [f64; 3],
    pub primitives: Vec<Primitive>,
}

impl ContractedOrbital {
    /// Takes coefficients referring to normalized primitives and normalizes
    /// the contraction.
    pub fn new(center: [f64; 3], primitives: &[Primitive]) -> Result<Self, ElectronicError> {
        if primitives.is_empty() {
            return Err(ElectronicError::InvalidBasis(
                "contraction needs at least one primitive".into(),
            ));
        }
        if primitives.iter().any(|p| !(p.exponent > 0.0)) {
            return Err(ElectronicError::InvalidBasis(
                "primitive exponents must be positive".into(),
            ));
        }
        let mut prims: Vec<Primitive> = primitives
            .iter()
            .map(|p| Primitive {
                exponent: p.exponent,
                coefficient: p.coefficient * (2.0 * p.exponent / PI).powf(0.75),
            })
            .collect();
        let orbital = Self {
            center,
            primitives: prims.clone(),
        };
        let norm = orbital.self_overlap().sqrt();
        for p in &mut prims {
            p.coefficient /= norm;
        }
        Ok(Self {
            center,
            primitives: prims,
        })
    }

    pub fn self_overlap(&self) -> f64 {
        let mut s = 0.0;
        for a in &self.primitives {
            for b in &self.primitives {
                s += a.coefficient * b.coefficient * (PI / (a.exponent + b.exponent)).powf(1.5);
            }
        }
        s
    }
}
