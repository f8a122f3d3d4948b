//! The NV-centre register: electron spin-1 (simulation register) coupled to
//! a ¹⁴N nuclear spin-1 (probe register).
//!
//! Register ordering is electron ⊗ nuclear with each qutrit in the
//! `(m = +1, 0, −1)` basis, so the product index is `3·e + n`. Internal
//! frequencies are angular, in rad/µs.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{hermitian_eig, kron, partial_trace_unchecked, ComplexMatrix, NumericsError, Subsystem};

pub const NV_DEFAULT_JSON: &str = include_str!("../data/nv-default.json");

/// Nuclear-spin T₁ under laser illumination (µs). Documented, not simulated.
pub const NUCLEAR_T1_ILLUMINATED_US: f64 = 1.9;
/// Length of the second repolarization laser pulse (ns).
pub const REPOLARIZATION_PULSE_NS: f64 = 300.0;
/// Electron-spin coherence times (µs).
pub const ELECTRON_T2_STAR_US: f64 = 80.0;
pub const ELECTRON_T2_US: f64 = 600.0;

/// Nominal nuclear polarization reached by the initialization sequence.
pub const TYPICAL_POLARIZATION: f64 = 0.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NvError {
    #[error("invalid NV parameters: {0}")]
    InvalidParameters(String),
    #[error("polarization fraction must lie in [0, 1], got {0}")]
    InvalidPolarization(f64),
    #[error("trial state must be normalized (norm² = {0})")]
    UnnormalizedTrial(f64),
    #[error("invalid register state: {0}")]
    InvalidState(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Magnetic quantum number of a spin-1 level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Projection {
    Plus,
    Zero,
    Minus,
}

impl Projection {
    pub const ALL: [Projection; 3] = [Projection::Plus, Projection::Zero, Projection::Minus];

    pub fn value(self) -> f64 {
        match self {
            Projection::Plus => 1.0,
            Projection::Zero => 0.0,
            Projection::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Projection::Plus => 0,
            Projection::Zero => 1,
            Projection::Minus => 2,
        }
    }
}

/// Index of `|m_s, m_I⟩` in the 9-dimensional register.
pub fn register_index(electron: Projection, nuclear: Projection) -> usize {
    3 * electron.index() + nuclear.index()
}

pub struct SpinOperators {
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub z: ComplexMatrix,
}

/// Dimensionless spin-1 matrices in the `(+1, 0, −1)` basis.
pub fn spin1_operators() -> SpinOperators {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let o = c(0.0, 0.0);
    SpinOperators {
        x: ComplexMatrix::from_vec(3, 3, vec![o, c(s, 0.0), o, c(s, 0.0), o, c(s, 0.0), o, c(s, 0.0), o]),
        y: ComplexMatrix::from_vec(3, 3, vec![o, c(0.0, -s), o, c(0.0, s), o, c(0.0, -s), o, c(0.0, s), o]),
        z: ComplexMatrix::diagonal(&[1.0, 0.0, -1.0]),
    }
}

/// Ground-state spin Hamiltonian parameters, in the units of the config
/// file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvParameters {
    /// Δ in GHz.
    pub zero_field_splitting: f64,
    /// Q in MHz.
    pub quadrupole_splitting: f64,
    /// A_hf in MHz.
    pub hyperfine_coupling: f64,
    /// γe in MHz/gauss.
    pub gamma_electron: f64,
    /// γN in kHz/gauss. Positive for ¹⁴N in this convention.
    pub gamma_nitrogen: f64,
    /// B₀ in gauss, along the NV axis.
    pub field: f64,
}

#[derive(Deserialize)]
struct NvParameterFile {
    #[serde(flatten)]
    params: NvParameters,
}

impl Default for NvParameters {
    fn default() -> Self {
        Self::from_json_str(NV_DEFAULT_JSON).expect("shipped NV parameter file is valid")
    }
}

impl NvParameters {
    pub fn from_json_str(text: &str) -> Result<Self, NvError> {
        let file: NvParameterFile =
            serde_json::from_str(text).map_err(|e| NvError::InvalidParameters(e.to_string()))?;
        let params = file.params;
        params.validate()?;
        Ok(params)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, NvError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| NvError::InvalidParameters(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), NvError> {
        let fields = [
            self.zero_field_splitting,
            self.quadrupole_splitting,
            self.hyperfine_coupling,
            self.gamma_electron,
            self.gamma_nitrogen,
            self.field,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(NvError::InvalidParameters("all parameters must be finite".into()));
        }
        if !(self.zero_field_splitting > 0.0) {
            return Err(NvError::InvalidParameters(
                "zero-field splitting must be positive".into(),
            ));
        }
        Ok(())
    }

    /// 2πΔ in rad/µs.
    pub fn zero_field_angular(&self) -> f64 {
        TAU * self.zero_field_splitting * 1e3
    }

    pub fn quadrupole_angular(&self) -> f64 {
        TAU * self.quadrupole_splitting
    }

    pub fn hyperfine_angular(&self) -> f64 {
        TAU * self.hyperfine_coupling
    }

    /// Electron Larmor frequency γe·B₀ in rad/µs.
    pub fn electron_larmor_angular(&self) -> f64 {
        TAU * self.gamma_electron * self.field
    }

    /// Nuclear Larmor frequency γN·B₀ in rad/µs.
    pub fn nuclear_larmor_angular(&self) -> f64 {
        TAU * self.gamma_nitrogen * 1e-3 * self.field
    }
}

/// Diagonal entry of the NV Hamiltonian for `|m_s, m_I⟩` (rad/µs).
pub fn level_energy(params: &NvParameters, electron: Projection, nuclear: Projection) -> f64 {
    let (s, i) = (electron.value(), nuclear.value());
    params.zero_field_angular() * s * s
        + params.electron_larmor_angular() * s
        + params.hyperfine_angular() * s * i
        + params.quadrupole_angular() * i * i
        + params.nuclear_larmor_angular() * i
}

/// `H/ħ = 2πΔ Sz² + γe B₀ Sz + 2πA Sz Iz + 2πQ Iz² + γN B₀ Iz` on the
/// register, in rad/µs.
pub fn nv_hamiltonian(params: &NvParameters) -> ComplexMatrix {
    let ops = spin1_operators();
    let id = ComplexMatrix::identity(3);
    let sz2 = &ops.z * &ops.z;
    let terms = [
        kron(&sz2, &id).scale_real(params.zero_field_angular()),
        kron(&ops.z, &id).scale_real(params.electron_larmor_angular()),
        kron(&ops.z, &ops.z).scale_real(params.hyperfine_angular()),
        kron(&id, &sz2).scale_real(params.quadrupole_angular()),
        kron(&id, &ops.z).scale_real(params.nuclear_larmor_angular()),
    ];
    terms.iter().skip(1).fold(terms[0].clone(), |acc, t| &acc + t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub electron: Projection,
    pub nuclear: Projection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub lower: Level,
    pub upper: Level,
    pub frequency_mhz: f64,
}

/// The two driven electron transitions inside the `m_I = −1` manifold:
/// `m_s = 0 → +1` first, then `m_s = 0 → −1`.
pub fn transition_frequencies(params: &NvParameters) -> [Transition; 2] {
    let lower = Level {
        electron: Projection::Zero,
        nuclear: Projection::Minus,
    };
    let base = level_energy(params, Projection::Zero, Projection::Minus);
    [Projection::Plus, Projection::Minus].map(|ms| Transition {
        lower,
        upper: Level {
            electron: ms,
            nuclear: Projection::Minus,
        },
        frequency_mhz: (level_energy(params, ms, Projection::Minus) - base) / TAU,
    })
}

/// Pure electron state loaded into the simulation register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub label: String,
    pub amplitudes: [Complex64; 3],
}

impl TrialState {
    pub fn basis(level: Projection) -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 3];
        amplitudes[level.index()] = Complex64::new(1.0, 0.0);
        let label = match level {
            Projection::Plus => "+1",
            Projection::Zero => "0",
            Projection::Minus => "-1",
        };
        Self {
            label: label.into(),
            amplitudes,
        }
    }

    pub fn plus() -> Self {
        Self::basis(Projection::Plus)
    }

    pub fn minus() -> Self {
        Self::basis(Projection::Minus)
    }

    pub fn from_vector(label: impl Into<String>, amplitudes: [Complex64; 3]) -> Result<Self, NvError> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(NvError::UnnormalizedTrial(norm));
        }
        Ok(Self {
            label: label.into(),
            amplitudes,
        })
    }

    pub fn density(&self) -> ComplexMatrix {
        let a = &self.amplitudes;
        ComplexMatrix::from_fn(3, 3, |i, j| a[i] * a[j].conj())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitializationModel {
    /// Fraction `p` of the nuclear spin in the probe superposition; the
    /// rest is the uniform mixture over `m_I`.
    pub polarization: f64,
    pub trial: TrialState,
}

/// 9×9 density matrix of the register.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    rho: ComplexMatrix,
}

impl RegisterState {
    pub fn new(rho: ComplexMatrix) -> Result<Self, NvError> {
        if rho.rows() != 9 || rho.cols() != 9 {
            return Err(NvError::InvalidState(format!(
                "expected 9x9, got {}x{}",
                rho.rows(),
                rho.cols()
            )));
        }
        let herm = rho.hermitian_deviation();
        if herm > 1e-12 {
            return Err(NvError::InvalidState(format!("not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(NvError::InvalidState(format!("trace {tr}")));
        }
        let lowest = hermitian_eig(&rho)?.eigenvalues[0];
        if lowest < -1e-10 {
            return Err(NvError::InvalidState(format!("negative eigenvalue {lowest:e}")));
        }
        Ok(Self { rho })
    }

    /// Wraps a matrix known to satisfy the invariants, such as the image of
    /// a valid state under a unitary.
    pub(crate) fn from_trusted(rho: ComplexMatrix) -> Self {
        Self { rho }
    }

    pub fn density(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn nuclear(&self) -> ComplexMatrix {
        partial_trace_unchecked(&self.rho, (3, 3), Subsystem::Second)
    }

    pub fn electron(&self) -> ComplexMatrix {
        partial_trace_unchecked(&self.rho, (3, 3), Subsystem::First)
    }

    /// `⟨m_I = −1| ρ_N |m_I = 0⟩`, the probe coherence carrying the phase.
    pub fn probe_coherence(&self) -> Complex64 {
        self.nuclear()[(Projection::Minus.index(), Projection::Zero.index())]
    }
}

/// Product of the pure trial electron state and the partially polarized
/// probe `p |ψ(0)⟩⟨ψ(0)| + (1 − p) I/3`, `|ψ(0)⟩ = (|0⟩ + |−1⟩)/√2`.
pub fn initialize(model: &InitializationModel) -> Result<RegisterState, NvError> {
    let p = model.polarization;
    if !(0.0..=1.0).contains(&p) {
        return Err(NvError::InvalidPolarization(p));
    }
    let norm: f64 = model.trial.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(NvError::UnnormalizedTrial(norm));
    }
    let (zero, minus) = (Projection::Zero.index(), Projection::Minus.index());
    let mut probe = ComplexMatrix::identity(3).scale_real((1.0 - p) / 3.0);
    for &i in &[zero, minus] {
        for &j in &[zero, minus] {
            probe[(i, j)] += Complex64::new(0.5 * p, 0.0);
        }
    }
    RegisterState::new(kron(&model.trial.density(), &probe))
}

/// Frequency in MHz of an angular frequency in rad/µs.
pub fn to_mhz(angular: f64) -> f64 {
    angular / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spin1_algebra() {
        let ops = spin1_operators();
        assert_eq!(ops.z, ComplexMatrix::diagonal(&[1.0, 0.0, -1.0]));
        let casimir = &(&(&ops.x * &ops.x) + &(&ops.y * &ops.y)) + &(&ops.z * &ops.z);
        assert!(casimir.max_abs_diff(&ComplexMatrix::identity(3).scale_real(2.0)) < 1e-15);
        let comm = &(&ops.x * &ops.y) - &(&ops.y * &ops.x);
        assert!(comm.max_abs_diff(&ops.z.scale(c(0.0, 1.0))) < 1e-15);
    }

    #[test]
    fn default_parameters() {
        let p = NvParameters::default();
        assert_eq!(p.zero_field_splitting, 2.87);
        assert_eq!(p.quadrupole_splitting, -4.94);
        assert_eq!(p.hyperfine_coupling, 2.16);
        assert_eq!(p.field, 11.0);
    }

    #[test]
    fn rejects_non_positive_splitting() {
        let mut p = NvParameters::default();
        p.zero_field_splitting = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn hamiltonian_is_diagonal() {
        let h = nv_hamiltonian(&NvParameters::default());
        assert_eq!(h.max_off_diagonal(), 0.0);
        for e in Projection::ALL {
            for n in Projection::ALL {
                let i = register_index(e, n);
                let want = level_energy(&NvParameters::default(), e, n);
                assert!((h[(i, i)].re - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_field_no_hyperfine_spectrum() {
        let mut p = NvParameters::default();
        p.field = 0.0;
        p.hyperfine_coupling = 0.0;
        let h = nv_hamiltonian(&p);
        for e in Projection::ALL {
            for n in Projection::ALL {
                let i = register_index(e, n);
                let want = TAU * 2870.0 * e.value().powi(2) + TAU * p.quadrupole_splitting * n.value().powi(2);
                assert!((h[(i, i)].re - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn transition_splitting_and_hyperfine_shift() {
        let p = NvParameters::default();
        let [up, down] = transition_frequencies(&p);
        // f(0→+1) − f(0→−1) = 2γeB₀ + 2A·m_I with m_I = −1
        let want = 2.0 * p.gamma_electron * p.field - 2.0 * p.hyperfine_coupling;
        assert!((up.frequency_mhz - down.frequency_mhz - want).abs() < 1e-9);
        assert!((up.frequency_mhz - 2870.0).abs() < 40.0 && (down.frequency_mhz - 2870.0).abs() < 40.0);

        let mut no_hf = p.clone();
        no_hf.hyperfine_coupling = 0.0;
        let [a, b] = transition_frequencies(&no_hf);
        assert!((a.frequency_mhz - b.frequency_mhz - 2.0 * p.gamma_electron * p.field).abs() < 1e-9);

        // Shift of the 0 → +1 electron line between m_I = 0 and m_I = −1.
        let e = |s, i| level_energy(&p, s, i);
        let f0 = e(Projection::Plus, Projection::Zero) - e(Projection::Zero, Projection::Zero);
        let fm = e(Projection::Plus, Projection::Minus) - e(Projection::Zero, Projection::Minus);
        assert!((f0 - fm - TAU * p.hyperfine_coupling).abs() < 1e-9);
    }

    #[test]
    fn transitions_coincide_without_field() {
        let mut p = NvParameters::default();
        p.field = 0.0;
        let [a, b] = transition_frequencies(&p);
        assert!((a.frequency_mhz - (2870.0 - p.hyperfine_coupling)).abs() < 1e-9);
        assert!((b.frequency_mhz - (2870.0 + p.hyperfine_coupling)).abs() < 1e-9);
        p.hyperfine_coupling = 0.0;
        let [a, b] = transition_frequencies(&p);
        assert!((a.frequency_mhz - b.frequency_mhz).abs() < 1e-9);
    }

    #[test]
    fn transitions_vanish_without_splitting() {
        let p = NvParameters {
            zero_field_splitting: 0.0,
            field: 0.0,
            hyperfine_coupling: 0.0,
            ..NvParameters::default()
        };
        for t in transition_frequencies(&p) {
            assert_eq!(t.frequency_mhz, 0.0);
        }
    }

    #[test]
    fn zero_electron_level_lowest() {
        let p = NvParameters::default();
        let e0 = level_energy(&p, Projection::Zero, Projection::Minus);
        assert!(e0 < level_energy(&p, Projection::Plus, Projection::Minus));
        assert!(e0 < level_energy(&p, Projection::Minus, Projection::Minus));
    }

    #[test]
    fn full_polarization_is_pure() {
        let s = initialize(&InitializationModel {
            polarization: 1.0,
            trial: TrialState::plus(),
        })
        .unwrap();
        assert!((s.purity() - 1.0).abs() < 1e-14);
        assert!((s.probe_coherence() - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unpolarized_probe_is_mixed() {
        let s = initialize(&InitializationModel {
            polarization: 0.0,
            trial: TrialState::minus(),
        })
        .unwrap();
        assert!(
            s.nuclear()
                .max_abs_diff(&ComplexMatrix::identity(3).scale_real(1.0 / 3.0))
                < 1e-15
        );
    }

    #[test]
    fn sixty_percent_coherence() {
        let s = initialize(&InitializationModel {
            polarization: TYPICAL_POLARIZATION,
            trial: TrialState::plus(),
        })
        .unwrap();
        let n = s.nuclear();
        assert!((n[(Projection::Zero.index(), Projection::Minus.index())] - c(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_polarization() {
        for p in [-0.1, 1.5, f64::NAN] {
            assert!(initialize(&InitializationModel {
                polarization: p,
                trial: TrialState::plus(),
            })
            .is_err());
        }
    }

    #[test]
    fn states_valid_across_polarization() {
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            let trial = TrialState::from_vector("mix", [c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]).unwrap();
            let s = initialize(&InitializationModel { polarization: p, trial }).unwrap();
            assert!(RegisterState::new(s.density().clone()).is_ok());
        }
    }
}
