//! Singlet configuration-interaction matrix for two electrons in two
//! spatial orbitals.
//!
//! Spin orbitals are `χ1 = gα, χ2 = gβ, χ3 = eα, χ4 = eβ` and the singlet
//! basis is `(Ψ1, Ψ6, (Ψ3 − Ψ4)/√2)` with `Ψ1 = |χ1χ2|`, `Ψ3 = |χ1χ4|`,
//! `Ψ4 = |χ2χ3|`, `Ψ6 = |χ3χ4|`. This order is also the order in which the
//! configurations are mapped onto the electron `m_s = (+1, 0, −1)` levels.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::integrals::{EriTensor, IntegralTables};
use super::scf::HartreeFockResult;
use super::ElectronicError;
use crate::numerics::{hermitian_eig, ComplexMatrix};

pub const CONFIGURATION_LABELS: [&str; 3] = ["Psi1 |g g~|", "Psi6 |e e~|", "(Psi3 - Psi4)/sqrt2 open-shell singlet"];

/// 3×3 real symmetric molecular Hamiltonian in Hartree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FciHamiltonian {
    pub matrix: [[f64; 3]; 3],
    pub bond_length_pm: f64,
    /// `tr(H)/3`.
    pub trace_offset: f64,
    pub labels: [String; 3],
}

impl FciHamiltonian {
    /// Wraps an externally supplied matrix (for example one read from a
    /// file) with the default configuration labels.
    pub fn from_matrix(matrix: [[f64; 3]; 3], bond_length_pm: f64) -> Result<Self, ElectronicError> {
        let mut asym: f64 = 0.0;
        for (i, row) in matrix.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ElectronicError::InvalidMatrix(format!("entry ({i},{j}) is not finite")));
                }
                asym = asym.max((v - matrix[j][i]).abs());
            }
        }
        if asym > 1e-12 {
            return Err(ElectronicError::InvalidMatrix(format!(
                "not symmetric (max deviation {asym:e})"
            )));
        }
        Ok(Self {
            trace_offset: (matrix[0][0] + matrix[1][1] + matrix[2][2]) / 3.0,
            matrix,
            bond_length_pm,
            labels: CONFIGURATION_LABELS.map(String::from),
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1] + self.matrix[2][2]
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&self.matrix)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.to_complex())
            .expect("FciHamiltonian is symmetric by construction")
            .eigenvalues
    }
}

/// Core Hamiltonian and two-electron integrals in the MO basis.
#[derive(Debug, Clone)]
pub struct MoIntegrals {
    pub core: DMatrix<f64>,
    pub eri: EriTensor,
    pub nuclear_repulsion: f64,
}

pub fn transform_to_mo(coefficients: &DMatrix<f64>, ints: &IntegralTables) -> MoIntegrals {
    let c = coefficients;
    let n = c.ncols();
    let core = c.transpose() * &ints.core_hamiltonian * c;
    let mut eri = EriTensor::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            for r in 0..n {
                                for s in 0..n {
                                    v += c[(p, i)] * c[(q, j)] * c[(r, k)] * c[(s, l)] * ints.eri.get(p, q, r, s);
                                }
                            }
                        }
                    }
                    eri.set(i, j, k, l, v);
                }
            }
        }
    }
    MoIntegrals {
        core,
        eri,
        nuclear_repulsion: ints.nuclear_repulsion,
    }
}

/// Singlet CI matrix from Slater-Condon rules over canonical HF orbitals.
pub fn build_fci_singlet(hf: &HartreeFockResult, ints: &IntegralTables) -> Result<FciHamiltonian, ElectronicError> {
    if ints.dim() != 2 || ints.electrons != 2 {
        return Err(ElectronicError::UnsupportedElectronCount(ints.electrons as i64));
    }
    let mo = transform_to_mo(&hf.coefficients, ints);
    let matrix = singlet_matrix(&mo);
    FciHamiltonian::from_matrix(matrix, ints.bond_length_pm)
}

/// Builds the `(Ψ1, Ψ6, S)` matrix from MO integrals (orbital 0 = g, 1 = e).
pub fn singlet_matrix(mo: &MoIntegrals) -> [[f64; 3]; 3] {
    let (g, e) = (0, 1);
    let h = &mo.core;
    let j = |a, b, c, d| mo.eri.get(a, b, c, d);
    let en = mo.nuclear_repulsion;

    let closed_g = 2.0 * h[(g, g)] + j(g, g, g, g) + en;
    let closed_e = 2.0 * h[(e, e)] + j(e, e, e, e) + en;
    let open = h[(g, g)] + h[(e, e)] + j(g, g, e, e) + j(g, e, g, e) + en;
    let double = j(g, e, g, e);
    let g_open = SQRT_2 * (h[(g, e)] + j(g, g, g, e));
    let e_open = SQRT_2 * (h[(g, e)] + j(e, e, e, g));

    [
        [closed_g, double, g_open],
        [double, closed_e, e_open],
        [g_open, e_open, open],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electronic::{basis::BasisSet, integrals::heh_integrals, scf::run_rhf};

    fn heh(r: f64) -> (HartreeFockResult, IntegralTables) {
        let ints = heh_integrals(&BasisSet::sto3g(), r).unwrap();
        (run_rhf(&ints).unwrap(), ints)
    }

    #[test]
    fn brillouin_coupling_vanishes() {
        for r in [60.0, 90.0, 150.0] {
            let (hf, ints) = heh(r);
            let m = build_fci_singlet(&hf, &ints).unwrap();
            assert!(m.matrix[0][2].abs() < 1e-8, "R = {r}: {}", m.matrix[0][2]);
        }
    }

    #[test]
    fn hf_energy_is_first_diagonal() {
        let (hf, ints) = heh(90.0);
        let m = build_fci_singlet(&hf, &ints).unwrap();
        assert!((m.matrix[0][0] - hf.energy).abs() < 1e-10);
    }

    #[test]
    fn correlation_lowers_energy() {
        for r in (50..=300).step_by(10) {
            let (hf, ints) = heh(r as f64);
            let m = build_fci_singlet(&hf, &ints).unwrap();
            assert!(m.eigenvalues()[0] <= hf.energy);
        }
    }

    #[test]
    fn trace_offset_is_exact() {
        let (hf, ints) = heh(90.0);
        let m = build_fci_singlet(&hf, &ints).unwrap();
        assert_eq!(m.trace_offset, (m.matrix[0][0] + m.matrix[1][1] + m.matrix[2][2]) / 3.0);
        assert_eq!(m.bond_length_pm, 90.0);
    }

    #[test]
    fn trace_equals_configuration_energies() {
        let (hf, ints) = heh(90.0);
        let m = build_fci_singlet(&hf, &ints).unwrap();
        let mo = transform_to_mo(&hf.coefficients, &ints);
        let (g, e) = (0, 1);
        let en = ints.nuclear_repulsion;
        let e1 = 2.0 * mo.core[(g, g)] + mo.eri.get(g, g, g, g) + en;
        let e6 = 2.0 * mo.core[(e, e)] + mo.eri.get(e, e, e, e) + en;
        let es = mo.core[(g, g)] + mo.core[(e, e)] + mo.eri.get(g, g, e, e) + mo.eri.get(g, e, g, e) + en;
        assert!((m.trace() - (e1 + e6 + es)).abs() < 1e-12);
    }

    #[test]
    fn spectrum_invariant_under_orbital_sign_flips() {
        let (hf, ints) = heh(90.0);
        let base = build_fci_singlet(&hf, &ints).unwrap().eigenvalues();
        for flips in [(1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let mut flipped = hf.clone();
            for r in 0..2 {
                flipped.coefficients[(r, 0)] *= flips.0;
                flipped.coefficients[(r, 1)] *= flips.1;
            }
            let other = build_fci_singlet(&flipped, &ints).unwrap().eigenvalues();
            for (a, b) in base.iter().zip(&other) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_interacting_spectrum() {
        let mut ints = heh_integrals(&BasisSet::sto3g(), 90.0).unwrap();
        ints.eri = EriTensor::zeros(2);
        let hf = run_rhf(&ints).unwrap();
        let m = build_fci_singlet(&hf, &ints).unwrap();
        let (e1, e2) = (hf.orbital_energies[0], hf.orbital_energies[1]);
        let en = ints.nuclear_repulsion;
        let mut want = [2.0 * e1 + en, e1 + e2 + en, 2.0 * e2 + en];
        want.sort_by(f64::total_cmp);
        for (a, b) in m.eigenvalues().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn from_matrix_rejects_asymmetry() {
        let mut m = [[0.0; 3]; 3];
        m[0][1] = 1.0;
        assert!(FciHamiltonian::from_matrix(m, 90.0).is_err());
    }
}
