//! Minimal-basis electronic structure for HeH⁺: integrals, Hartree-Fock and
//! the singlet CI matrix.

pub mod basis;
pub mod fci;
pub mod integrals;
pub mod scf;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::numerics::{hermitian_eig, ComplexMatrix, NumericsError};

pub use basis::{BasisSet, ContractedOrbital, Primitive};
pub use fci::{build_fci_singlet, FciHamiltonian, CONFIGURATION_LABELS};
pub use integrals::{boys_f0, heh_integrals, integrals_ss, Atom, EriTensor, IntegralTables, MoleculeSpec};
pub use scf::{run_rhf, HartreeFockResult};

/// Picometres per bohr.
pub const BOHR_PM: f64 = 52.917_721_090_3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectronicError {
    #[error("invalid basis set: {0}")]
    InvalidBasis(String),
    #[error("no basis functions for element {0}")]
    UnknownElement(String),
    #[error("Boys function argument must be non-negative, got {0}")]
    NegativeBoysArgument(f64),
    #[error("nuclei {first} and {second} coincide; nuclear repulsion is singular")]
    CoincidentNuclei { first: String, second: String },
    #[error("overlap matrix is not positive definite (smallest eigenvalue {0:e})")]
    SingularOverlap(f64),
    #[error("unsupported electron count {0}")]
    UnsupportedElectronCount(i64),
    #[error("SCF did not converge in {iterations} iterations (density residual {residual:e})")]
    ScfNotConverged { iterations: usize, residual: f64 },
    #[error("invalid Hamiltonian matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Eigen-decomposition of a real symmetric matrix through the Hermitian
/// Jacobi solver; eigenvectors are returned as real columns.
pub(crate) fn symmetric_eig(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), ElectronicError> {
    let n = m.nrows();
    let cm = ComplexMatrix::from_fn(n, m.ncols(), |i, j| m[(i, j)].into());
    let eig = hermitian_eig(&cm)?;
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, j)].re);
    Ok((eig.eigenvalues, vectors))
}

/// HeH⁺ singlet Hamiltonian at `r_pm`, together with the HF solution it
/// was built from.
pub fn heh_hamiltonian(basis: &BasisSet, r_pm: f64) -> Result<(FciHamiltonian, HartreeFockResult), ElectronicError> {
    let ints = heh_integrals(basis, r_pm)?;
    let hf = run_rhf(&ints)?;
    Ok((build_fci_singlet(&hf, &ints)?, hf))
}
