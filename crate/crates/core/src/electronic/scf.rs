//! Closed-shell restricted Hartree-Fock.

use nalgebra::DMatrix;

use super::integrals::{EriTensor, IntegralTables};
use super::{symmetric_eig, ElectronicError};

pub const MAX_SCF_ITERATIONS: usize = 500;
pub const DENSITY_TOL: f64 = 1e-10;
pub const ENERGY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct HartreeFockResult {
    /// MO coefficients, one orbital per column.
    pub coefficients: DMatrix<f64>,
    /// Ascending orbital energies (Hartree).
    pub orbital_energies: Vec<f64>,
    /// Total energy including nuclear repulsion (Hartree).
    pub energy: f64,
    pub iterations: usize,
    /// AO Fock matrix built from the converged density.
    pub fock: DMatrix<f64>,
}

/// Density `D = C_occ C_occᵀ` (without the factor 2 for double occupancy).
fn density(c: &DMatrix<f64>, occupied: usize) -> DMatrix<f64> {
    let occ = c.columns(0, occupied);
    occ * occ.transpose()
}

fn fock(h: &DMatrix<f64>, eri: &EriTensor, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut f = h.clone();
    for i in 0..n {
        for j in 0..n {
            let mut g = 0.0;
            for k in 0..n {
                for l in 0..n {
                    g += d[(k, l)] * (2.0 * eri.get(i, j, k, l) - eri.get(i, k, j, l));
                }
            }
            f[(i, j)] += g;
        }
    }
    f
}

fn electronic_energy(h: &DMatrix<f64>, f: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    d.component_mul(&(h + f)).sum()
}

/// Symmetric orthogonalizer `S^{-1/2}`.
fn inverse_sqrt(s: &DMatrix<f64>) -> Result<DMatrix<f64>, ElectronicError> {
    let (values, vectors) = symmetric_eig(s)?;
    if values[0] <= 0.0 {
        return Err(ElectronicError::SingularOverlap(values[0]));
    }
    let n = s.nrows();
    let inv = DMatrix::from_fn(n, n, |i, j| if i == j { values[i].powf(-0.5) } else { 0.0 });
    Ok(&vectors * inv * vectors.transpose())
}

fn diagonalize_fock(x: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), ElectronicError> {
    let fp = x.transpose() * f * x;
    let (e, cp) = symmetric_eig(&fp)?;
    Ok((e, x * cp))
}

fn occupied_count(ints: &IntegralTables) -> Result<usize, ElectronicError> {
    let n = ints.electrons as usize;
    if n == 0 || n % 2 != 0 || n / 2 > ints.dim() {
        return Err(ElectronicError::UnsupportedElectronCount(n as i64));
    }
    Ok(n / 2)
}

/// SCF from the core-Hamiltonian guess.
pub fn run_rhf(ints: &IntegralTables) -> Result<HartreeFockResult, ElectronicError> {
    let occupied = occupied_count(ints)?;
    let h = &ints.core_hamiltonian;
    let x = inverse_sqrt(&ints.overlap)?;

    let (_, c) = diagonalize_fock(&x, h)?;
    let mut d = density(&c, occupied);
    let mut energy_prev: Option<f64> = None;
    let mut residual = f64::INFINITY;

    for iteration in 1..=MAX_SCF_ITERATIONS {
        let f = fock(h, &ints.eri, &d);
        let energy = electronic_energy(h, &f, &d) + ints.nuclear_repulsion;
        let (_, c_new) = diagonalize_fock(&x, &f)?;
        let d_new = density(&c_new, occupied);
        residual = (&d_new - &d).abs().max();
        let de = energy_prev.map_or(f64::INFINITY, |e| (energy - e).abs());
        d = d_new;
        if residual < DENSITY_TOL && de < ENERGY_TOL {
            let f = fock(h, &ints.eri, &d);
            let (orbital_energies, coefficients) = diagonalize_fock(&x, &f)?;
            let d = density(&coefficients, occupied);
            return Ok(HartreeFockResult {
                energy: electronic_energy(h, &fock(h, &ints.eri, &d), &d) + ints.nuclear_repulsion,
                coefficients,
                orbital_energies,
                iterations: iteration,
                fock: f,
            });
        }
        energy_prev = Some(energy);
    }
    Err(ElectronicError::ScfNotConverged {
        iterations: MAX_SCF_ITERATIONS,
        residual,
    })
}

/// Energy of the closed-shell determinant built from the given occupied
/// orbitals (columns, assumed S-orthonormal).
pub fn closed_shell_energy(ints: &IntegralTables, occupied: &DMatrix<f64>) -> f64 {
    let d = occupied * occupied.transpose();
    let f = fock(&ints.core_hamiltonian, &ints.eri, &d);
    electronic_energy(&ints.core_hamiltonian, &f, &d) + ints.nuclear_repulsion
}
