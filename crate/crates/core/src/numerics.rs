//! Dense complex linear algebra for the small matrices used throughout the
//! simulator (dimension 9 at most).
//!
//! Everything here is a pure function of its inputs. The Hermitian
//! eigensolver is a cyclic Jacobi sweep, which for these sizes converges to
//! machine precision in a handful of sweeps and gives bit-reproducible
//! output for identical input.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Tolerance on `max|A - A†|` for a matrix to be accepted as Hermitian,
/// relative to `max(1, max|A|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|tr ρ - 1|` for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue a density matrix may have before it is rejected.
pub const PSD_FLOOR: f64 = -1e-12;

const MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("density matrix trace deviates from 1 by {deviation:e}")]
    TraceDeviation { deviation: f64 },
    #[error("density matrix has negative eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_rows<const N: usize>(rows: &[[f64; N]]) -> Self {
        Self::from_fn(rows.len(), N, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A_ij - B_ij|`. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A - A†|`, or infinity for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Real parts as nested rows, for serialization of real-valued results.
    pub fn real_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].re).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Serialized form: real and imaginary parts as row lists; `im` may be
/// omitted for real matrices.
#[derive(Serialize, Deserialize)]
struct MatrixParts {
    re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let part = |f: fn(&Complex64) -> f64| {
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| f(&self[(i, j)])).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        MatrixParts {
            re: part(|z| z.re),
            im: Some(part(|z| z.im)),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let parts = MatrixParts::deserialize(deserializer)?;
        let rows = parts.re.len();
        let cols = parts.re.first().map_or(0, Vec::len);
        if parts.re.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("ragged real part"));
        }
        let im = parts.im.unwrap_or_else(|| vec![vec![0.0; cols]; rows]);
        if im.len() != rows || im.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom("imaginary part shape differs from real part"));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
            Complex64::new(parts.re[i][j], im[i][j])
        }))
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigenvalues in ascending order with the matching orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|l| Complex64::new(l, 0.0))
    }

    /// `V diag(f(λ)) V†`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let fl: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum())
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }
}

fn require_hermitian(a: &ComplexMatrix) -> Result<(), NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let deviation = a.hermitian_deviation();
    if deviation > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(NumericsError::NotHermitian { deviation });
    }
    Ok(())
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenDecomposition, NumericsError> {
    require_hermitian(a)?;
    let n = a.rows();
    // Symmetrize exactly so rotations act on a true Hermitian matrix.
    let mut m = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(a[(i, i)].re, 0.0)
        } else {
            (a[(i, j)] + a[(j, i)].conj()) * 0.5
        }
    });
    let mut v = ComplexMatrix::identity(n);

    let scale: f64 = m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off <= 1e-32 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]).then(x.cmp(&y)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);

    orthonormalize_clusters(&eigenvalues, &mut vectors);
    fix_phases(&mut vectors);

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// One Jacobi rotation annihilating `m[p][q]`; accumulates into `v`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let n = m.rows();
    // Phase that makes the (p, q) element real and positive.
    let phase = apq / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = D R with D = diag(1, conj(phase)) on (p, q).
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * jpp + akq * jqp;
        m[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        m[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Modified Gram-Schmidt in index order inside each cluster of
/// (numerically) equal eigenvalues.
fn orthonormalize_clusters(eigenvalues: &[f64], vectors: &mut ComplexMatrix) {
    let n = eigenvalues.len();
    let scale = eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (eigenvalues[end] - eigenvalues[end - 1]).abs() <= 1e-10 * scale {
            end += 1;
        }
        for j in start..end {
            for i in start..j {
                let proj: Complex64 = (0..n).map(|r| vectors[(r, i)].conj() * vectors[(r, j)]).sum();
                for r in 0..n {
                    let vi = vectors[(r, i)];
                    vectors[(r, j)] -= proj * vi;
                }
            }
            let norm = (0..n).map(|r| vectors[(r, j)].norm_sqr()).sum::<f64>().sqrt();
            for r in 0..n {
                vectors[(r, j)] /= norm;
            }
        }
        start = end;
    }
}

/// Rotates each eigenvector so its first significant component is real and
/// positive.
fn fix_phases(vectors: &mut ComplexMatrix) {
    let n = vectors.rows();
    for j in 0..vectors.cols() {
        let biggest = (0..n).map(|r| vectors[(r, j)].norm()).fold(0.0, f64::max);
        let Some(pivot) = (0..n).find(|&r| vectors[(r, j)].norm() > 0.5 * biggest) else {
            continue;
        };
        let z = vectors[(pivot, j)];
        let rot = z.conj() / z.norm();
        for r in 0..n {
            vectors[(r, j)] *= rot;
        }
        vectors[(pivot, j)] = Complex64::new(vectors[(pivot, j)].re, 0.0);
    }
}

/// `exp(-i A t)` for Hermitian `A`.
pub fn expm_i(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, NumericsError> {
    let eig = hermitian_eig(a)?;
    Ok(eig.map_eigenvalues(|l| Complex64::from_polar(1.0, -l * t)))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Which factor of a bipartite `A ⊗ B` space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// First tensor factor (the electron spin in register ordering).
    First,
    /// Second tensor factor (the nuclear spin).
    Second,
}

/// Partial trace of a density matrix on `dims.0 ⊗ dims.1`, keeping one factor.
pub fn partial_trace(
    rho: &ComplexMatrix,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<ComplexMatrix, NumericsError> {
    let (da, db) = dims;
    if !rho.is_square() {
        return Err(NumericsError::NotSquare {
            rows: rho.rows(),
            cols: rho.cols(),
        });
    }
    if rho.rows() != da * db {
        return Err(NumericsError::DimensionMismatch {
            expected: da * db,
            actual: rho.rows(),
        });
    }
    let deviation = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    if deviation > TRACE_TOL {
        return Err(NumericsError::TraceDeviation { deviation });
    }
    let lowest = hermitian_eig(rho)?.eigenvalues[0];
    if lowest < PSD_FLOOR {
        return Err(NumericsError::NotPositive { eigenvalue: lowest });
    }
    Ok(partial_trace_unchecked(rho, dims, keep))
}

/// Partial trace without state validation.
pub fn partial_trace_unchecked(rho: &ComplexMatrix, (da, db): (usize, usize), keep: Subsystem) -> ComplexMatrix {
    match keep {
        Subsystem::First => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum()),
        Subsystem::Second => {
            ComplexMatrix::from_fn(db, db, |i, j| (0..da).map(|k| rho[(k * db + i, k * db + j)]).sum())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(rng.gen_range(-5.0..5.0), 0.0);
            for j in (i + 1)..n {
                let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = hermitian_eig(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvectors_are_permuted_identity() {
        let eig = hermitian_eig(&ComplexMatrix::diagonal(&[-1.0, -3.0, -2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![-3.0, -2.0, -1.0]);
        let expected = [1, 2, 0];
        for (col, &row) in expected.iter().enumerate() {
            for r in 0..3 {
                let want = if r == row { 1.0 } else { 0.0 };
                assert!((eig.eigenvectors[(r, col)] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        match hermitian_eig(&m) {
            Err(NumericsError::NotHermitian { deviation }) => assert!((deviation - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 2 + trial % 8;
            let a = random_hermitian(&mut rng, n);
            let eig = hermitian_eig(&a).unwrap();
            assert!(eig.reconstruct().max_abs_diff(&a) < 1e-11);
            let v = &eig.eigenvectors;
            assert!((&v.adjoint() * v).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-11);
            assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn deterministic_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 7);
        let e1 = hermitian_eig(&a).unwrap();
        let e2 = hermitian_eig(&a).unwrap();
        assert_eq!(e1.eigenvalues, e2.eigenvalues);
        assert_eq!(e1.eigenvectors, e2.eigenvectors);
    }

    #[test]
    fn degenerate_cluster_stays_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = expm_i(&random_hermitian(&mut rng, 5), 0.7).unwrap();
        let d = ComplexMatrix::diagonal(&[1.0, 1.0, 1.0, 2.0, 2.0]);
        let a = &(&u * &d) * &u.adjoint();
        // Make it exactly Hermitian.
        let a = (&a + &a.adjoint()).scale_real(0.5);
        let eig = hermitian_eig(&a).unwrap();
        let v = &eig.eigenvectors;
        assert!((&v.adjoint() * v).max_abs_diff(&ComplexMatrix::identity(5)) < 1e-11);
        assert!(eig.reconstruct().max_abs_diff(&a) < 1e-11);
    }

    #[test]
    fn expm_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_hermitian(&mut rng, 4);
        assert!(expm_i(&a, 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn expm_euler() {
        let u = expm_i(&ComplexMatrix::diagonal(&[PI]), 1.0).unwrap();
        assert!((u[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expm_pauli_x_matches_closed_form() {
        // exp(-i X t) = cos t I - i sin t X
        let x = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        for &t in &[PI / 2.0, 0.3, -1.7] {
            let u = expm_i(&x, t).unwrap();
            let want = ComplexMatrix::from_vec(
                2,
                2,
                vec![c(t.cos(), 0.0), c(0.0, -t.sin()), c(0.0, -t.sin()), c(t.cos(), 0.0)],
            );
            assert!(u.max_abs_diff(&want) < 1e-15);
        }
    }

    #[test]
    fn expm_unitary_and_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.gen_range(2..=9);
            let a = random_hermitian(&mut rng, n);
            let t = rng.gen_range(-1e4..1e4);
            let u = expm_i(&a, t).unwrap();
            assert!((&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-11);
            let (t1, t2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let lhs = expm_i(&a, t1 + t2).unwrap();
            let rhs = &expm_i(&a, t1).unwrap() * &expm_i(&a, t2).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn kron_laws() {
        assert_eq!(
            kron(&ComplexMatrix::identity(3), &ComplexMatrix::identity(3)),
            ComplexMatrix::identity(9)
        );
        let k = kron(&ComplexMatrix::diagonal(&[2.0, 5.0]), &ComplexMatrix::identity(2));
        assert_eq!(k, ComplexMatrix::diagonal(&[2.0, 2.0, 5.0, 5.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 2);
        // (row 0, col 1) of A⊗B is A[0,0]·B[0,1]
        assert_eq!(kron(&a, &b)[(0, 1)], a[(0, 0)] * b[(0, 1)]);
    }

    fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let g = random_hermitian(rng, n);
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        m.scale_real(1.0 / tr)
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = random_density(&mut rng, 3);
        let tau = random_density(&mut rng, 3);
        let rho = kron(&sigma, &tau);
        let kept = partial_trace(&rho, (3, 3), Subsystem::Second).unwrap();
        assert!(kept.max_abs_diff(&tau) < 1e-14);
        let kept = partial_trace(&rho, (3, 3), Subsystem::First).unwrap();
        assert!(kept.max_abs_diff(&sigma) < 1e-14);
    }

    #[test]
    fn partial_trace_maximally_mixed() {
        let rho = ComplexMatrix::identity(9).scale_real(1.0 / 9.0);
        let kept = partial_trace(&rho, (3, 3), Subsystem::Second).unwrap();
        assert!(kept.max_abs_diff(&ComplexMatrix::identity(3).scale_real(1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_trace() {
        let rho = ComplexMatrix::identity(9).scale_real(0.2);
        assert!(matches!(
            partial_trace(&rho, (3, 3), Subsystem::Second),
            Err(NumericsError::TraceDeviation { .. })
        ));
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let rho = random_density(&mut rng, 9);
            for keep in [Subsystem::First, Subsystem::Second] {
                let r = partial_trace(&rho, (3, 3), keep).unwrap();
                assert!((r.trace() - rho.trace()).norm() < 1e-12);
            }
        }
    }

    #[test]
    #[allow(clippy::identity_op, clippy::erasing_op)]
    fn partial_trace_phase_kickback_coherence() {
        // Electron pure state a0|e0> + a1|e1> in eigenbasis of a diagonal H,
        // probe (|0> + |-1>)/√2 with evolution only on the |-1> branch.
        let (a0, a1) = (0.8_f64.sqrt(), 0.2_f64.sqrt());
        let (e0, e1, t) = (-1.3, 0.4, 0.9);
        let mut psi = vec![c(0.0, 0.0); 9];
        // electron index e, nuclear index n ∈ {+1, 0, -1} -> (0, 1, 2)
        let s = 1.0 / 2.0_f64.sqrt();
        psi[0 * 3 + 1] = c(a0 * s, 0.0);
        psi[0 * 3 + 2] = Complex64::from_polar(a0 * s, -e0 * t);
        psi[1 * 3 + 1] = c(a1 * s, 0.0);
        psi[1 * 3 + 2] = Complex64::from_polar(a1 * s, -e1 * t);
        let rho = ComplexMatrix::from_fn(9, 9, |i, j| psi[i] * psi[j].conj());
        let probe = partial_trace(&rho, (3, 3), Subsystem::Second).unwrap();
        let want = (Complex64::from_polar(a0 * a0, -e0 * t) + Complex64::from_polar(a1 * a1, -e1 * t)) * 0.5;
        assert!((probe[(2, 1)] - want).norm() < 1e-15);
    }
}
