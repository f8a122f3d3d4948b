//! Closed-form one- and two-electron integrals over s-type Gaussians.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::basis::{BasisSet, ContractedOrbital};
use super::{ElectronicError, BOHR_PM};

/// Boys function of order zero, `F₀(t) = ∫₀¹ exp(-t u²) du`.
pub fn boys_f0(t: f64) -> Result<f64, ElectronicError> {
    if t < 0.0 || t.is_nan() {
        return Err(ElectronicError::NegativeBoysArgument(t));
    }
    Ok(boys_f0_unchecked(t))
}

fn boys_f0_unchecked(t: f64) -> f64 {
    if t < 1e-8 {
        1.0 - t / 3.0 + t * t / 10.0
    } else {
        let s = t.sqrt();
        0.5 * (PI / t).sqrt() * libm::erf(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: String,
    pub charge: u32,
    /// Position in bohr.
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpec {
    pub atoms: Vec<Atom>,
    pub net_charge: i32,
    pub electrons: u32,
}

impl MoleculeSpec {
    pub fn new(atoms: Vec<Atom>, net_charge: i32) -> Result<Self, ElectronicError> {
        let total: i64 = atoms.iter().map(|a| a.charge as i64).sum::<i64>() - net_charge as i64;
        if total < 0 {
            return Err(ElectronicError::UnsupportedElectronCount(total));
        }
        Ok(Self {
            atoms,
            net_charge,
            electrons: total as u32,
        })
    }

    /// HeH⁺ with He at the origin and H on the +z axis, `r_pm` apart.
    pub fn heh_plus(r_pm: f64) -> Self {
        let r = r_pm / BOHR_PM;
        Self::new(
            vec![
                Atom {
                    element: "He".into(),
                    charge: 2,
                    position: [0.0, 0.0, 0.0],
                },
                Atom {
                    element: "H".into(),
                    charge: 1,
                    position: [0.0, 0.0, r],
                },
            ],
            1,
        )
        .expect("HeH+ has two electrons")
    }

    /// One contracted orbital per atom, from `basis`.
    pub fn orbitals(&self, basis: &BasisSet) -> Result<Vec<ContractedOrbital>, ElectronicError> {
        self.atoms
            .iter()
            .map(|a| basis.orbital(&a.element, a.position))
            .collect()
    }

    /// Distance between the first two nuclei, in pm (0 for a single atom).
    pub fn bond_length_pm(&self) -> f64 {
        match self.atoms.as_slice() {
            [a, b, ..] => distance2(a.position, b.position).sqrt() * BOHR_PM,
            _ => 0.0,
        }
    }
}

/// `(pq|rs)` in chemist's notation, stored densely with all 8 permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct EriTensor {
    n: usize,
    data: Vec<f64>,
}

impl EriTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn offset(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n + q) * self.n + r) * self.n + s
    }

    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.offset(p, q, r, s)]
    }

    /// Writes `value` at all eight symmetry-equivalent positions.
    pub fn set_symmetric(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let o = self.offset(a, b, c, d);
            self.data[o] = value;
        }
    }

    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        let o = self.offset(p, q, r, s);
        self.data[o] = value;
    }
}

/// AO-basis integrals for one nuclear configuration, in Hartree atomic units.
#[derive(Debug, Clone)]
pub struct IntegralTables {
    pub overlap: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    pub nuclear_attraction: DMatrix<f64>,
    /// `T + V`.
    pub core_hamiltonian: DMatrix<f64>,
    pub eri: EriTensor,
    pub nuclear_repulsion: f64,
    pub electrons: u32,
    pub bond_length_pm: f64,
}

impl IntegralTables {
    pub fn dim(&self) -> usize {
        self.overlap.nrows()
    }
}

fn distance2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn gaussian_center(a: f64, ra: [f64; 3], b: f64, rb: [f64; 3]) -> [f64; 3] {
    let p = a + b;
    [
        (a * ra[0] + b * rb[0]) / p,
        (a * ra[1] + b * rb[1]) / p,
        (a * ra[2] + b * rb[2]) / p,
    ]
}

fn contract2(oa: &ContractedOrbital, ob: &ContractedOrbital, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for pa in &oa.primitives {
        for pb in &ob.primitives {
            sum += pa.coefficient * pb.coefficient * f(pa.exponent, pb.exponent);
        }
    }
    sum
}

fn overlap_prim(a: f64, b: f64, r2: f64) -> f64 {
    let p = a + b;
    (PI / p).powf(1.5) * (-a * b / p * r2).exp()
}

fn kinetic_prim(a: f64, b: f64, r2: f64) -> f64 {
    let p = a + b;
    let mu = a * b / p;
    mu * (3.0 - 2.0 * mu * r2) * (PI / p).powf(1.5) * (-mu * r2).exp()
}

fn attraction_prim(a: f64, ra: [f64; 3], b: f64, rb: [f64; 3], rc: [f64; 3], z: f64) -> f64 {
    let p = a + b;
    let rp = gaussian_center(a, ra, b, rb);
    -2.0 * PI / p * z * (-a * b / p * distance2(ra, rb)).exp() * boys_f0_unchecked(p * distance2(rp, rc))
}

#[allow(clippy::too_many_arguments)]
fn eri_prim(a: f64, ra: [f64; 3], b: f64, rb: [f64; 3], c: f64, rc: [f64; 3], d: f64, rd: [f64; 3]) -> f64 {
    let p = a + b;
    let q = c + d;
    let rp = gaussian_center(a, ra, b, rb);
    let rq = gaussian_center(c, rc, d, rd);
    let alpha = p * q / (p + q);
    2.0 * PI.powf(2.5) / (p * q * (p + q).sqrt())
        * (-a * b / p * distance2(ra, rb) - c * d / q * distance2(rc, rd)).exp()
        * boys_f0_unchecked(alpha * distance2(rp, rq))
}

/// Overlap, kinetic, nuclear-attraction and electron-repulsion integrals
/// via the Gaussian product theorem.
pub fn integrals_ss(
    orbitals: &[ContractedOrbital],
    molecule: &MoleculeSpec,
) -> Result<IntegralTables, ElectronicError> {
    for (i, a) in molecule.atoms.iter().enumerate() {
        for b in &molecule.atoms[i + 1..] {
            if distance2(a.position, b.position).sqrt() < 1e-12 {
                return Err(ElectronicError::CoincidentNuclei {
                    first: a.element.clone(),
                    second: b.element.clone(),
                });
            }
        }
    }

    let n = orbitals.len();
    let mut overlap = DMatrix::zeros(n, n);
    let mut kinetic = DMatrix::zeros(n, n);
    let mut attraction = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (oi, oj) = (&orbitals[i], &orbitals[j]);
            let r2 = distance2(oi.center, oj.center);
            let s = contract2(oi, oj, |a, b| overlap_prim(a, b, r2));
            let t = contract2(oi, oj, |a, b| kinetic_prim(a, b, r2));
            let v: f64 = molecule
                .atoms
                .iter()
                .map(|atom| {
                    contract2(oi, oj, |a, b| {
                        attraction_prim(a, oi.center, b, oj.center, atom.position, atom.charge as f64)
                    })
                })
                .sum();
            for (m, val) in [(&mut overlap, s), (&mut kinetic, t), (&mut attraction, v)] {
                m[(i, j)] = val;
                m[(j, i)] = val;
            }
        }
    }

    let mut eri = EriTensor::zeros(n);
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                        continue;
                    }
                    let (op, oq, or, os) = (&orbitals[p], &orbitals[q], &orbitals[r], &orbitals[s]);
                    let mut value = 0.0;
                    for a in &op.primitives {
                        for b in &oq.primitives {
                            for c in &or.primitives {
                                for d in &os.primitives {
                                    value += a.coefficient
                                        * b.coefficient
                                        * c.coefficient
                                        * d.coefficient
                                        * eri_prim(
                                            a.exponent, op.center, b.exponent, oq.center, c.exponent, or.center,
                                            d.exponent, os.center,
                                        );
                                }
                            }
                        }
                    }
                    eri.set_symmetric(p, q, r, s, value);
                }
            }
        }
    }

    let mut nuclear_repulsion = 0.0;
    for (i, a) in molecule.atoms.iter().enumerate() {
        for b in &molecule.atoms[i + 1..] {
            nuclear_repulsion += (a.charge * b.charge) as f64 / distance2(a.position, b.position).sqrt();
        }
    }

    Ok(IntegralTables {
        core_hamiltonian: &kinetic + &attraction,
        overlap,
        kinetic,
        nuclear_attraction: attraction,
        eri,
        nuclear_repulsion,
        electrons: molecule.electrons,
        bond_length_pm: molecule.bond_length_pm(),
    })
}

/// Integrals for HeH⁺ at `r_pm` in the given basis.
pub fn heh_integrals(basis: &BasisSet, r_pm: f64) -> Result<IntegralTables, ElectronicError> {
    let molecule = MoleculeSpec::heh_plus(r_pm);
    integrals_ss(&molecule.orbitals(basis)?, &molecule)
}
