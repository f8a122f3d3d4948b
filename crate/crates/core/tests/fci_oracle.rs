//! Cross-checks the Slater-Condon singlet matrix against an explicit
//! first-quantized two-electron Hamiltonian built over all 16 ordered
//! spin-orbital pairs and projected onto antisymmetrized determinants.

use heh_nv::electronic::fci::transform_to_mo;
use heh_nv::electronic::{build_fci_singlet, heh_integrals, run_rhf, BasisSet};

const SPIN_ORBITALS: usize = 4;

/// `χ0 = gα, χ1 = gβ, χ2 = eα, χ3 = eβ`.
fn spatial(a: usize) -> usize {
    a / 2
}

fn spin(a: usize) -> usize {
    a % 2
}

struct ProductSpaceHamiltonian {
    h: Vec<Vec<f64>>,
}

impl ProductSpaceHamiltonian {
    fn new(core: &nalgebra::DMatrix<f64>, eri: &heh_nv::electronic::EriTensor, nuclear: f64) -> Self {
        let n = SPIN_ORBITALS;
        let one = |a: usize, b: usize| {
            if spin(a) == spin(b) {
                core[(spatial(a), spatial(b))]
            } else {
                0.0
            }
        };
        // Physicist's <ab|cd> = (ac|bd) with spin deltas.
        let two = |a: usize, b: usize, c: usize, d: usize| {
            if spin(a) == spin(c) && spin(b) == spin(d) {
                eri.get(spatial(a), spatial(c), spatial(b), spatial(d))
            } else {
                0.0
            }
        };
        let dim = n * n;
        let mut h = vec![vec![0.0; dim]; dim];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut v = two(a, b, c, d);
                        if b == d {
                            v += one(a, c);
                        }
                        if a == c {
                            v += one(b, d);
                        }
                        if a == c && b == d {
                            v += nuclear;
                        }
                        h[a * n + b][c * n + d] = v;
                    }
                }
            }
        }
        Self { h }
    }

    fn element(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                s += xi * self.h[i][j] * yj;
            }
        }
        s
    }
}

/// `(|ij> − |ji>)/√2` in the 16-dim product space.
fn determinant(i: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; SPIN_ORBITALS * SPIN_ORBITALS];
    let s = 1.0 / 2f64.sqrt();
    v[i * SPIN_ORBITALS + j] += s;
    v[j * SPIN_ORBITALS + i] -= s;
    v
}

fn combine(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

#[test]
fn slater_condon_matches_explicit_determinant_hamiltonian() {
    let basis = BasisSet::sto3g();
    for r in [55.0, 75.0, 90.0, 91.3, 120.0, 250.0] {
        let ints = heh_integrals(&basis, r).unwrap();
        let hf = run_rhf(&ints).unwrap();
        let fci = build_fci_singlet(&hf, &ints).unwrap();
        let mo = transform_to_mo(&hf.coefficients, &ints);
        let big = ProductSpaceHamiltonian::new(&mo.core, &mo.eri, ints.nuclear_repulsion);

        let dets = [
            determinant(0, 1), // Ψ1
            determinant(0, 2), // Ψ2
            determinant(0, 3), // Ψ3
            determinant(1, 2), // Ψ4
            determinant(1, 3), // Ψ5
            determinant(2, 3), // Ψ6
        ];
        // The six-determinant Hamiltonian is symmetric and block-diagonal in M_z.
        let mz = [0, 1, 0, 0, -1, 0];
        for i in 0..6 {
            for j in 0..6 {
                let hij = big.element(&dets[i], &dets[j]);
                assert!((hij - big.element(&dets[j], &dets[i])).abs() < 1e-13);
                if mz[i] != mz[j] {
                    assert!(hij.abs() < 1e-14);
                }
            }
        }

        let s = 1.0 / 2f64.sqrt();
        let singlet = combine(&dets[2], s, &dets[3], -s);
        let triplet = combine(&dets[2], s, &dets[3], s);
        let basis_vectors = [dets[0].clone(), dets[5].clone(), singlet];
        for i in 0..3 {
            for j in 0..3 {
                let want = big.element(&basis_vectors[i], &basis_vectors[j]);
                assert!(
                    (fci.matrix[i][j] - want).abs() < 1e-10,
                    "R={r} ({i},{j}): {} vs {want}",
                    fci.matrix[i][j]
                );
            }
            // singlets never couple to the M_z = 0 triplet
            assert!(big.element(&basis_vectors[i], &triplet).abs() < 1e-12);
        }
    }
}
