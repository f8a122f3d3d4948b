//! Shared fixtures for the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use heh_nv::nv::TrialState;
use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reference singlet matrix at R = 90 pm (six figures), in its tabulated
/// configuration order (Ψ1, S, Ψ6).
pub const COMPANION_PRINTED: [[f64; 3]; 3] = [
    [-2.85404, 0.0, 0.130671],
    [0.0, -1.91238, -0.323568],
    [0.130671, -0.323568, -0.760916],
];

/// The same matrix in the crate's (Ψ1, Ψ6, S) order.
pub const COMPANION: [[f64; 3]; 3] = [
    [-2.85404, 0.130671, 0.0],
    [0.130671, -0.760916, -0.323568],
    [0.0, -0.323568, -1.91238],
];

/// Ascending eigenvalues of a real symmetric matrix via nalgebra.
pub fn reference_eigenvalues(m: &[[f64; 3]; 3]) -> Vec<f64> {
    let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
    let mut e: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub struct Case {
    pub matrix: [[f64; 3]; 3],
    pub trial: TrialState,
    pub target: f64,
}

fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let u = Uniform::new(-1.0, 1.0);
    loop {
        let mut q = [[0.0; 3]; 3];
        for col in 0..3 {
            let mut v = [u.sample(rng), u.sample(rng), u.sample(rng)];
            for prev in 0..col {
                let d: f64 = (0..3).map(|i| v[i] * q[i][prev]).sum();
                (0..3).for_each(|i| v[i] -= d * q[i][prev]);
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-3 {
                break;
            }
            (0..3).for_each(|i| q[i][col] = v[i] / n);
            if col == 2 {
                return q;
            }
        }
    }
}

/// A random traceless symmetric 3×3 matrix built from a chosen spectrum,
/// with a trial state overlapping the eigenvector of `target` by at least
/// 0.6 in probability.
pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let e = Uniform::new(-6.5f64, 6.5);
    let (lambda, t) = loop {
        let (a, b) = (e.sample(rng), e.sample(rng));
        let l: [f64; 3] = [a, b, -a - b];
        if l[2].abs() >= 7.0 {
            continue;
        }
        let t = rng.gen_range(0..3);
        let gap = (0..3)
            .filter(|&i| i != t)
            .map(|i| (l[i] - l[t]).abs())
            .fold(f64::INFINITY, f64::min);
        if l[t] < -0.1 && gap > 0.8 {
            break (l, t);
        }
    };
    let q = random_rotation(rng);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| q[i][k] * lambda[k] * q[j][k]).sum();
        }
    }
    for i in 0..3 {
        for j in 0..i {
            m[i][j] = m[j][i];
        }
    }
    let w: f64 = rng.gen_range(0.6..1.0);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let others: Vec<usize> = (0..3).filter(|&i| i != t).collect();
    let mut coeff = [0.0; 3];
    coeff[t] = w.sqrt();
    coeff[others[0]] = (1.0 - w).sqrt() * theta.cos();
    coeff[others[1]] = (1.0 - w).sqrt() * theta.sin();
    let mut amp = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        amp[i] = Complex64::new((0..3).map(|k| q[i][k] * coeff[k]).sum(), 0.0);
    }
    let norm = amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amp.iter_mut().for_each(|a| *a /= norm);
    Case {
        matrix: m,
        trial: TrialState::from_vector("random", amp).unwrap(),
        target: lambda[t],
    }
}
