//! Phase-estimation results against the Hermitian eigensolver on random
//! traceless symmetric matrices.

use heh_nv::ipea::{estimate_shifted, IpeaConfig, ShiftedHamiltonian};
use heh_nv::numerics::hermitian_eig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::random_case;

#[test]
fn eight_iterations_match_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1FEA);
    let config = IpeaConfig::default();
    let mut failures = Vec::new();
    for n in 0..100 {
        let case = random_case(&mut rng);
        let h = ShiftedHamiltonian::from_parts(case.matrix, 0.0, 0.0).unwrap();
        let eig = hermitian_eig(&h.to_complex()).unwrap();
        let oracle = eig
            .eigenvalues
            .iter()
            .cloned()
            .min_by(|a, b| (a - case.target).abs().total_cmp(&(b - case.target).abs()))
            .unwrap();
        match estimate_shifted(&h, &case.trial, 8, 1.0, &config) {
            Ok(est) if (est.energy - oracle).abs() < 1e-7 => {}
            Ok(est) => failures.push(format!("{n}: {} vs {oracle} digits {:?}", est.energy, est.digits)),
            Err(e) => failures.push(format!("{n}: {e}")),
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
