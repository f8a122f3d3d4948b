//! Classical simulation of iterative phase estimation of the HeH⁺ molecule
//! on the two-qutrit spin register of a nitrogen-vacancy centre.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: small dense complex linear algebra.
//! - [`electronic`]: STO-3G integrals, Hartree-Fock and the 3×3 singlet
//!   Hamiltonian.
//! - [`nv`]: spin-1 operators, the NV ground-state Hamiltonian and register
//!   initialization.
//! - [`ipea`]: controlled evolution, probe-signal sampling, Fourier readout
//!   and the decimal iterative phase estimation.
//! - [`grape`]: gradient-ascent synthesis of the controlled gate.
//! - [`pes`]: potential-energy-surface scans and equilibrium analysis.
//! - [`symmetry`]: cospectral partners for bipartite off-diagonal support.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod electronic;
pub mod grape;
pub mod ipea;
pub mod numerics;
pub mod nv;
pub mod pes;
pub mod symmetry;
