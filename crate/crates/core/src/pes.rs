//! Potential-energy surfaces of HeH⁺ over the bond length and the
//! equilibrium analysis of the ground surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electronic::{heh_hamiltonian, BasisSet, ElectronicError, FciHamiltonian};
use crate::ipea::{estimate_energy_with, IpeaConfig, IpeaError};
use crate::nv::TrialState;

/// Default dissociation reference for the binding energy (pm).
pub const DEFAULT_REFERENCE_PM: f64 = 1000.0;
/// Bracket tolerance of the golden-section refinement (pm).
const GOLDEN_TOLERANCE_PM: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PesError {
    #[error("bond length must be positive and finite, got {0} pm")]
    InvalidBondLength(f64),
    #[error("at least {needed} points are required, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no interior minimum in the sampled range (lowest point at {0} pm)")]
    NoInteriorMinimum(f64),
    #[error("eigenvalue ordering violated at {r_pm} pm: {energies:?}")]
    OrderingViolation { r_pm: f64, energies: [f64; 3] },
    #[error(transparent)]
    Electronic(#[from] ElectronicError),
    #[error(transparent)]
    Ipea(#[from] IpeaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMethod {
    Ipea,
    DirectEig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub method: ScanMethod,
    pub iterations: u32,
    pub polarization: f64,
    pub ipea: IpeaConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            method: ScanMethod::Ipea,
            iterations: 5,
            polarization: 1.0,
            ipea: IpeaConfig::default(),
        }
    }
}

/// Energies in Hartree. A point whose phase estimation failed carries NaN
/// energies and the failure in `flag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub bond_length_pm: f64,
    pub ground: f64,
    pub excited1: f64,
    /// `trace − ground − excited1`.
    pub excited2: f64,
    pub trace: f64,
    /// Half-width of the phase-estimation interval (0 for direct
    /// diagonalization).
    pub uncertainty: f64,
    pub flag: Option<String>,
}

impl SurfacePoint {
    pub fn is_flagged(&self) -> bool {
        self.flag.is_some()
    }
}

fn check_bond_length(r: f64) -> Result<(), PesError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(PesError::InvalidBondLength(r))
    }
}

fn check_ordering(r_pm: f64, energies: [f64; 3], slack: f64) -> Result<(), PesError> {
    if energies[0] <= energies[1] + slack && energies[1] <= energies[2] + slack {
        Ok(())
    } else {
        Err(PesError::OrderingViolation { r_pm, energies })
    }
}

pub fn surface_point_from(h: &FciHamiltonian, config: &ScanConfig) -> Result<SurfacePoint, PesError> {
    let r = h.bond_length_pm;
    let trace = h.trace();
    let (ground, excited1, uncertainty) = match config.method {
        ScanMethod::DirectEig => {
            let e = h.eigenvalues();
            (e[0], e[1], 0.0)
        }
        ScanMethod::Ipea => {
            let run = |trial: TrialState| {
                estimate_energy_with(h, &trial, config.iterations, config.polarization, &config.ipea)
            };
            match (run(TrialState::plus()), run(TrialState::minus())) {
                (Ok(g), Ok(e)) => (g.energy, e.energy, g.uncertainty.max(e.uncertainty)),
                (Err(err), _) | (_, Err(err)) => {
                    return Ok(SurfacePoint {
                        bond_length_pm: r,
                        ground: f64::NAN,
                        excited1: f64::NAN,
                        excited2: f64::NAN,
                        trace,
                        uncertainty: f64::NAN,
                        flag: Some(err.to_string()),
                    })
                }
            }
        }
    };
    let excited2 = trace - ground - excited1;
    check_ordering(r, [ground, excited1, excited2], 2.0 * uncertainty + 1e-12)?;
    Ok(SurfacePoint {
        bond_length_pm: r,
        ground,
        excited1,
        excited2,
        trace,
        uncertainty,
        flag: None,
    })
}

pub fn surface_point(basis: &BasisSet, r_pm: f64, config: &ScanConfig) -> Result<SurfacePoint, PesError> {
    check_bond_length(r_pm)?;
    let (h, _) = heh_hamiltonian(basis, r_pm)?;
    surface_point_from(&h, config)
}

/// Evaluates every bond length in parallel; results keep the input order.
pub fn scan(basis: &BasisSet, r_values: &[f64], config: &ScanConfig) -> Result<Vec<SurfacePoint>, PesError> {
    if let Some(&bad) = r_values.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(PesError::InvalidBondLength(bad));
    }
    r_values.par_iter().map(|&r| surface_point(basis, r, config)).collect()
}

/// `rmin, rmin + step, …` up to `rmax` inclusive (to within `step/1000`).
pub fn grid(rmin: f64, rmax: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || rmax < rmin {
        return vec![rmin];
    }
    let n = ((rmax - rmin) / step + 1e-3).floor() as usize;
    (0..=n).map(|i| rmin + i as f64 * step).collect()
}

/// Ground energy by direct diagonalization, for refinement and reference
/// evaluations.
pub fn direct_ground_energy(basis: &BasisSet, r_pm: f64) -> Result<f64, PesError> {
    check_bond_length(r_pm)?;
    Ok(heh_hamiltonian(basis, r_pm)?.0.eigenvalues()[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    /// Golden-section search around the fitted vertex with fresh
    /// evaluations.
    pub refine: bool,
    pub reference_pm: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            refine: true,
            reference_pm: DEFAULT_REFERENCE_PM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub r_eq_pm: f64,
    pub e_min: f64,
    pub binding_energy: f64,
    pub reference_pm: f64,
    pub e_reference: f64,
    /// `E(R) ≈ a R² + b R + c` through the grid minimum and its neighbours.
    pub quadratic: [f64; 3],
    pub refined: bool,
}

/// Coefficients of the parabola through three points.
pub fn parabola_through(p: [(f64, f64); 3]) -> [f64; 3] {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    let b = d01 - a * (x0 + x1);
    let c = y0 - a * x0 * x0 - b * x0;
    [a, b, c]
}

fn golden_minimum(mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> Result<f64, PesError>) -> Result<(f64, f64), PesError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while hi - lo > GOLDEN_TOLERANCE_PM {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Locates the minimum of the ground surface. `evaluate` supplies fresh
/// ground energies for the refinement and for the dissociation reference.
pub fn find_equilibrium(
    points: &[SurfacePoint],
    options: &EquilibriumOptions,
    evaluate: &dyn Fn(f64) -> Result<f64, PesError>,
) -> Result<EquilibriumReport, PesError> {
    let mut usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.is_flagged() && p.ground.is_finite())
        .map(|p| (p.bond_length_pm, p.ground))
        .collect();
    if usable.len() < 5 {
        return Err(PesError::TooFewPoints {
            needed: 5,
            got: usable.len(),
        });
    }
    usable.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (i, &(r_low, e_low)) = usable
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    if i == 0 || i == usable.len() - 1 {
        return Err(PesError::NoInteriorMinimum(r_low));
    }
    let triple = [usable[i - 1], usable[i], usable[i + 1]];
    let quadratic = parabola_through(triple);
    let [a, b, c] = quadratic;
    let (lo, hi) = (triple[0].0, triple[2].0);
    let (mut r_eq, mut e_min) = if a > 0.0 {
        let v = (-b / (2.0 * a)).clamp(lo, hi);
        (v, a * v * v + b * v + c)
    } else {
        (r_low, e_low)
    };
    if options.refine {
        (r_eq, e_min) = golden_minimum(lo, hi, evaluate)?;
    }
    if e_min > e_low {
        (r_eq, e_min) = (r_low, e_low);
    }
    let e_reference = evaluate(options.reference_pm)?;
    Ok(EquilibriumReport {
        r_eq_pm: r_eq,
        e_min,
        binding_energy: e_reference - e_min,
        reference_pm: options.reference_pm,
        e_reference,
        quadratic,
        refined: options.refine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct() -> ScanConfig {
        ScanConfig {
            method: ScanMethod::DirectEig,
            ..ScanConfig::default()
        }
    }

    fn point(r: f64, e: f64) -> SurfacePoint {
        SurfacePoint {
            bond_length_pm: r,
            ground: e,
            excited1: e + 1.0,
            excited2: e + 2.0,
            trace: 3.0 * e + 3.0,
            uncertainty: 0.0,
            flag: None,
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(grid(70.0, 130.0, 2.5).len(), 25);
        assert_eq!(grid(70.0, 130.0, 1.0).len(), 61);
        assert_eq!(grid(5.0, 5.0, 1.0), vec![5.0]);
    }

    #[test]
    fn direct_point_at_90() {
        let p = surface_point(&BasisSet::sto3g(), 90.0, &direct()).unwrap();
        assert!((p.ground - -2.86262).abs() < 5e-5);
        assert!((p.ground + p.excited1 + p.excited2 - p.trace).abs() < 1e-12);
    }

    #[test]
    fn ordering_holds_50_to_300() {
        let rs = grid(50.0, 300.0, 5.0);
        let pts = scan(&BasisSet::sto3g(), &rs, &direct()).unwrap();
        for p in &pts {
            assert!(p.ground < p.excited1 && p.excited1 < p.excited2, "{p:?}");
        }
    }

    #[test]
    fn rejects_non_positive_bond_length() {
        assert_eq!(
            scan(&BasisSet::sto3g(), &[90.0, 0.0], &direct()),
            Err(PesError::InvalidBondLength(0.0))
        );
    }

    #[test]
    fn ipea_agrees_with_direct() {
        let basis = BasisSet::sto3g();
        let rs = [75.0, 90.0, 105.0, 120.0, 130.0];
        let a = scan(&basis, &rs, &ScanConfig::default()).unwrap();
        let b = scan(&basis, &rs, &direct()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.flag.is_none(), "{x:?}");
            assert!((x.ground - y.ground).abs() <= x.uncertainty, "{x:?} {y:?}");
            assert!((x.excited1 - y.excited1).abs() <= x.uncertainty);
            assert!((x.excited2 - y.excited2).abs() <= 2.0 * x.uncertainty);
            assert!((x.ground + x.excited1 + x.excited2 - x.trace).abs() < 1e-10);
        }
    }

    #[test]
    fn scan_independent_of_order() {
        let basis = BasisSet::sto3g();
        let rs = grid(80.0, 100.0, 5.0);
        let mut rev = rs.clone();
        rev.reverse();
        let a = scan(&basis, &rs, &ScanConfig::default()).unwrap();
        let mut b = scan(&basis, &rev, &ScanConfig::default()).unwrap();
        b.reverse();
        let sequential: Vec<SurfacePoint> = rs
            .iter()
            .map(|&r| surface_point(&basis, r, &ScanConfig::default()).unwrap())
            .collect();
        assert_eq!(a, b);
        assert_eq!(a, sequential);
    }

    #[test]
    fn exact_parabola_vertex() {
        let f = |r: f64| 0.002 * (r - 91.37).powi(2) - 2.5;
        let pts: Vec<_> = grid(80.0, 100.0, 2.0).into_iter().map(|r| point(r, f(r))).collect();
        let rep = find_equilibrium(
            &pts,
            &EquilibriumOptions {
                refine: false,
                reference_pm: 200.0,
            },
            &|r| Ok(f(r)),
        )
        .unwrap();
        assert!((rep.r_eq_pm - 91.37).abs() < 1e-10);
        assert!((rep.e_min + 2.5).abs() < 1e-10);
        assert!((rep.binding_energy - f(200.0) - 2.5).abs() < 1e-10);
    }

    #[test]
    fn golden_refinement_on_parabola() {
        let f = |r: f64| 0.002 * (r - 91.37).powi(2) - 2.5;
        let pts: Vec<_> = grid(80.0, 100.0, 2.0).into_iter().map(|r| point(r, f(r))).collect();
        let rep = find_equilibrium(&pts, &EquilibriumOptions::default(), &|r| Ok(f(r))).unwrap();
        assert!((rep.r_eq_pm - 91.37).abs() < 1e-3);
        assert!(pts.iter().all(|p| rep.e_min <= p.ground));
    }

    #[test]
    fn boundary_minimum_rejected() {
        let pts: Vec<_> = (0..6).map(|i| point(80.0 + i as f64, -(i as f64))).collect();
        assert!(matches!(
            find_equilibrium(&pts, &EquilibriumOptions::default(), &|_| Ok(0.0)),
            Err(PesError::NoInteriorMinimum(_))
        ));
        assert!(matches!(
            find_equilibrium(&pts[..3], &EquilibriumOptions::default(), &|_| Ok(0.0)),
            Err(PesError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn ground_surface_is_smooth() {
        let rs = grid(50.0, 300.0, 1.0);
        let pts = scan(&BasisSet::sto3g(), &rs, &direct()).unwrap();
        let second: Vec<f64> = pts
            .windows(3)
            .map(|w| w[0].ground - 2.0 * w[1].ground + w[2].ground)
            .collect();
        let changes = second.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
        assert!(changes <= 1, "{changes} curvature sign changes");
    }
}
