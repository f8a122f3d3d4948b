//! Controlled evolution, probe-signal sampling, Fourier readout and the
//! decimal iterative phase estimation.
//!
//! Energies are resolved on nested intervals: each iteration demodulates
//! the probe signal by the current interval midpoint, locates the residual
//! peak and keeps the one of ten equal segments that contains it. The
//! reported digit is the segment index counted from the edge nearer zero,
//! so an interval inside `(−10, 0)` reproduces the decimal digits of the
//! magnitude.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electronic::FciHamiltonian;
use crate::numerics::{hermitian_eig, ComplexMatrix, EigenDecomposition, NumericsError};
use crate::nv::{initialize, InitializationModel, NvError, Projection, RegisterState, TrialState};

/// Shortest probe record accepted by the Fourier readout.
pub const MIN_SIGNAL_LENGTH: usize = 16;
/// Largest iteration index; `10^(k−1)` must stay exactly representable.
pub const MAX_ITERATION: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpeaError {
    #[error("iteration index must be in 1..={MAX_ITERATION}, got {0}")]
    InvalidIteration(u32),
    #[error("probe signal needs at least {MIN_SIGNAL_LENGTH} samples, got {0}")]
    SignalTooShort(usize),
    #[error("probe signal is empty")]
    EmptySignal,
    #[error("sample spacing {spacing:e} violates the sampling bound (must be below {bound:e})")]
    SamplingBound { spacing: f64, bound: f64 },
    #[error("iteration {iteration}: trial state has negligible overlap in this window (peak weight {weight:.3})")]
    NegligibleOverlap { iteration: u32, weight: f64 },
    #[error(
        "iteration {iteration}: peak lies {distance:.2e} segment widths from the boundary at {boundary}; \
         retry with denser sampling (double the sample count)"
    )]
    BoundaryTie {
        iteration: u32,
        boundary: f64,
        distance: f64,
    },
    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),
    #[error(transparent)]
    Register(#[from] NvError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Traceless part of a molecular Hamiltonian and the removed offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedHamiltonian {
    pub matrix: [[f64; 3]; 3],
    /// `tr(H)/3` in Hartree.
    pub offset: f64,
    pub bond_length_pm: f64,
}

impl ShiftedHamiltonian {
    /// A matrix to be phase-estimated as given, with an explicit offset to
    /// add back afterwards. No trace condition is imposed.
    pub fn from_parts(matrix: [[f64; 3]; 3], offset: f64, bond_length_pm: f64) -> Result<Self, IpeaError> {
        for i in 0..3 {
            for j in 0..3 {
                if !matrix[i][j].is_finite() || matrix[i][j] != matrix[j][i] {
                    return Err(IpeaError::InvalidHamiltonian(format!(
                        "entry ({i},{j}) is not finite and symmetric"
                    )));
                }
            }
        }
        if !offset.is_finite() {
            return Err(IpeaError::InvalidHamiltonian("offset is not finite".into()));
        }
        Ok(Self {
            matrix,
            offset,
            bond_length_pm,
        })
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&self.matrix)
    }

    pub fn eigen(&self) -> EigenDecomposition {
        hermitian_eig(&self.to_complex()).expect("shifted Hamiltonian is symmetric")
    }

    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1] + self.matrix[2][2]
    }
}

pub fn shift_hamiltonian(h: &FciHamiltonian) -> ShiftedHamiltonian {
    let offset = h.trace() / 3.0;
    let mut matrix = h.matrix;
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] -= offset;
    }
    ShiftedHamiltonian {
        matrix,
        offset,
        bond_length_pm: h.bond_length_pm,
    }
}

/// Embeds an electron-space unitary as the `m_I = −1` branch of the
/// controlled gate; the `m_I = 0` and `+1` branches are the identity.
pub fn controlled_from_branch(branch: &ComplexMatrix) -> ComplexMatrix {
    let minus = Projection::Minus.index();
    ComplexMatrix::from_fn(9, 9, |r, c| {
        let (er, nr, ec, nc) = (r / 3, r % 3, c / 3, c % 3);
        if nr != nc {
            Complex64::new(0.0, 0.0)
        } else if nr == minus {
            branch[(er, ec)]
        } else if er == ec {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `U_c = |0⟩⟨0|_N ⊗ I + |−1⟩⟨−1|_N ⊗ e^{−iH't} + |+1⟩⟨+1|_N ⊗ I`.
pub fn controlled_unitary(h: &ShiftedHamiltonian, t: f64) -> ComplexMatrix {
    let eig = h.eigen();
    controlled_from_branch(&eig.map_eigenvalues(|l| Complex64::from_polar(1.0, -l * t)))
}

fn conjugate(u: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    &(u * rho) * &u.adjoint()
}

pub fn controlled_evolution(h: &ShiftedHamiltonian, t: f64, state: &RegisterState) -> RegisterState {
    if t == 0.0 {
        return state.clone();
    }
    RegisterState::from_trusted(conjugate(&controlled_unitary(h, t), state.density()))
}

/// Probe record `s_j = 2 ρ_N[−1, 0]` after evolving for `j·t_s·p`,
/// `j = 1..=L`, optionally demodulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSignal {
    pub samples: Vec<Complex64>,
    /// `t_s` in ħ/Hartree.
    pub spacing: f64,
    pub power: u64,
    pub iteration: u32,
    /// Energy the record was demodulated by (Hartree).
    pub center: f64,
}

impl ProbeSignal {
    /// The in-phase (x) and quadrature (y) readouts, `s_j = x_j + i·y_j`.
    pub fn quadratures(&self) -> (Vec<f64>, Vec<f64>) {
        self.samples.iter().map(|s| (s.re, s.im)).unzip()
    }

    /// Effective time step `t_s·p`.
    pub fn step(&self) -> f64 {
        self.spacing * self.power as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub spacing: f64,
    pub length: usize,
    pub power: u64,
    pub iteration: u32,
    /// Demodulation energy.
    pub center: f64,
    /// Largest residual `|E − center|` that must be resolved without
    /// aliasing. `None` uses the full spectrum of `H'`.
    pub bandwidth: Option<f64>,
}

impl SamplingPlan {
    pub fn new(spacing: f64, length: usize, power: u64) -> Self {
        Self {
            spacing,
            length,
            power,
            iteration: 1,
            center: 0.0,
            bandwidth: None,
        }
    }
}

pub fn sample_signal(
    h: &ShiftedHamiltonian,
    trial: &TrialState,
    polarization: f64,
    plan: &SamplingPlan,
) -> Result<ProbeSignal, IpeaError> {
    if plan.length < MIN_SIGNAL_LENGTH {
        return Err(IpeaError::SignalTooShort(plan.length));
    }
    let eig = h.eigen();
    let p = plan.power as f64;
    let bandwidth = plan.bandwidth.unwrap_or_else(|| {
        eig.eigenvalues
            .iter()
            .map(|l| (l - plan.center).abs())
            .fold(0.0, f64::max)
    });
    let bound = if bandwidth > 0.0 {
        PI / (p * bandwidth)
    } else {
        f64::INFINITY
    };
    if !(plan.spacing > 0.0 && plan.spacing < bound) {
        return Err(IpeaError::SamplingBound {
            spacing: plan.spacing,
            bound,
        });
    }
    let state = initialize(&InitializationModel {
        polarization,
        trial: trial.clone(),
    })?;
    let samples = (1..=plan.length)
        .map(|j| {
            let t = j as f64 * plan.spacing * p;
            let branch = eig.map_eigenvalues(|l| Complex64::from_polar(1.0, -l * t));
            let evolved = RegisterState::from_trusted(conjugate(&controlled_from_branch(&branch), state.density()));
            evolved.probe_coherence() * 2.0 * Complex64::from_polar(1.0, plan.center * t)
        })
        .collect();
    Ok(ProbeSignal {
        samples,
        spacing: plan.spacing,
        power: plan.power,
        iteration: plan.iteration,
        center: plan.center,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// Hartree. For a raw record this is the energy; after demodulation it
    /// is the residual about the record's center.
    pub frequency: f64,
    /// Amplitude of the tone; a unit-amplitude tone reports 1.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    /// Zero-padding factor of the FFT.
    pub padding: usize,
    /// Peaks below this fraction of the largest magnitude are dropped.
    pub threshold: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            padding: 16,
            threshold: 0.03,
        }
    }
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| (PI * (j as f64 + 0.5) / len as f64).sin().powi(2))
        .collect()
}

/// Windowed DTFT `X(x) = Σ_j w_j s_j e^{−2πi x j / m}` at fractional bin
/// `x`, with its derivative in `x`.
fn dtft(windowed: &[Complex64], x: f64, m: usize) -> (Complex64, Complex64) {
    let k = -2.0 * PI / m as f64;
    let step = Complex64::from_polar(1.0, k * x);
    let mut phase = Complex64::new(1.0, 0.0);
    let (mut value, mut slope) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (j, s) in windowed.iter().enumerate() {
        let term = s * phase;
        value += term;
        slope += term * Complex64::new(0.0, k * j as f64);
        phase *= step;
    }
    (value, slope)
}

/// Maximizes `|X|` on `[a, b]` by bisection on `d|X|²/dx`.
fn polish_peak(windowed: &[Complex64], m: usize, mut a: f64, mut b: f64) -> f64 {
    let ascent = |x: f64| {
        let (v, d) = dtft(windowed, x, m);
        (v.conj() * d).re
    };
    if ascent(a) <= 0.0 || ascent(b) >= 0.0 {
        return 0.5 * (a + b);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if ascent(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

pub fn fourier_spectrum(signal: &ProbeSignal) -> Result<Vec<SpectralPeak>, IpeaError> {
    fourier_spectrum_with(signal, &SpectrumConfig::default())
}

/// Hann-windowed, zero-padded FFT of the complex record. Peaks are local
/// maxima of the padded magnitude, placed by parabolic interpolation of
/// the log magnitude and then polished on the continuous transform.
/// Returned in descending weight.
pub fn fourier_spectrum_with(signal: &ProbeSignal, config: &SpectrumConfig) -> Result<Vec<SpectralPeak>, IpeaError> {
    let len = signal.samples.len();
    if len == 0 {
        return Err(IpeaError::EmptySignal);
    }
    let window = hann(len);
    let norm: f64 = window.iter().sum();
    let windowed: Vec<Complex64> = signal.samples.iter().zip(&window).map(|(s, w)| s * w).collect();

    let m = len * config.padding.max(1);
    let mut buffer = vec![Complex64::new(0.0, 0.0); m];
    buffer[..len].copy_from_slice(&windowed);
    FftPlanner::new().plan_fft_forward(m).process(&mut buffer);
    let mags: Vec<f64> = buffer.iter().map(|x| x.norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if !(max > f64::MIN_POSITIVE) {
        return Ok(Vec::new());
    }

    let step = signal.step();
    let mut peaks = Vec::new();
    for i in 0..m {
        let (prev, cur, next) = (mags[(i + m - 1) % m], mags[i], mags[(i + 1) % m]);
        if cur < config.threshold * max || cur <= prev || cur < next {
            continue;
        }
        let (a, b, c) = (prev.ln(), cur.ln(), next.ln());
        let curvature = a - 2.0 * b + c;
        let delta = if curvature < 0.0 {
            (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let coarse = i as f64 + delta;
        let x = polish_peak(&windowed, m, coarse - 1.0, coarse + 1.0);
        let weight = dtft(&windowed, x, m).0.norm() / norm;
        let x = x.rem_euclid(m as f64);
        let signed = if x > m as f64 / 2.0 { x - m as f64 } else { x };
        peaks.push(SpectralPeak {
            frequency: -2.0 * PI * signed / (m as f64 * step),
            weight,
        });
    }
    peaks.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    Ok(peaks)
}

/// Most tones carried into the least-squares refinement.
const MAX_FIT_TONES: usize = 6;
/// Residual tones weaker than this are not added to the fit.
const RESIDUAL_TONE_FLOOR: f64 = 1e-3;

fn tone_basis(theta: &[f64], len: usize) -> Vec<Vec<Complex64>> {
    theta
        .iter()
        .map(|&t| (1..=len).map(|j| Complex64::from_polar(1.0, -t * j as f64)).collect())
        .collect()
}

/// Best complex amplitudes for fixed tone phases per sample.
fn fit_amplitudes(samples: &[Complex64], theta: &[f64]) -> Option<Vec<Complex64>> {
    let basis = tone_basis(theta, samples.len());
    let k = theta.len();
    let gram = DMatrix::from_fn(k, k, |a, b| {
        basis[a]
            .iter()
            .zip(&basis[b])
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
    });
    let rhs = DVector::from_fn(k, |a, _| {
        basis[a]
            .iter()
            .zip(samples)
            .map(|(x, s)| x.conj() * s)
            .sum::<Complex64>()
    });
    let amps = gram.lu().solve(&rhs)?;
    amps.iter()
        .all(|a| a.re.is_finite() && a.im.is_finite())
        .then(|| amps.iter().copied().collect())
}

fn misfit(samples: &[Complex64], theta: &[f64], amps: &[Complex64]) -> f64 {
    let basis = tone_basis(theta, samples.len());
    samples
        .iter()
        .enumerate()
        .map(|(j, s)| (s - amps.iter().zip(&basis).map(|(a, e)| a * e[j]).sum::<Complex64>()).norm_sqr())
        .sum()
}

/// Levenberg-Marquardt over tone phases per sample and complex amplitudes.
fn fit_tones(samples: &[Complex64], mut theta: Vec<f64>, mut amps: Vec<Complex64>) -> (Vec<f64>, Vec<Complex64>, f64) {
    let n = samples.len();
    let k = theta.len();
    let dim = 3 * k;
    let mut cost = misfit(samples, &theta, &amps);
    let mut damping = 1e-3;
    for _ in 0..200 {
        let basis = tone_basis(&theta, n);
        let mut jtj = DMatrix::<f64>::zeros(dim, dim);
        let mut jtr = DVector::<f64>::zeros(dim);
        let mut row = vec![Complex64::new(0.0, 0.0); dim];
        for j in 0..n {
            let mut model = Complex64::new(0.0, 0.0);
            for t in 0..k {
                let e = basis[t][j];
                model += amps[t] * e;
                row[t] = Complex64::new(0.0, -((j + 1) as f64)) * amps[t] * e;
                row[k + 2 * t] = e;
                row[k + 2 * t + 1] = Complex64::new(0.0, 1.0) * e;
            }
            let r = samples[j] - model;
            for a in 0..dim {
                jtr[a] += row[a].re * r.re + row[a].im * r.im;
                for b in a..dim {
                    jtj[(a, b)] += row[a].re * row[b].re + row[a].im * row[b].im;
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        let mut improved = false;
        while damping < 1e12 {
            let mut lhs = jtj.clone();
            for a in 0..dim {
                lhs[(a, a)] += damping * jtj[(a, a)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = lhs.lu().solve(&jtr) else {
                damping *= 10.0;
                continue;
            };
            let trial_theta: Vec<f64> = (0..k).map(|t| theta[t] + step[t]).collect();
            let trial_amps: Vec<Complex64> = (0..k)
                .map(|t| amps[t] + Complex64::new(step[k + 2 * t], step[k + 2 * t + 1]))
                .collect();
            let trial_cost = misfit(samples, &trial_theta, &trial_amps);
            if trial_cost < cost {
                let gain = cost - trial_cost;
                theta = trial_theta;
                amps = trial_amps;
                cost = trial_cost;
                damping = (damping / 10.0).max(1e-12);
                improved = gain > 1e-15 * cost.max(f64::MIN_POSITIVE);
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (theta, amps, cost)
}

/// Strongest tone left in the residual of a fit, as (phase per sample,
/// amplitude) and its weight.
fn residual_tone(samples: &[Complex64], theta: &[f64], amps: &[Complex64], padding: usize) -> Option<(f64, f64)> {
    let basis = tone_basis(theta, samples.len());
    let residual: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, s)| s - amps.iter().zip(&basis).map(|(a, e)| a * e[j]).sum::<Complex64>())
        .collect();
    let probe = ProbeSignal {
        samples: residual,
        spacing: 1.0,
        power: 1,
        iteration: 1,
        center: 0.0,
    };
    let config = SpectrumConfig {
        padding,
        threshold: 0.5,
    };
    let peak = fourier_spectrum_with(&probe, &config).ok()?.into_iter().next()?;
    Some((peak.frequency, peak.weight))
}

/// Refines the Fourier peaks by fitting `s_j = Σ_k A_k e^{−iω_k τ j}` to
/// the unwindowed record. Tones hidden under a stronger peak or below the
/// detection threshold are picked up from the fit residual and added
/// before refitting. Removes the mutual leakage bias of nearby or aliased
/// tones; falls back to the Fourier estimates if the fit does not improve
/// the misfit.
pub fn refine_tones(signal: &ProbeSignal, peaks: &[SpectralPeak]) -> Vec<SpectralPeak> {
    let samples = &signal.samples;
    let tau = signal.step();
    let seeds = &peaks[..peaks.len().min(MAX_FIT_TONES)];
    if seeds.is_empty() || samples.len() < 3 * MAX_FIT_TONES {
        return peaks.to_vec();
    }
    let mut theta: Vec<f64> = seeds.iter().map(|pk| pk.frequency * tau).collect();
    let Some(amps) = fit_amplitudes(samples, &theta) else {
        return peaks.to_vec();
    };
    let initial = misfit(samples, &theta, &amps);
    let (mut fit_theta, mut fit_amps, mut cost) = fit_tones(samples, theta.clone(), amps);
    while fit_theta.len() < MAX_FIT_TONES {
        match residual_tone(samples, &fit_theta, &fit_amps, 16) {
            Some((freq, weight)) if weight > RESIDUAL_TONE_FLOOR => {
                theta = fit_theta.clone();
                theta.push(freq);
            }
            _ => break,
        }
        let Some(amps) = fit_amplitudes(samples, &theta) else {
            break;
        };
        let (t, a, c) = fit_tones(samples, theta.clone(), amps);
        if !(c < cost) {
            break;
        }
        (fit_theta, fit_amps, cost) = (t, a, c);
    }
    if !(cost < initial) || fit_theta.iter().any(|t| !t.is_finite()) {
        return peaks.to_vec();
    }
    let mut fitted: Vec<SpectralPeak> = fit_theta
        .iter()
        .zip(&fit_amps)
        .map(|(&t, a)| SpectralPeak {
            frequency: ((t + PI).rem_euclid(2.0 * PI) - PI) / tau,
            weight: a.norm(),
        })
        .collect();
    fitted.extend_from_slice(&peaks[seeds.len()..]);
    fitted.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    fitted
}

/// An interval reached after `depth` decimal refinements of an initial
/// interval of width `base_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub base_width: f64,
    pub depth: u32,
}

impl Interval {
    pub fn new(low: f64, high: f64) -> Self {
        Self {
            low,
            base_width: high - low,
            depth: 0,
        }
    }

    /// `base_width · 10^{−depth}`.
    pub fn width(&self) -> f64 {
        self.base_width / 10f64.powi(self.depth as i32)
    }

    pub fn high(&self) -> f64 {
        self.low + self.width()
    }

    pub fn midpoint(&self) -> f64 {
        self.low + 0.5 * self.width()
    }

    /// The `index`-th of ten segments, counted from the low edge.
    pub fn segment(&self, index: usize) -> Interval {
        let seg = self.width() / 10.0;
        Interval {
            low: self.low + index as f64 * seg,
            base_width: self.base_width,
            depth: self.depth + 1,
        }
    }

    /// Digit of segment `index` counted from the edge nearer zero.
    pub fn digit(&self, index: usize) -> u8 {
        if self.high() <= 0.0 {
            9 - index as u8
        } else {
            index as u8
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieHandling {
    /// Report a near-boundary peak as [`IpeaError::BoundaryTie`].
    Reject,
    /// Pick the side the peak lies on; a peak on the boundary to within
    /// numerical precision goes to the segment farther from zero.
    Resolve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpeaConfig {
    /// Samples per iteration (L).
    pub samples: usize,
    pub spectrum: SpectrumConfig,
    /// `t_s = spacing_factor · π / (p·W)`.
    pub spacing_factor: f64,
    /// First interval, offset-subtracted Hartree.
    pub initial_interval: (f64, f64),
    /// Peaks up to this fraction of `W` beyond the interval are accepted
    /// and clamped to the edge segment.
    pub window_margin: f64,
    pub min_weight: f64,
    /// Tie band around internal boundaries, in segment widths.
    pub tie_tolerance: f64,
    /// Below this distance (segment widths) a tie is settled by convention.
    pub exact_tie: f64,
    /// Sample-count doublings tried on a tie before resolving it.
    pub tie_retries: u32,
}

impl Default for IpeaConfig {
    fn default() -> Self {
        Self {
            samples: 128,
            spectrum: SpectrumConfig::default(),
            spacing_factor: 0.8,
            initial_interval: (-10.0, 0.0),
            window_margin: 0.1,
            min_weight: 0.05,
            tie_tolerance: 1e-3,
            exact_tie: 1e-7,
            tie_retries: 2,
        }
    }
}

impl IpeaConfig {
    pub fn initial(&self) -> Interval {
        Interval::new(self.initial_interval.0, self.initial_interval.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: u32,
    pub power: u64,
    pub digit: u8,
    /// Segment index from the low edge.
    pub segment: usize,
    pub previous: Interval,
    pub interval: Interval,
    /// Located peak, as an absolute offset-subtracted energy.
    pub peak: SpectralPeak,
    pub samples: usize,
    pub spacing: f64,
    /// Detected peaks with frequencies shifted back by the demodulation
    /// center; tones from other eigenstates appear aliased for `k > 1`.
    pub spectrum: Vec<SpectralPeak>,
}

fn power_of_ten(k: u32) -> Result<u64, IpeaError> {
    if k == 0 || k > MAX_ITERATION {
        return Err(IpeaError::InvalidIteration(k));
    }
    Ok(10u64.pow(k - 1))
}

pub fn ipea_iterate(
    h: &ShiftedHamiltonian,
    trial: &TrialState,
    polarization: f64,
    previous: Interval,
    k: u32,
    config: &IpeaConfig,
    ties: TieHandling,
) -> Result<IterationResult, IpeaError> {
    let power = power_of_ten(k)?;
    let width = previous.width();
    let center = previous.midpoint();
    let margin = config.window_margin * width;
    let spacing = config.spacing_factor * PI / (power as f64 * width);
    let plan = SamplingPlan {
        spacing,
        length: config.samples,
        power,
        iteration: k,
        center,
        bandwidth: Some(0.5 * width + margin),
    };
    let signal = sample_signal(h, trial, polarization, &plan)?;
    let residuals = refine_tones(&signal, &fourier_spectrum_with(&signal, &config.spectrum)?);

    let peak = residuals
        .iter()
        .filter(|pk| pk.frequency.abs() <= 0.5 * width + margin)
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .copied();
    let peak = match peak {
        Some(pk) if pk.weight >= config.min_weight => pk,
        other => {
            return Err(IpeaError::NegligibleOverlap {
                iteration: k,
                weight: other.map_or(0.0, |pk| pk.weight),
            })
        }
    };

    let seg = width / 10.0;
    let u = (peak.frequency + 0.5 * width) / seg;
    let nearest = u.round();
    let mut segment = u.floor().clamp(0.0, 9.0) as usize;
    let distance = (u - nearest).abs();
    if (1.0..=9.0).contains(&nearest) && distance < config.tie_tolerance {
        let boundary = previous.low + nearest * seg;
        match ties {
            TieHandling::Reject => {
                return Err(IpeaError::BoundaryTie {
                    iteration: k,
                    boundary,
                    distance,
                })
            }
            TieHandling::Resolve => {
                let above = if distance > config.exact_tie {
                    u > nearest
                } else {
                    boundary > 0.0
                };
                segment = if above { nearest as usize } else { nearest as usize - 1 };
            }
        }
    }

    let interval = previous.segment(segment);
    Ok(IterationResult {
        iteration: k,
        power,
        digit: previous.digit(segment),
        segment,
        previous,
        interval,
        peak: SpectralPeak {
            frequency: center + peak.frequency,
            weight: peak.weight,
        },
        samples: config.samples,
        spacing,
        spectrum: residuals
            .iter()
            .map(|pk| SpectralPeak {
                frequency: center + pk.frequency,
                weight: pk.weight,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub bond_length_pm: f64,
    pub trial: String,
    pub polarization: f64,
    /// Hartree, with the offset added back.
    pub energy: f64,
    /// Half-width of the final interval.
    pub uncertainty: f64,
    pub offset: f64,
    /// Midpoint of the final interval in offset-subtracted units.
    pub shifted_energy: f64,
    pub digits: Vec<u8>,
    pub iterations: Vec<IterationResult>,
    /// First-iteration peaks normalized by the polarization, as estimates
    /// of `|a_k|²` at energies `E_k` (offset-subtracted).
    pub eigenstate_weights: Vec<SpectralPeak>,
    /// Absolute precision below which double-precision rounding dominates.
    pub resolution_floor: f64,
    pub readout: String,
}

pub const READOUT_CONVENTION: &str =
    "sample = x + i*y with x = 2 Re rho_N[-1,0] and y = 2 Im rho_N[-1,0] (in-phase and quadrature probe readouts)";

/// Runs `iterations` decimal refinements on an already shifted
/// Hamiltonian; near-boundary peaks are retried with doubled sample counts
/// before being resolved.
pub fn estimate_shifted(
    h: &ShiftedHamiltonian,
    trial: &TrialState,
    iterations: u32,
    polarization: f64,
    config: &IpeaConfig,
) -> Result<EnergyEstimate, IpeaError> {
    if iterations == 0 || iterations > MAX_ITERATION {
        return Err(IpeaError::InvalidIteration(iterations));
    }
    let mut interval = config.initial();
    let mut results: Vec<IterationResult> = Vec::with_capacity(iterations as usize);
    for k in 1..=iterations {
        let mut attempt = config.clone();
        let mut retries = 0;
        let result = loop {
            let ties = if retries < config.tie_retries {
                TieHandling::Reject
            } else {
                TieHandling::Resolve
            };
            match ipea_iterate(h, trial, polarization, interval, k, &attempt, ties) {
                Err(IpeaError::BoundaryTie { .. }) => {
                    retries += 1;
                    attempt.samples *= 2;
                }
                other => break other?,
            }
        };
        interval = result.interval;
        results.push(result);
    }

    let mut eigenstate_weights: Vec<SpectralPeak> = if polarization > 0.0 {
        results[0]
            .spectrum
            .iter()
            .map(|pk| SpectralPeak {
                frequency: pk.frequency,
                weight: (pk.weight / polarization).min(1.0),
            })
            .collect()
    } else {
        Vec::new()
    };
    let total: f64 = eigenstate_weights.iter().map(|pk| pk.weight).sum();
    if total > 1.0 {
        eigenstate_weights.iter_mut().for_each(|pk| pk.weight /= total);
    }

    let scale = h
        .eigen()
        .eigenvalues
        .iter()
        .fold(h.offset.abs(), |acc, l| acc.max(l.abs()));
    let shifted_energy = interval.midpoint();
    Ok(EnergyEstimate {
        bond_length_pm: h.bond_length_pm,
        trial: trial.label.clone(),
        polarization,
        energy: shifted_energy + h.offset,
        uncertainty: 0.5 * interval.width(),
        offset: h.offset,
        shifted_energy,
        digits: results.iter().map(|r| r.digit).collect(),
        iterations: results,
        eigenstate_weights,
        resolution_floor: 4.0 * f64::EPSILON * scale.max(1.0),
        readout: READOUT_CONVENTION.into(),
    })
}

pub fn estimate_energy(
    h: &FciHamiltonian,
    trial: &TrialState,
    iterations: u32,
    polarization: f64,
) -> Result<EnergyEstimate, IpeaError> {
    estimate_energy_with(h, trial, iterations, polarization, &IpeaConfig::default())
}

pub fn estimate_energy_with(
    h: &FciHamiltonian,
    trial: &TrialState,
    iterations: u32,
    polarization: f64,
    config: &IpeaConfig,
) -> Result<EnergyEstimate, IpeaError> {
    estimate_shifted(&shift_hamiltonian(h), trial, iterations, polarization, config)
}
