use std::fs;
use std::path::{Path, PathBuf};

use heh_nv::electronic::{heh_hamiltonian, FciHamiltonian};
use heh_nv::grape::{grape_optimize, target_controlled_gate, ControlProblem, GrapeConfig, GrapeError};
use heh_nv::ipea::{estimate_energy_with, shift_hamiltonian, IpeaConfig};
use heh_nv::nv::{transition_frequencies, NvParameters, TrialState};
use heh_nv::pes::{self, EquilibriumOptions, EquilibriumReport, ScanConfig, ScanMethod, SurfacePoint};
use heh_nv::symmetry::cospectral_partner;
use serde::Serialize;

use crate::failure::Failure;
use crate::inputs::{self, Sourced};
use crate::{Cli, Command, CospectralArgs, GrapeArgs, HamiltonianArgs, IpeaArgs, Method, ScanArgs, Trial};

/// Everything that determines a run, embedded in each output document.
#[derive(Serialize)]
struct RunConfig<'a, A: Serialize, R: Serialize> {
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nv_params: Option<&'a str>,
    seed: u64,
    arguments: &'a A,
    resolved: R,
}

fn write_json(path: &Path, doc: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Failure::Numerical(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))
}

fn check_bond_length(r: f64) -> Result<(), Failure> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Failure::Config(format!(
            "bond length must be finite and non-negative, got {r} pm"
        )))
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Hamiltonian(args) => hamiltonian(cli, args),
        Command::Ipea(args) => ipea(cli, args),
        Command::Scan(args) => scan(cli, args),
        Command::Grape(args) => grape(cli, args),
        Command::Cospectral(args) => cospectral(cli, args),
    }
}

#[derive(Serialize)]
struct ScfSummary {
    energy: f64,
    iterations: usize,
    orbital_energies: Vec<f64>,
}

#[derive(Serialize)]
struct HamiltonianDoc<'a> {
    config: RunConfig<'a, HamiltonianArgs, ()>,
    #[serde(rename = "R_pm")]
    r_pm: f64,
    labels: &'a [String; 3],
    matrix: [[f64; 3]; 3],
    offset: f64,
    trace: f64,
    eigenvalues: Vec<f64>,
    scf: ScfSummary,
}

fn print_matrix(h: &FciHamiltonian) {
    for (row, label) in h.matrix.iter().zip(&h.labels) {
        println!("  {:>14.8} {:>14.8} {:>14.8}   {label}", row[0], row[1], row[2]);
    }
}

fn hamiltonian(cli: &Cli, args: &HamiltonianArgs) -> Result<(), Failure> {
    check_bond_length(args.r_pm)?;
    let basis = inputs::basis(cli)?;
    let (h, hf) = heh_hamiltonian(&basis.value, args.r_pm)?;
    let eigenvalues = h.eigenvalues();

    println!("HeH+ singlet Hamiltonian at R = {} pm (Hartree)", args.r_pm);
    print_matrix(&h);
    println!("offset tr(H)/3 = {:.10}", h.trace_offset);
    for (k, e) in eigenvalues.iter().enumerate() {
        println!("  E{k} = {e:.10}");
    }

    if let Some(out) = &cli.out {
        let doc = HamiltonianDoc {
            config: RunConfig {
                subcommand: "hamiltonian",
                basis: Some(&basis.source),
                nv_params: None,
                seed: cli.seed,
                arguments: args,
                resolved: (),
            },
            r_pm: args.r_pm,
            labels: &h.labels,
            matrix: h.matrix,
            offset: h.trace_offset,
            trace: h.trace(),
            eigenvalues,
            scf: ScfSummary {
                energy: hf.energy,
                iterations: hf.iterations,
                orbital_energies: hf.orbital_energies.clone(),
            },
        };
        write_json(out, &doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct IpeaResolved<'a> {
    matrix_source: String,
    ipea: &'a IpeaConfig,
}

#[derive(Serialize)]
struct IpeaDoc<'a> {
    config: RunConfig<'a, IpeaArgs, IpeaResolved<'a>>,
    #[serde(rename = "R_pm")]
    r_pm: Option<f64>,
    trial: Trial,
    polarization: f64,
    energy_hartree: f64,
    uncertainty_hartree: f64,
    offset_hartree: f64,
    shifted_energy_hartree: f64,
    resolution_floor_hartree: f64,
    digits: &'a [u8],
    eigenstate_weights: &'a [heh_nv::ipea::SpectralPeak],
    readout: &'a str,
    spectrum_per_iteration: &'a [heh_nv::ipea::IterationResult],
}

fn ipea(cli: &Cli, args: &IpeaArgs) -> Result<(), Failure> {
    let mut basis_source = None;
    let (h, r_pm, matrix_source) = match (&args.matrix, args.r_pm) {
        (Some(path), r) => {
            let (m, doc_r) = inputs::molecular_matrix(path)?;
            let r = r.or(doc_r);
            (
                FciHamiltonian::from_matrix(m, r.unwrap_or(f64::NAN))?,
                r,
                path.display().to_string(),
            )
        }
        (None, Some(r)) => {
            check_bond_length(r)?;
            let basis = inputs::basis(cli)?;
            let h = heh_hamiltonian(&basis.value, r)?.0;
            basis_source = Some(basis.source);
            (h, Some(r), "electronic-structure".to_string())
        }
        (None, None) => return Err(Failure::Config("either --R or --matrix is required".into())),
    };
    let mut config = IpeaConfig::default();
    if let Some(l) = args.samples {
        config.samples = l;
    }
    if let Some(pad) = args.padding {
        config.spectrum.padding = pad;
    }
    let trial = match args.trial {
        Trial::Plus => TrialState::plus(),
        Trial::Minus => TrialState::minus(),
    };
    let est = estimate_energy_with(&h, &trial, args.iterations, args.polarization, &config)?;

    println!("iter  power             digit  peak (shifted)        interval");
    for it in &est.iterations {
        println!(
            "{:>4}  {:>16}  {:>5}  {:>20.15}  [{:.15}, {:.15}]",
            it.iteration,
            it.power,
            it.digit,
            it.peak.frequency,
            it.interval.low,
            it.interval.high()
        );
    }
    println!(
        "energy = {:.15} ± {:.1e} Hartree (offset {:.12})",
        est.energy, est.uncertainty, est.offset
    );

    if let Some(out) = &cli.out {
        let doc = IpeaDoc {
            config: RunConfig {
                subcommand: "ipea",
                basis: basis_source.as_deref(),
                nv_params: None,
                seed: cli.seed,
                arguments: args,
                resolved: IpeaResolved {
                    matrix_source,
                    ipea: &config,
                },
            },
            r_pm,
            trial: args.trial,
            polarization: est.polarization,
            energy_hartree: est.energy,
            uncertainty_hartree: est.uncertainty,
            offset_hartree: est.offset,
            shifted_energy_hartree: est.shifted_energy,
            resolution_floor_hartree: est.resolution_floor,
            digits: &est.digits,
            eigenstate_weights: &est.eigenstate_weights,
            readout: &est.readout,
            spectrum_per_iteration: &est.iterations,
        };
        write_json(out, &doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PlotPoint {
    #[serde(rename = "R_pm")]
    r_pm: f64,
    #[serde(rename = "E_ground")]
    ground: Option<f64>,
    #[serde(rename = "E_excited1")]
    excited1: Option<f64>,
    #[serde(rename = "E_excited2")]
    excited2: Option<f64>,
    trace: f64,
    uncertainty: f64,
    flag: Option<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&SurfacePoint> for PlotPoint {
    fn from(p: &SurfacePoint) -> Self {
        Self {
            r_pm: p.bond_length_pm,
            ground: finite(p.ground),
            excited1: finite(p.excited1),
            excited2: finite(p.excited2),
            trace: p.trace,
            uncertainty: p.uncertainty,
            flag: p.flag.clone(),
        }
    }
}

#[derive(Serialize)]
struct ScanResolved<'a> {
    grid_pm: &'a [f64],
    scan: &'a ScanConfig,
    equilibrium: &'a EquilibriumOptions,
    refinement_method: &'static str,
}

#[derive(Serialize)]
struct PlotDoc<'a> {
    config: RunConfig<'a, ScanArgs, ScanResolved<'a>>,
    columns: [&'static str; 4],
    points: Vec<PlotPoint>,
    equilibrium: Option<&'a EquilibriumReport>,
    equilibrium_error: Option<String>,
}

fn plot_path(args: &ScanArgs, out: Option<&PathBuf>) -> Option<PathBuf> {
    args.plot.clone().or_else(|| out.map(|o| o.with_extension("plot.json")))
}

fn csv_error(e: csv::Error) -> Failure {
    Failure::Config(format!("cannot write CSV: {e}"))
}

fn scan(cli: &Cli, args: &ScanArgs) -> Result<(), Failure> {
    if !(args.rmin > 0.0 && args.rmax >= args.rmin && args.step > 0.0 && args.rmax.is_finite()) {
        return Err(Failure::Config("need 0 < rmin <= rmax and step > 0".into()));
    }
    if !(args.reference > 0.0 && args.reference.is_finite()) {
        return Err(Failure::Config("reference bond length must be positive".into()));
    }
    let basis = inputs::basis(cli)?;
    let config = ScanConfig {
        method: match args.method {
            Method::Ipea => ScanMethod::Ipea,
            Method::DirectEig => ScanMethod::DirectEig,
        },
        iterations: args.iterations,
        polarization: args.polarization,
        ipea: IpeaConfig::default(),
    };
    let options = EquilibriumOptions {
        refine: !args.no_refine,
        reference_pm: args.reference,
    };
    let grid = pes::grid(args.rmin, args.rmax, args.step);
    let points = pes::scan(&basis.value, &grid, &config)?;
    let equilibrium = pes::find_equilibrium(&points, &options, &|r| pes::direct_ground_energy(&basis.value, r));

    println!(
        "{:>9}  {:>16}  {:>16}  {:>16}  {:>9}",
        "R (pm)", "E_ground", "E_excited1", "E_excited2", "unc"
    );
    for p in &points {
        println!(
            "{:>9.3}  {:>16.10}  {:>16.10}  {:>16.10}  {:>9.1e}{}",
            p.bond_length_pm,
            p.ground,
            p.excited1,
            p.excited2,
            p.uncertainty,
            p.flag.as_deref().map(|f| format!("  [{f}]")).unwrap_or_default()
        );
    }
    match &equilibrium {
        Ok(eq) => println!(
            "equilibrium R = {:.4} pm, E_min = {:.8} Hartree, binding energy = {:.6} Hartree (reference {} pm)",
            eq.r_eq_pm, eq.e_min, eq.binding_energy, eq.reference_pm
        ),
        Err(e) => eprintln!("warning: equilibrium analysis failed: {e}"),
    }
    for p in points.iter().filter(|p| p.is_flagged()) {
        eprintln!(
            "warning: {} pm flagged: {}",
            p.bond_length_pm,
            p.flag.as_deref().unwrap_or("")
        );
    }

    if let Some(out) = &cli.out {
        let mut w = csv::Writer::from_path(out).map_err(csv_error)?;
        w.write_record(["R_pm", "E_ground", "E_excited1", "E_excited2", "trace", "uncertainty"])
            .map_err(csv_error)?;
        for p in &points {
            w.write_record(
                [
                    p.bond_length_pm,
                    p.ground,
                    p.excited1,
                    p.excited2,
                    p.trace,
                    p.uncertainty,
                ]
                .map(|x| x.to_string()),
            )
            .map_err(csv_error)?;
        }
        w.flush()
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", out.display())))?;
    }
    if let Some(plot) = plot_path(args, cli.out.as_ref()) {
        let doc = PlotDoc {
            config: RunConfig {
                subcommand: "scan",
                basis: Some(&basis.source),
                nv_params: None,
                seed: cli.seed,
                arguments: args,
                resolved: ScanResolved {
                    grid_pm: &grid,
                    scan: &config,
                    equilibrium: &options,
                    refinement_method: "direct-eig",
                },
            },
            columns: ["R_pm", "E_ground", "E_excited1", "E_excited2"],
            points: points.iter().map(PlotPoint::from).collect(),
            equilibrium: equilibrium.as_ref().ok(),
            equilibrium_error: equilibrium.as_ref().err().map(|e| e.to_string()),
        };
        write_json(&plot, &doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PieceDoc {
    #[serde(rename = "tone1_I")]
    tone1_i: f64,
    #[serde(rename = "tone1_Q")]
    tone1_q: f64,
    #[serde(rename = "tone2_I")]
    tone2_i: f64,
    #[serde(rename = "tone2_Q")]
    tone2_q: f64,
}

#[derive(Serialize)]
struct ToneDoc {
    tone: usize,
    transition: String,
    frequency_mhz: f64,
}

#[derive(Serialize)]
struct GrapeResolved<'a> {
    nv: &'a NvParameters,
    grape: &'a GrapeConfig,
    pieces: usize,
    piece_duration_us: f64,
    amplitude_cap_mhz: f64,
}

#[derive(Serialize)]
struct GrapeDoc<'a> {
    config: RunConfig<'a, GrapeArgs, GrapeResolved<'a>>,
    #[serde(rename = "R_pm")]
    r_pm: f64,
    power: u64,
    time: f64,
    duration_us: f64,
    fidelity: f64,
    converged: bool,
    iterations: usize,
    restart: Option<usize>,
    gradient_norm: f64,
    tones: Vec<ToneDoc>,
    pieces: Vec<PieceDoc>,
}

fn grape(cli: &Cli, args: &GrapeArgs) -> Result<(), Failure> {
    check_bond_length(args.r_pm)?;
    if !(args.time.is_finite() && args.time > 0.0) || args.power == 0 {
        return Err(Failure::Config("time must be positive and power at least 1".into()));
    }
    let basis = inputs::basis(cli)?;
    let nv: Sourced<NvParameters> = inputs::nv_params(cli)?;
    let shifted = shift_hamiltonian(&heh_hamiltonian(&basis.value, args.r_pm)?.0);
    let problem = ControlProblem::from_nv_with(&nv.value, args.pieces, args.piece_duration, args.cap);
    let target = target_controlled_gate(&shifted, args.power, args.time);
    let mut config = GrapeConfig::default();
    if let Some(r) = args.restarts {
        config.restarts = r;
    }
    if let Some(m) = args.max_iterations {
        config.max_iterations = m;
    }

    let (pulses, report, failure) = match grape_optimize(&problem, &target, cli.seed, &config) {
        Ok((p, r)) => (p, r, None),
        Err(GrapeError::NotConverged { pulses, report, .. }) => {
            let msg = format!(
                "best subspace fidelity {:.6} is below {}",
                report.fidelity, config.success_threshold
            );
            (*pulses, *report, Some(Failure::NotConverged(msg)))
        }
        Err(e) => return Err(e.into()),
    };

    println!(
        "R = {} pm, power {}: subspace fidelity {:.8} after {} iterations (restart {})",
        args.r_pm,
        args.power,
        report.fidelity,
        report.iterations,
        report
            .restart
            .map(|r| r.to_string())
            .unwrap_or_else(|| "zero pulse".into())
    );
    println!("piece  tone1 I/Q (MHz)          tone2 I/Q (MHz)");
    for (k, p) in pulses.pieces.iter().enumerate() {
        println!(
            "{k:>5}  {:>10.5} {:>10.5}    {:>10.5} {:>10.5}",
            p.tone1_i, p.tone1_q, p.tone2_i, p.tone2_q
        );
    }

    if let Some(out) = &cli.out {
        let tones = transition_frequencies(&nv.value)
            .iter()
            .enumerate()
            .map(|(k, t)| ToneDoc {
                tone: k + 1,
                transition: format!(
                    "m_s {:+} -> {:+} (m_I {:+})",
                    t.lower.electron.value(),
                    t.upper.electron.value(),
                    t.lower.nuclear.value()
                ),
                frequency_mhz: t.frequency_mhz,
            })
            .collect();
        let doc = GrapeDoc {
            config: RunConfig {
                subcommand: "grape",
                basis: Some(&basis.source),
                nv_params: Some(&nv.source),
                seed: cli.seed,
                arguments: args,
                resolved: GrapeResolved {
                    nv: &nv.value,
                    grape: &config,
                    pieces: problem.pieces,
                    piece_duration_us: problem.piece_duration,
                    amplitude_cap_mhz: problem.amplitude_cap,
                },
            },
            r_pm: args.r_pm,
            power: args.power,
            time: args.time,
            duration_us: problem.total_duration(),
            fidelity: report.fidelity,
            converged: failure.is_none(),
            iterations: report.iterations,
            restart: report.restart,
            gradient_norm: report.gradient_norm,
            tones,
            pieces: pulses
                .pieces
                .iter()
                .map(|p| PieceDoc {
                    tone1_i: p.tone1_i,
                    tone1_q: p.tone1_q,
                    tone2_i: p.tone2_i,
                    tone2_q: p.tone2_q,
                })
                .collect(),
        };
        write_json(out, &doc)?;
    }
    failure.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct CospectralDoc<'a> {
    config: RunConfig<'a, CospectralArgs, ()>,
    #[serde(flatten)]
    report: heh_nv::symmetry::CospectralityReport,
}

fn cospectral(cli: &Cli, args: &CospectralArgs) -> Result<(), Failure> {
    if let Some(t) = args.threshold {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Config(format!("threshold must be positive, got {t}")));
        }
    }
    let h = inputs::hermitian_matrix(&args.input)?;
    let report = cospectral_partner(&h, args.threshold)?;
    let doc = CospectralDoc {
        config: RunConfig {
            subcommand: "cospectral",
            basis: None,
            nv_params: None,
            seed: cli.seed,
            arguments: args,
            resolved: (),
        },
        report,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Numerical(e.to_string()))?;
    text.push('\n');
    print!("{text}");
    if let Some(out) = &cli.out {
        fs::write(out, &text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(())
}
