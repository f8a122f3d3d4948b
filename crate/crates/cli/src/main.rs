//! `heh-nv`: command-line driver for the HeH⁺ / NV-register simulator.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 non-convergence.

mod commands;
mod failure;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use failure::Failure;

/// Environment variable naming a directory with default `basis.json` and
/// `nv-params.json` files.
pub const CONFIG_DIR_ENV: &str = "HEHNV_CONFIG_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "heh-nv",
    version,
    about = "HeH+ phase estimation on a simulated NV spin register"
)]
pub struct Cli {
    /// Basis-set JSON (element -> primitives, exponents in bohr^-2).
    #[arg(long, global = true, value_name = "PATH")]
    pub basis: Option<PathBuf>,
    /// NV parameter JSON.
    #[arg(long = "nv-params", global = true, value_name = "PATH")]
    pub nv_params: Option<PathBuf>,
    /// Seed for every stochastic choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable output file.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Singlet FCI Hamiltonian and its spectrum at one bond length.
    Hamiltonian(HamiltonianArgs),
    /// Iterative phase estimation of one eigenenergy.
    Ipea(IpeaArgs),
    /// Potential-energy surface scan with equilibrium analysis.
    Scan(ScanArgs),
    /// GRAPE synthesis of the controlled evolution gate.
    Grape(GrapeArgs),
    /// Cospectral partner of a Hermitian matrix with bipartite support.
    Cospectral(CospectralArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HamiltonianArgs {
    /// Bond length in pm.
    #[arg(long = "R", value_name = "PM")]
    #[serde(rename = "R_pm")]
    pub r_pm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Trial {
    #[value(name = "+1")]
    #[serde(rename = "+1")]
    Plus,
    #[value(name = "-1")]
    #[serde(rename = "-1")]
    Minus,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IpeaArgs {
    /// Bond length in pm (ignored for the electronic structure when
    /// `--matrix` is given).
    #[arg(long = "R", value_name = "PM")]
    #[serde(rename = "R_pm")]
    pub r_pm: Option<f64>,
    /// 3x3 Hamiltonian JSON to use instead of the electronic structure.
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "+1", allow_hyphen_values = true)]
    pub trial: Trial,
    #[arg(long, default_value_t = 13)]
    pub iterations: u32,
    /// Nuclear polarization fraction.
    #[arg(long, default_value_t = 1.0)]
    pub polarization: f64,
    /// Samples per iteration.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Zero-padding factor of the Fourier readout.
    #[arg(long)]
    pub padding: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ipea,
    DirectEig,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 70.0)]
    pub rmin: f64,
    #[arg(long, default_value_t = 130.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 2.5)]
    pub step: f64,
    #[arg(long, default_value_t = 5)]
    pub iterations: u32,
    #[arg(long, value_enum, default_value = "ipea")]
    pub method: Method,
    #[arg(long, default_value_t = 1.0)]
    pub polarization: f64,
    /// Plot-data JSON; defaults to the `--out` path with a `.plot.json`
    /// extension.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
    /// Skip the golden-section refinement of the equilibrium.
    #[arg(long)]
    pub no_refine: bool,
    /// Dissociation reference bond length in pm.
    #[arg(long, default_value_t = heh_nv::pes::DEFAULT_REFERENCE_PM)]
    pub reference: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GrapeArgs {
    #[arg(long = "R", value_name = "PM")]
    #[serde(rename = "R_pm")]
    pub r_pm: f64,
    /// Power of the controlled evolution.
    #[arg(long, default_value_t = 1)]
    pub power: u64,
    /// Base evolution time in simulation units.
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    /// Amplitude cap per tone in MHz.
    #[arg(long, default_value_t = heh_nv::grape::DEFAULT_AMPLITUDE_CAP)]
    pub cap: f64,
    #[arg(long, default_value_t = heh_nv::grape::DEFAULT_PIECES)]
    pub pieces: usize,
    /// Piece duration in µs.
    #[arg(long = "piece-duration", default_value_t = heh_nv::grape::DEFAULT_PIECE_DURATION)]
    pub piece_duration: f64,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long = "max-iterations")]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CospectralArgs {
    /// Matrix JSON: `{"re": [[..]], "im": [[..]]}`, a plain array of rows,
    /// or a `hamiltonian` output document.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Absolute support threshold; defaults to 1e-10 of the largest
    /// off-diagonal magnitude.
    #[arg(long)]
    pub threshold: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::NotConverged(_) => 3,
        }
    }
}
