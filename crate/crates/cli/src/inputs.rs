use std::fs;
use std::path::{Path, PathBuf};

use heh_nv::electronic::BasisSet;
use heh_nv::numerics::ComplexMatrix;
use heh_nv::nv::NvParameters;
use serde::Deserialize;

use crate::failure::Failure;
use crate::{Cli, CONFIG_DIR_ENV};

const BASIS_FILE: &str = "basis.json";
const NV_FILE: &str = "nv-params.json";

/// A loaded input and where it came from (a path or `builtin:<name>`).
pub struct Sourced<T> {
    pub value: T,
    pub source: String,
}

/// Explicit flag, then the config directory, then the built-in default.
fn locate(flag: &Option<PathBuf>, file: &str) -> Result<Option<PathBuf>, Failure> {
    if let Some(p) = flag {
        return Ok(Some(p.clone()));
    }
    match std::env::var_os(CONFIG_DIR_ENV) {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            if !dir.is_dir() {
                return Err(Failure::Config(format!(
                    "{CONFIG_DIR_ENV}={} is not a directory",
                    dir.display()
                )));
            }
            let candidate = dir.join(file);
            Ok(candidate.is_file().then_some(candidate))
        }
        None => Ok(None),
    }
}

pub fn basis(cli: &Cli) -> Result<Sourced<BasisSet>, Failure> {
    Ok(match locate(&cli.basis, BASIS_FILE)? {
        Some(path) => Sourced {
            value: BasisSet::from_path(&path)?,
            source: path.display().to_string(),
        },
        None => Sourced {
            value: BasisSet::sto3g(),
            source: "builtin:sto-3g".into(),
        },
    })
}

pub fn nv_params(cli: &Cli) -> Result<Sourced<NvParameters>, Failure> {
    Ok(match locate(&cli.nv_params, NV_FILE)? {
        Some(path) => Sourced {
            value: NvParameters::from_path(&path)?,
            source: path.display().to_string(),
        },
        None => Sourced {
            value: NvParameters::default(),
            source: "builtin:nv-default".into(),
        },
    })
}

fn read_json(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RealInput {
    Rows(Vec<Vec<f64>>),
    Document {
        matrix: Vec<Vec<f64>>,
        #[serde(rename = "R_pm")]
        r_pm: Option<f64>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyInput {
    Split(ComplexMatrix),
    Real(RealInput),
}

fn rows_to_matrix(rows: &[Vec<f64>], path: &Path) -> Result<ComplexMatrix, Failure> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Failure::Config(format!(
            "{}: matrix must be square and non-empty",
            path.display()
        )));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| rows[i][j].into()))
}

/// Any square complex matrix, checked to be Hermitian.
pub fn hermitian_matrix(path: &Path) -> Result<ComplexMatrix, Failure> {
    let value = read_json(path)?;
    let parsed: AnyInput = serde_json::from_value(value).map_err(|_| {
        Failure::Config(format!(
            "{}: expected {{\"re\", \"im\"}}, an array of rows, or a document with a \"matrix\" field",
            path.display()
        ))
    })?;
    let m = match parsed {
        AnyInput::Split(m) => m,
        AnyInput::Real(RealInput::Rows(rows)) | AnyInput::Real(RealInput::Document { matrix: rows, .. }) => {
            rows_to_matrix(&rows, path)?
        }
    };
    if !m.is_square() || m.rows() == 0 {
        return Err(Failure::Config(format!(
            "{}: matrix must be square and non-empty",
            path.display()
        )));
    }
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Failure::Config(format!(
            "{}: matrix has non-finite entries",
            path.display()
        )));
    }
    if !m.is_hermitian() {
        return Err(Failure::Config(format!(
            "{}: matrix is not Hermitian (deviation {:e})",
            path.display(),
            m.hermitian_deviation()
        )));
    }
    Ok(m)
}

/// Real symmetric 3×3 molecular Hamiltonian and the bond length it
/// carries, if any.
pub fn molecular_matrix(path: &Path) -> Result<([[f64; 3]; 3], Option<f64>), Failure> {
    let value = read_json(path)?;
    let parsed: RealInput = serde_json::from_value(value).map_err(|_| {
        Failure::Config(format!(
            "{}: expected a 3x3 array of rows or a document with a \"matrix\" field",
            path.display()
        ))
    })?;
    let (rows, r_pm) = match parsed {
        RealInput::Rows(rows) => (rows, None),
        RealInput::Document { matrix, r_pm } => (matrix, r_pm),
    };
    if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
        return Err(Failure::Config(format!(
            "{}: molecular Hamiltonian must be 3x3",
            path.display()
        )));
    }
    let mut m = [[0.0; 3]; 3];
    for (i, row) in rows.iter().enumerate() {
        m[i].copy_from_slice(row);
    }
    Ok((m, r_pm))
}
