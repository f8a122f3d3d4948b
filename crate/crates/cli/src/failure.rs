use std::fmt;

use heh_nv::electronic::ElectronicError;
use heh_nv::grape::GrapeError;
use heh_nv::ipea::IpeaError;
use heh_nv::nv::NvError;
use heh_nv::pes::PesError;
use heh_nv::symmetry::SymmetryError;

/// Failure class of a command; each maps to its own exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    NotConverged(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
        }
    }
}

impl From<ElectronicError> for Failure {
    fn from(e: ElectronicError) -> Self {
        match e {
            ElectronicError::InvalidBasis(_)
            | ElectronicError::UnknownElement(_)
            | ElectronicError::InvalidMatrix(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<NvError> for Failure {
    fn from(e: NvError) -> Self {
        match e {
            NvError::Numerics(_) | NvError::InvalidState(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<IpeaError> for Failure {
    fn from(e: IpeaError) -> Self {
        match e {
            IpeaError::Register(inner) => inner.into(),
            IpeaError::InvalidIteration(_) | IpeaError::InvalidHamiltonian(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<PesError> for Failure {
    fn from(e: PesError) -> Self {
        match e {
            PesError::Electronic(inner) => inner.into(),
            PesError::Ipea(inner) => inner.into(),
            PesError::InvalidBondLength(_) | PesError::TooFewPoints { .. } => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<GrapeError> for Failure {
    fn from(e: GrapeError) -> Self {
        match e {
            GrapeError::NotConverged { .. } => Failure::NotConverged(e.to_string()),
            GrapeError::Numerics(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<SymmetryError> for Failure {
    fn from(e: SymmetryError) -> Self {
        match e {
            SymmetryError::Numerics(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}
