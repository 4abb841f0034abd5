use anderson_core::disorder::DisorderError;
use anderson_core::ids::IdsError;
use anderson_core::lattice::LatticeError;
use anderson_core::pam::PamError;
use anderson_core::tauber::TauberError;
use anderson_core::variational::VariationalError;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }

    fn invalid(msg: impl ToString) -> Self {
        CliError::Validation(vec![msg.to_string()])
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::invalid(e)
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::NoConvergence { .. } => CliError::NonConvergence(e.to_string()),
            LatticeError::InvalidGeometry(_) | LatticeError::InvalidArgument(_) | LatticeError::DenseCapExceeded { .. } => {
                CliError::invalid(e)
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<DisorderError> for CliError {
    fn from(e: DisorderError) -> Self {
        match e {
            DisorderError::Quadrature { .. } | DisorderError::EmpiricalOverflow { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            _ => CliError::invalid(e),
        }
    }
}

impl From<PamError> for CliError {
    fn from(e: PamError) -> Self {
        match e {
            PamError::Lattice(e) => e.into(),
            PamError::Disorder(e) => e.into(),
            PamError::StepBudget { .. } => CliError::NonConvergence(e.to_string()),
            PamError::InvalidArgument(_) => CliError::invalid(e),
            PamError::PotentialUndefined(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<IdsError> for CliError {
    fn from(e: IdsError) -> Self {
        match e {
            IdsError::Pam(e) => e.into(),
            IdsError::InvalidGrid(_) | IdsError::InvalidArgument(_) => CliError::invalid(e),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<VariationalError> for CliError {
    fn from(e: VariationalError) -> Self {
        match e {
            VariationalError::Disorder(e) => e.into(),
            _ => CliError::invalid(e),
        }
    }
}

impl From<TauberError> for CliError {
    fn from(e: TauberError) -> Self {
        match e {
            TauberError::Disorder(e) => e.into(),
            TauberError::NotBracketed(_) => CliError::NonConvergence(e.to_string()),
            TauberError::InvalidArgument(_) => CliError::invalid(e),
        }
    }
}
