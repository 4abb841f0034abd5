//! Finite boxes of ℤ^d, the Dirichlet Anderson Hamiltonian, its spectra,
//! and occupation-measure energetics.

mod forms;
mod geometry;
mod hamiltonian;
pub(crate) mod lanczos;
mod spectrum;
mod tridiag;

pub use forms::{
    bin_edges, classify_energy, classify_measure, default_faber_krahn_constant, dirichlet_form,
    faber_krahn_check, FaberKrahnCheck, MeasureBin, OccupationMeasure, SiteSetLaplacian,
};
pub use geometry::BoxGeometry;
pub use hamiltonian::{HamiltonianOperator, PotentialSample, SymmetricOperator};
pub use spectrum::{
    full_spectrum, full_spectrum_capped, laplacian_ground_energy, laplacian_ground_state,
    laplacian_spectrum_closed_form, smallest_eigenvalues, smallest_eigenvalues_with, EigenOptions,
    SpectralResult, DEFAULT_DENSE_CAP,
};
pub use tridiag::tridiagonal_eigenvalues;


use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("potential has {found} sites, box has {expected}")]
    SiteCountMismatch { expected: usize, found: usize },
    #[error("potential value at site {site} is not finite")]
    NonFinitePotential { site: usize },
    #[error("invalid occupation measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },
    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },
}

/// Builds `H = -Δ + V` on the box; `None` means the free Laplacian.
pub fn build_hamiltonian(
    geometry: BoxGeometry,
    potential: Option<PotentialSample>,
) -> Result<HamiltonianOperator, LatticeError> {
    HamiltonianOperator::new(geometry, potential)
}
