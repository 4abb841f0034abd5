//! Lattice numerics for the Anderson Hamiltonian and the parabolic Anderson
//! model: spectra on Dirichlet boxes, single-site cumulants, variational
//! bounds on the heat trace, Monte Carlo and Krylov solvers, empirical
//! integrated density of states, and Legendre/Tauberian transforms.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disorder;
pub mod ids;
pub mod pam;
pub mod lattice;
pub mod quadrature;
pub mod rng;
pub mod tauber;
pub mod variational;

pub use lattice::{
    build_hamiltonian, BoxGeometry, HamiltonianOperator, OccupationMeasure, PotentialSample, SpectralResult,
    SymmetricOperator,
};
