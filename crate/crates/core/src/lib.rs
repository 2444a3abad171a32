//! Bounded power-series eigensolver for one-dimensional Schrödinger operators
//! with even polynomial potentials between infinite walls at `x = ±L`.
//!
//! Units are `ħ = 1`, `2m = 1`, so the equation solved is
//! `psi'' + (E - V(x)) psi = 0` with `psi(±L) = 0`.

pub mod bigreal;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod fd;
pub mod observables;
pub mod potential;
pub mod presets;
pub mod series;

pub use bigreal::{BigReal, Digits};
pub use eigen::{
    boundary_value, count_nodes, refine_root, scan_brackets, spectrum, BoundaryProblem, Bracket,
    Eigenpair,
};
pub use error::SolverError;
pub use potential::{parse_potential, Potential, PotentialError};
pub use series::{psi_at, series_coefficients, Parity, SeriesConfig, SeriesSolution};
