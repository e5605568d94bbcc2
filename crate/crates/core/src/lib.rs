//! Spin-entangled wavepacket dynamics on a 2D tight-binding lattice with
//! Hatano-Nelson (non-reciprocal) hopping regions and localized imaginary
//! gains.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: geometry, region layout and the sparse Hamiltonian.
//! - [`state`]: Gaussian packets and the two-branch spinor state.
//! - [`evolution`]: renormalized `exp(-iH dt)` stepping (Krylov and dense).
//! - [`observables`]: spin polarization, densities and collapse detection.
//! - [`spectrum`]: dense non-symmetric eigensolver and `max Im(λ)` scans.
//! - [`fitting`]: Levenberg-Marquardt logistic and inverse-law fits.
//! - [`harness`]: run configuration, presets, sweeps and file output.
//!
//! Units: `ħ = 1` and energies are measured in units of the hopping `γ₀`,
//! so times are in `ħ/γ₀`. [`units`] converts to femtoseconds.

pub mod error;
pub mod evolution;
pub mod fitting;
pub mod harness;
pub mod lattice;
pub mod observables;
pub mod sparse;
pub mod spectrum;
pub mod state;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
