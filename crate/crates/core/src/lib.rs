//! Strong-field harmonic generation from a one-dimensional model atom
//! embedded in a stochastically disordered scattering environment.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`physics`]: laser pulse, soft-Coulomb atom, Gaussian perturbers and
//!   derived laser scales, all in Hartree atomic units.
//! - [`environment`]: disorder sampling and the pair-correlation diagnostic.
//! - [`tdse`]: split-operator propagation of a single configuration.
//! - [`ensemble`]: many configurations, mixed-state observables and purity.
//! - [`spectra`]: harmonic spectra, Gabor maps and the purity-decay fit.
//! - [`semiclassics`]: simple-man returns, classical flow and periodic orbits.
//! - [`config`] and [`formats`]: run configuration and on-disk formats.

pub mod config;
pub mod ensemble;
pub mod environment;
pub mod error;
pub mod formats;
pub mod physics;
pub mod semiclassics;
pub mod spectra;
pub mod splitting;
pub mod tdse;
pub mod units;

pub use error::{Error, Result};
