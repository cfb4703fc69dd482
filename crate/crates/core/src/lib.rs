//! Numerical laboratory for one-dimensional discrete random Schrödinger
//! operators `(Hu)(n) = u(n+1) + u(n-1) + V(n) u(n)` with i.i.d. potentials.
//!
//! The crate estimates Lyapunov exponents by three independent routes (direct
//! cocycle products, the invariant-measure formula on the projective line and
//! the constant-potential closed form), checks spectral and dynamical
//! localization at finite volume, and discretizes the Kunz-Souillard integral
//! operators so that their norm bounds and the operator-product formula for
//! the eigenfunction correlator can be checked numerically.
//!
//! Module map:
//!
//! - [`model`]: single-site distributions, potential paths, finite Hamiltonians.
//! - [`transfer`]: SL(2,R) cocycles, Lyapunov estimates, Oseledec directions.
//! - [`furstenberg`]: projective dynamics and invariant measures.
//! - [`spectra`]: tridiagonal eigensolver and eigenvector decay fits.
//! - [`dynamics`]: time evolution and eigenfunction correlators.
//! - [`rank_one`]: Borel transforms, Aronszajn-Krein, spectral averaging.
//! - [`kunz_souillard`]: the integral operators `U`, `T0`, `T1`.
//! - [`checks`]: the invariant suite run by `anderson check`.

pub mod checks;
pub mod dynamics;
pub mod error;
pub mod furstenberg;
pub mod kunz_souillard;
pub mod model;
pub mod quadrature;
pub mod rank_one;
pub mod rng;
pub mod spectra;
pub mod stats;
pub mod transfer;

pub use error::{Error, Result};
pub use num_complex;
