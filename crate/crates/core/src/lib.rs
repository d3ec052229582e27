//! Quantum logic gates realised as scattering matrices.
//!
//! The crate solves the direct and inverse scattering problems for the
//! stationary Schrödinger equation `ψ'' + (k² + Q(x))ψ = 0` and for the
//! driven two-level (Zakharov–Shabat) system, synthesises reflection data
//! whose S-matrices hit prescribed gates, tests entanglement of a
//! dipole-coupled qubit pair and computes monodromy of Fuchsian systems.
//!
//! Modules:
//! - [`algebra`]: 2×2 / 4×4 complex matrices, SU(1,1) data, the τ map,
//!   gate distance and the operator-Schmidt decomposition.
//! - [`direct1d`]: Schrödinger direct scattering, bound states, the
//!   electromagnetic spin S-matrix.
//! - [`dispersion`]: transmission reconstruction from reflection data and
//!   interpolating scattering data for gate targets.
//! - [`glm`]: Gelfand–Levitan–Marchenko inverse scattering for the line and
//!   for pulses.
//! - [`twolevel`]: two-level propagation, S-matrices, dipole Hamiltonian.
//! - [`fuchsian`]: monodromy of Fuchsian systems and the Lorentzian pulse
//!   correspondence.
//! - [`cli`]: the `scattergate` command-line front end.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod cli;
pub mod direct1d;
pub mod dispersion;
mod error;
pub mod fuchsian;
pub mod glm;
pub mod numeric;
pub mod twolevel;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Shorthand for building a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
