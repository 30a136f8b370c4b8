//! Homodyne statistics of single-mode squeezed vacuum, computed three ways:
//! closed forms with a coherent local oscillator, closed forms with the
//! laser treated as a Fock state, and an exact truncated two-mode oracle.
//! Also computes the relative-phase distribution between signal and local
//! oscillator and its restricted-window variance.
//!
//! Module map:
//!
//! * [`fock`]: squeezed-vacuum Fock amplitudes and quadrature moments.
//! * [`analytic`]: closed-form photocount-difference variances and the
//!   Poisson mixture over total photon number.
//! * [`block`]: two-mode states organized by total photon number, the exact
//!   moments and spectrum of `n_b - n_c`, and Monte Carlo detector records.
//! * [`phase`]: relative-phase distributions and window statistics.
//! * [`cli`]: the `homodyne` command-line front end.

pub mod analytic;
pub mod block;
pub mod cli;
mod error;
pub mod fock;
pub mod phase;
pub mod tridiag;

pub use error::{Error, Result};

/// Normalization acceptance tolerance on squared norms.
pub const EPS_NORM: f64 = 1e-9;

pub use analytic::{HomodyneSettings, LocalOscillator, Route, VarianceReport};
pub use block::{NbcSpectrum, TwoModeBlock, TwoModeState};
pub use fock::{FockVector, QuadratureStats, SqueezeParams};
pub use phase::{PhaseDistribution, WindowStats};
