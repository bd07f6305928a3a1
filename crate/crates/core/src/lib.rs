//! Scattering of waves by piecewise-constant complex potentials, with a focus
//! on the two-layer PT-symmetric gain/loss barrier `V = +iv` on `(-a, 0)` and
//! `V = -iv` on `(0, a)`.
//!
//! Everything is expressed in dimensionless units: lengths in units of the
//! half-barrier width `a`, potentials in units of the incident energy `E = k²`.
//! The barrier problem is then fully described by the contrast `ξ = v/E` and the
//! product `ka` (see [`BarrierPoint`]).
//!
//! Modules:
//! - [`barrier`]: closed forms for the ±iv barrier (dispersion parameters,
//!   transmission probability, resonance residuals, phase auxiliaries).
//! - [`tmatrix`]: general layer-stack solver, used as an independent oracle.
//! - [`timing`]: transmission phase, delay and phase times, opaque-limit asymptotics.
//! - [`singularity`]: spectral singularities, transmission peaks, resonance curves.
//! - [`physical`]: mapping of waveguide parameters in eV/nm to `(ξ, ka)`.
//! - [`sweep`]: batched grid evaluation shared by the command-line front end.

// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
mod error;
pub mod numeric;
pub mod parallel;
pub mod physical;
pub mod singularity;
pub mod sweep;
pub mod timing;
pub mod tmatrix;

pub use barrier::{BarrierPoint, DispersionParams, PhaseTerms, Regime, ResonanceResidual};
pub use error::{Error, Result};
pub use parallel::Execution;
pub use singularity::{Peak, SingularityPoint};
pub use timing::{DerivativeMode, TimingResult};
pub use tmatrix::{Layer, LayerStack, ScatteringAmplitudes};
