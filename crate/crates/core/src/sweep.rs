//! Batched evaluation over `(ξ, ka)` grids.
//!
//! Rows of constant `ξ` are independent and run through
//! [`parallel::map`](crate::parallel::map); inside a row the phase is unwrapped
//! sequentially, so the output does not depend on the execution mode.

use serde::Serialize;

use crate::barrier::log_transmission_raw;
use crate::error::{Error, Result};
use crate::parallel::{self, Execution};
use crate::timing::{delay_derivative, phase_along, DelayOptions, DerivativeMode};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSample {
    pub xi: f64,
    pub ka: f64,
    /// `|T|²`; infinite on a spectral singularity or beyond `f64` range.
    pub t2: f64,
    /// Unwrapped transmission phase; `None` if unwrapping failed.
    pub phase: Option<f64>,
    /// `Δτ/τ0`; `None` if the derivative stencil touches a singularity.
    pub delay_ratio: Option<f64>,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain(format!("{name} grid is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!(
            "{name} grid values must be finite and >= 0, got {v}"
        )));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain(format!("{name} grid must be ascending")));
    }
    Ok(())
}

/// One row of samples at fixed `ξ`.
pub fn evaluate_row(xi: f64, ka: &[f64], mode: DerivativeMode) -> Vec<GridSample> {
    let phases = phase_along(xi, ka);
    let opts = DelayOptions::default();
    ka.iter()
        .zip(phases)
        .map(|(&k, phase)| GridSample {
            xi,
            ka: k,
            t2: log_transmission_raw(xi, k).map_or(f64::INFINITY, f64::exp),
            phase,
            delay_ratio: delay_derivative(xi, k, mode, &opts).ok().map(|d| d.0),
        })
        .collect()
}

/// Row-major grid (`ξ` outer, `ka` inner).
pub fn evaluate_grid(xi: &[f64], ka: &[f64], mode: DerivativeMode, exec: Execution) -> Result<Vec<GridSample>> {
    check_axis("xi", xi)?;
    check_axis("ka", ka)?;
    Ok(parallel::map(xi, exec, |&x| evaluate_row(x, ka, mode))
        .into_iter()
        .flatten()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    #[test]
    fn sequential_and_parallel_agree() {
        let xi = linspace(0.1, 2.0, 7);
        let ka = linspace(0.0, 6.0, 41);
        let a = evaluate_grid(&xi, &ka, DerivativeMode::FixedXi, Execution::Sequential).unwrap();
        let b = evaluate_grid(&xi, &ka, DerivativeMode::FixedXi, Execution::Parallel).unwrap();
        assert_eq!(a.len(), 7 * 41);
        assert_eq!(a, b);
        assert_eq!(a[41].xi, xi[1]);
        assert_eq!(a[41].ka, 0.0);
        assert_eq!(a[41].t2, 1.0);
    }

    #[test]
    fn bad_axes() {
        assert!(evaluate_grid(&[], &[1.0], DerivativeMode::FixedXi, Execution::Sequential).is_err());
        assert!(evaluate_grid(&[1.0], &[2.0, 1.0], DerivativeMode::FixedXi, Execution::Sequential).is_err());
        assert!(evaluate_grid(&[-1.0], &[1.0], DerivativeMode::FixedXi, Execution::Sequential).is_err());
    }
}
