//! Transmission phase, delay time and phase time.
//!
//! With `φ = arg T_L`, the delay relative to free propagation over `2a` is
//! `Δτ/τ0 = ½ dφ/d(ka)` and the phase time is `τ/τ0 = 1 + Δτ/τ0`.
//!
//! The derivative can be taken in two ways (see [`DerivativeMode`]): with the
//! contrast `ξ` held fixed, as for curves labelled by `ξ`, or with the physical
//! potential strength `v` held fixed so that `ξ = v/k²` moves with `k`. Only the
//! second one carries the `1/ka` tail of [`opaque_asymptotic`]; with `ξ` fixed
//! the phase time dies off exponentially in the opaque limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::barrier::{phase_terms_raw, residual_raw, BarrierPoint, DispersionParams};
use crate::error::{Error, Result};
use crate::numeric::{richardson_derivative, wrap_angle};
use crate::parallel::{self, Execution};
use crate::singularity::SingularityPoint;

/// Samples whose scaled transmission denominator falls below this are treated
/// as sitting on a spectral singularity.
pub const SINGULAR_DENOMINATOR: f64 = 1e-20;

/// Default exclusion radius around located singularities, in `(ξ, ka)`.
pub const DEFAULT_EXCLUSION_RADIUS: f64 = 1e-3;

const UNWRAP_STEP: f64 = 0.05;
const UNWRAP_DEPTH: u32 = 48;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    /// `γ`, `δ` held constant while differentiating in `ka`.
    #[default]
    FixedXi,
    /// Potential strength `v` held constant: `ξ(ka') = ξ·(ka/ka')²`.
    FixedV,
}

impl std::str::FromStr for DerivativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-xi" => Ok(Self::FixedXi),
            "fixed-v" => Ok(Self::FixedV),
            other => Err(Error::Domain(format!(
                "unknown derivative mode '{other}' (expected fixed-xi or fixed-v)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimingResult {
    /// Unwrapped `arg T_L` in radians, continuous from `phase(ξ, 0) = 0`.
    pub phase: f64,
    /// `Δτ/τ0`.
    pub delay_ratio: f64,
    /// `τ/τ0 = 1 + Δτ/τ0`.
    pub time_ratio: f64,
    /// Estimated absolute error of `delay_ratio`.
    pub derivative_error: f64,
}

impl TimingResult {
    fn free() -> Self {
        Self {
            phase: 0.0,
            delay_ratio: 0.0,
            time_ratio: 1.0,
            derivative_error: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayOptions {
    /// Finite-difference step in `ka`; defaults to `1e-4·max(1, ka)`.
    pub step: Option<f64>,
    /// Target relative accuracy of the derivative before the step is refined.
    pub rel_tol: f64,
}

impl Default for DelayOptions {
    fn default() -> Self {
        Self {
            step: None,
            rel_tol: 1e-7,
        }
    }
}

pub(crate) fn raw_phase(xi: f64, ka: f64) -> f64 {
    phase_terms_raw(xi, ka).phase()
}

fn flagged(xi: f64, ka: f64) -> bool {
    xi > 0.0 && ka != 0.0 && residual_raw(xi, ka).scaled_denominator() < SINGULAR_DENOMINATOR
}

/// Phase increment from `a` to `b`, bisecting until every piece changes by
/// less than π/2 and agrees with its two halves.
fn unwrap_increment<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fb: f64, depth: u32) -> Option<f64> {
    let full = wrap_angle(fb - fa);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let halves = wrap_angle(fm - fa) + wrap_angle(fb - fm);
    if full.abs() < PI / 2.0 && (full - halves).abs() < 1e-9 {
        return Some(full);
    }
    if depth == 0 {
        return None;
    }
    Some(unwrap_increment(f, a, m, fa, fm, depth - 1)? + unwrap_increment(f, m, b, fm, fb, depth - 1)?)
}

/// Unwrapped transmission phase at `p`, tracked continuously from `ka = 0`.
///
/// Fails with `SingularPoint` when the path from the origin crosses a spectral
/// singularity, where the phase jumps discontinuously.
pub fn transmission_phase(p: BarrierPoint) -> Result<f64> {
    let (xi, ka) = (p.xi(), p.ka());
    if xi == 0.0 || ka == 0.0 {
        return Ok(0.0);
    }
    let f = |t: f64| raw_phase(xi, t);
    let n = (ka / UNWRAP_STEP).ceil().max(1.0) as usize;
    let mut acc = 0.0;
    let (mut a, mut fa) = (0.0, 0.0);
    for i in 1..=n {
        let b = if i == n { ka } else { ka * i as f64 / n as f64 };
        let fb = f(b);
        acc += unwrap_increment(&f, a, b, fa, fb, UNWRAP_DEPTH).ok_or(Error::SingularPoint { xi, ka: b })?;
        a = b;
        fa = fb;
    }
    Ok(acc)
}

/// Unwrapped phase along an ascending `ka` grid for fixed `ξ`.
///
/// Entries are `None` where the segment leading to the sample could not be
/// resolved (a singular crossing); tracking then resumes with the smallest
/// consistent jump.
pub fn phase_along(xi: f64, grid: &[f64]) -> Vec<Option<f64>> {
    let f = |t: f64| raw_phase(xi, t);
    let mut out = Vec::with_capacity(grid.len());
    let (mut a, mut acc) = (0.0, 0.0);
    for &b in grid {
        if xi == 0.0 {
            out.push(Some(0.0));
            continue;
        }
        let mut ok = true;
        let n = ((b - a).abs() / UNWRAP_STEP).ceil().max(1.0) as usize;
        for i in 1..=n {
            let x1 = if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
            let x0 = if i == 1 {
                a
            } else {
                a + (b - a) * (i - 1) as f64 / n as f64
            };
            let (f0, f1) = (f(x0), f(x1));
            match unwrap_increment(&f, x0, x1, f0, f1, UNWRAP_DEPTH) {
                Some(d) => acc += d,
                None => {
                    acc += wrap_angle(f1 - f0);
                    ok = false;
                }
            }
        }
        a = b;
        out.push(ok.then_some(acc));
    }
    out
}

/// `Δτ/τ0` and `τ/τ0` at `p` with default options.
pub fn delay_time(p: BarrierPoint, mode: DerivativeMode) -> Result<TimingResult> {
    delay_time_with(p, mode, &DelayOptions::default())
}

/// Derivative of the phase at fixed `ξ` label, without unwrapping.
pub(crate) fn delay_derivative(xi: f64, ka: f64, mode: DerivativeMode, opts: &DelayOptions) -> Result<(f64, f64)> {
    if xi == 0.0 {
        return Ok((0.0, 0.0));
    }
    if ka == 0.0 {
        return match mode {
            // φ is odd in ka with no linear term
            DerivativeMode::FixedXi => Ok((0.0, 0.0)),
            DerivativeMode::FixedV => Err(Error::Domain(
                "fixed-v derivative needs ka > 0 (xi = v/k^2 diverges at k = 0)".into(),
            )),
        };
    }
    let xi_at = |t: f64| match mode {
        DerivativeMode::FixedXi => xi,
        DerivativeMode::FixedV => xi * (ka / t) * (ka / t),
    };
    let phase = |t: f64| raw_phase(xi_at(t), t);
    let mut h = opts.step.unwrap_or(1e-4 * ka.max(1.0));
    if mode == DerivativeMode::FixedV {
        h = h.min(0.25 * ka);
    }
    let mut best = None;
    for _ in 0..6 {
        for t in [ka - h, ka - 0.5 * h, ka, ka + 0.5 * h, ka + h] {
            if flagged(xi_at(t), t) {
                return Err(Error::NearSingularDerivative { xi, ka });
            }
        }
        let d = richardson_derivative(phase, |a, b| wrap_angle(a - b), ka, h);
        let done = d.error <= opts.rel_tol * d.value.abs().max(1.0);
        best = Some(d);
        if done || opts.step.is_some() {
            break;
        }
        h *= 0.25;
    }
    let d = best.expect("at least one derivative evaluation");
    if !d.value.is_finite() {
        return Err(Error::NearSingularDerivative { xi, ka });
    }
    Ok((0.5 * d.value, 0.5 * d.error))
}

pub fn delay_time_with(p: BarrierPoint, mode: DerivativeMode, opts: &DelayOptions) -> Result<TimingResult> {
    let (xi, ka) = (p.xi(), p.ka());
    if xi == 0.0 {
        return Ok(TimingResult::free());
    }
    let (delay_ratio, derivative_error) = delay_derivative(xi, ka, mode, opts)?;
    let phase = transmission_phase(p)?;
    Ok(TimingResult {
        phase,
        delay_ratio,
        time_ratio: 1.0 + delay_ratio,
        derivative_error,
    })
}

/// Opaque-barrier expansion of the phase time,
/// `τ/τ0 ≈ (2/δ²) cos(2γka) e^{−2δka} + δ / (ka (γ² + δ²))`.
///
/// This is the large-`ka` form of the fixed-`v` phase time.
pub fn opaque_asymptotic(p: BarrierPoint) -> Result<f64> {
    let (xi, ka) = (p.xi(), p.ka());
    if xi == 0.0 {
        return Err(Error::Domain(
            "opaque expansion undefined for xi = 0 (delta = 0)".into(),
        ));
    }
    if ka == 0.0 {
        return Err(Error::Domain("opaque expansion needs ka > 0".into()));
    }
    let DispersionParams { gamma, delta } = p.dispersion();
    let oscillating = 2.0 / (delta * delta) * (2.0 * gamma * ka).cos() * (-2.0 * delta * ka).exp();
    Ok(oscillating + delta / (ka * (gamma * gamma + delta * delta)))
}

/// One sample of a delay curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub xi: f64,
    pub ka: f64,
    pub phase: Option<f64>,
    pub delay_ratio: Option<f64>,
    pub derivative_error: Option<f64>,
    /// Within the exclusion radius of a singularity, or the derivative failed.
    pub flagged: bool,
}

impl CurveSample {
    pub fn time_ratio(&self) -> Option<f64> {
        self.delay_ratio.map(|d| 1.0 + d)
    }
}

/// Delay curve along an ascending `ka` grid at fixed `ξ`.
///
/// The phase is unwrapped sequentially along the grid; derivatives are
/// independent per sample. Samples closer than `exclusion_radius` to any of
/// `singularities` are flagged rather than differentiated.
pub fn delay_curve(
    xi: f64,
    grid: &[f64],
    mode: DerivativeMode,
    singularities: &[SingularityPoint],
    exclusion_radius: f64,
    exec: Execution,
) -> Vec<CurveSample> {
    let phases = phase_along(xi, grid);
    let opts = DelayOptions::default();
    let idx: Vec<usize> = (0..grid.len()).collect();
    parallel::map(&idx, exec, |&i| {
        let ka = grid[i];
        let near = singularities
            .iter()
            .any(|s| (s.xi - xi).hypot(s.ka - ka) < exclusion_radius);
        let deriv = if near {
            None
        } else {
            delay_derivative(xi, ka, mode, &opts).ok()
        };
        CurveSample {
            xi,
            ka,
            phase: phases[i],
            delay_ratio: deriv.map(|d| d.0),
            derivative_error: deriv.map(|d| d.1),
            flagged: near || deriv.is_none(),
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HartmanRow {
    pub xi: f64,
    pub ka: f64,
    pub time_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HartmanSummary {
    pub xi: f64,
    /// `τ/τ0` at `ka_max`.
    pub final_time_ratio: f64,
    /// Largest sampled `ka` with `|τ/τ0| > threshold`.
    pub last_ka_above: Option<f64>,
    /// Window maxima of `|τ/τ0|` over the upper half of the range never grow.
    pub envelope_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HartmanScan {
    pub threshold: f64,
    pub rows: Vec<HartmanRow>,
    pub summaries: Vec<HartmanSummary>,
}

/// Tabulates `τ/τ0` up to `ka_max` for each contrast and summarises how it
/// vanishes in the opaque limit.
pub fn hartman_limit_scan(
    xi_list: &[f64],
    ka_max: f64,
    samples: usize,
    mode: DerivativeMode,
    exec: Execution,
) -> Result<HartmanScan> {
    const THRESHOLD: f64 = 0.05;
    const WINDOWS: usize = 4;
    if !(ka_max.is_finite() && ka_max > 0.0) {
        return Err(Error::Domain(format!("ka_max must be > 0, got {ka_max}")));
    }
    if samples < 2 * WINDOWS {
        return Err(Error::Domain(format!("need at least {} samples", 2 * WINDOWS)));
    }
    if let Some(bad) = xi_list.iter().find(|&&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::Domain(format!("hartman scan needs xi > 0, got {bad}")));
    }
    let grid: Vec<f64> = (1..=samples).map(|i| ka_max * i as f64 / samples as f64).collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &xi in xi_list {
        let opts = DelayOptions::default();
        let values = parallel::map(&grid, exec, |&ka| {
            delay_derivative(xi, ka, mode, &opts).ok().map(|(d, _)| 1.0 + d)
        });
        let row_start = rows.len();
        for (&ka, v) in grid.iter().zip(&values) {
            if let Some(time_ratio) = *v {
                rows.push(HartmanRow { xi, ka, time_ratio });
            }
        }
        let mine = &rows[row_start..];
        let final_time_ratio = values.last().copied().flatten().unwrap_or(f64::NAN);
        let last_ka_above = mine.iter().rev().find(|r| r.time_ratio.abs() > THRESHOLD).map(|r| r.ka);
        let upper: Vec<&HartmanRow> = mine.iter().filter(|r| r.ka >= 0.5 * ka_max).collect();
        let chunk = upper.len().div_ceil(WINDOWS).max(1);
        let maxima: Vec<f64> = upper
            .chunks(chunk)
            .map(|w| w.iter().map(|r| r.time_ratio.abs()).fold(0.0, f64::max))
            .collect();
        let envelope_decreasing = maxima.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
        summaries.push(HartmanSummary {
            xi,
            final_time_ratio,
            last_ka_above,
            envelope_decreasing,
        });
    }
    Ok(HartmanScan {
        threshold: THRESHOLD,
        rows,
        summaries,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::tmatrix::{pt_barrier_stack, solve_stack};
    use approx::assert_relative_eq;

    fn pt(xi: f64, ka: f64) -> BarrierPoint {
        BarrierPoint::new(xi, ka).unwrap()
    }

    #[test]
    fn free_space_has_no_delay() {
        for mode in [DerivativeMode::FixedXi, DerivativeMode::FixedV] {
            let t = delay_time(pt(0.0, 3.0), mode).unwrap();
            assert_eq!(t.delay_ratio, 0.0);
            assert_eq!(t.time_ratio, 1.0);
            assert_eq!(t.phase, 0.0);
        }
        assert_eq!(transmission_phase(pt(0.0, 5.0)).unwrap(), 0.0);
        assert_eq!(transmission_phase(pt(1.5, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn phase_matches_oracle_argument() {
        let t = transmission_phase(pt(1.0, 1.0)).unwrap();
        let oracle = solve_stack(1.0, &pt_barrier_stack(1.0).unwrap()).unwrap();
        // small phase, so the continuous branch coincides with the principal one
        assert!((t - oracle.amplitudes.t_left.arg()).abs() < 1e-8);
        assert_relative_eq!(t, -0.032586466937993015089, max_relative = 1e-9);
    }

    #[test]
    fn unwrapped_phase_tracks_the_opaque_slope() {
        // φ ≈ −2ka + const for an opaque barrier, far beyond the principal range
        let p1 = transmission_phase(pt(2.0, 20.0)).unwrap();
        let p2 = transmission_phase(pt(2.0, 30.0)).unwrap();
        assert!(p1 < -30.0);
        assert!((p2 - p1 + 20.0).abs() < 1e-6);
    }

    #[test]
    fn fixed_xi_delays_match_reference() {
        // dφ/d(ka)/2 from 50-digit numerical differentiation of arg T_L
        let cases = [
            (2.0, 1.0, -15.044890689590450945),
            (0.5, 3.0, -0.065894668002412412),
            (0.4, 7.0, -0.052777565178052022),
        ];
        for (xi, ka, expected) in cases {
            let t = delay_time(pt(xi, ka), DerivativeMode::FixedXi).unwrap();
            assert_relative_eq!(t.delay_ratio, expected, max_relative = 1e-7);
            assert_eq!(t.time_ratio, 1.0 + t.delay_ratio);
            assert!(t.derivative_error < 1e-6);
        }
    }

    #[test]
    fn fixed_v_delay_matches_reference() {
        let t = delay_time(pt(1.0, 10.0), DerivativeMode::FixedV).unwrap();
        assert_relative_eq!(t.time_ratio, 0.031063623276675420, max_relative = 1e-6);
        let t = delay_time(pt(1.0, 20.0), DerivativeMode::FixedV).unwrap();
        assert_relative_eq!(t.time_ratio, 0.016089978200765649, max_relative = 1e-6);
        // with ξ held fixed the phase time is exponentially small instead
        let t = delay_time(pt(1.0, 20.0), DerivativeMode::FixedXi).unwrap();
        assert!((t.time_ratio - 1.2409893001385254e-7).abs() < 1e-9);
    }

    #[test]
    fn fixed_v_needs_positive_ka() {
        assert!(delay_time(pt(1.0, 0.0), DerivativeMode::FixedV).is_err());
        let t = delay_time(pt(1.0, 0.0), DerivativeMode::FixedXi).unwrap();
        assert_eq!(t.delay_ratio, 0.0);
    }

    #[test]
    fn asymptotic_expansion_values() {
        // (2/δ²)cos(2γ·20)e^{−40δ} + δ/(20·√2)
        let v = opaque_asymptotic(pt(1.0, 20.0)).unwrap();
        assert_relative_eq!(v, 0.016089976231156696, max_relative = 1e-12);
        assert!(opaque_asymptotic(pt(1.0, 1e6)).unwrap() < 1e-6);
        assert!(opaque_asymptotic(pt(0.0, 5.0)).is_err());
        assert!(opaque_asymptotic(pt(1.0, 0.0)).is_err());
    }

    #[test]
    fn asymptotic_expansion_agrees_with_fixed_v_delay() {
        let full = delay_time(pt(1.0, 10.0), DerivativeMode::FixedV).unwrap().time_ratio;
        let approx = opaque_asymptotic(pt(1.0, 10.0)).unwrap();
        assert!(((full - approx) / full).abs() < 0.02);
        let full = delay_time(pt(1.0, 20.0), DerivativeMode::FixedV).unwrap().time_ratio;
        let approx = opaque_asymptotic(pt(1.0, 20.0)).unwrap();
        assert!(((full - approx) / full).abs() < 0.05);
    }

    #[test]
    fn negative_delay_in_over_gain() {
        let any_negative = (1..400).any(|i| {
            let ka = 4.0 * i as f64 / 400.0;
            delay_time(pt(2.0, ka), DerivativeMode::FixedXi).unwrap().delay_ratio < 0.0
        });
        assert!(any_negative);
    }

    #[test]
    fn hartman_scan_vanishes() {
        let scan = hartman_limit_scan(&[1.0], 40.0, 200, DerivativeMode::FixedV, Execution::Sequential).unwrap();
        let s = scan.summaries[0];
        assert!(s.final_time_ratio < 0.01 && s.final_time_ratio > 0.0);
        assert!(s.envelope_decreasing);
        assert!(s.last_ka_above.unwrap() < 20.0);
        let scan = hartman_limit_scan(&[0.5], 80.0, 200, DerivativeMode::FixedXi, Execution::Sequential).unwrap();
        assert!(scan.summaries[0].final_time_ratio.abs() < 1e-3);
        assert!(hartman_limit_scan(&[0.0], 40.0, 100, DerivativeMode::FixedXi, Execution::Sequential).is_err());
    }

    #[test]
    fn curve_flags_exclusion_zone() {
        let sing = SingularityPoint {
            xi: 2.0,
            ka: 1.0,
            residual_norm: 0.0,
            newton_iterations: 0,
        };
        let grid = [0.5, 0.9995, 1.5];
        let c = delay_curve(
            2.0,
            &grid,
            DerivativeMode::FixedXi,
            &[sing],
            1e-3,
            Execution::Sequential,
        );
        assert!(!c[0].flagged && c[1].flagged && !c[2].flagged);
        assert!(c[1].delay_ratio.is_none());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("fixed-xi".parse::<DerivativeMode>().unwrap(), DerivativeMode::FixedXi);
        assert_eq!("fixed-v".parse::<DerivativeMode>().unwrap(), DerivativeMode::FixedV);
        assert!("xi".parse::<DerivativeMode>().is_err());
    }
}
