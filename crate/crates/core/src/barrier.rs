//! Closed-form evaluation for the two-layer ±iv barrier.
//!
//! All hyperbolic functions of `s = 2δ·ka` are evaluated relative to
//! `cosh(s)`: every quantity is stored as a scaled mantissa together with
//! `log_scale = ln cosh(s)`. Nothing overflows for any finite input, which keeps
//! the under-gain searches (δ·ka well above 20) usable.

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};

/// The dimensionless pair `(ξ, ka)` that fixes the barrier problem.
///
/// `ξ = v/E` is the gain/loss contrast and `ka` the wavenumber times the
/// half-width of the barrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarrierPoint {
    xi: f64,
    ka: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `ξ = 0`, no potential.
    Free,
    /// `ξ < 1`, i.e. `E > v`.
    UnderGain,
    /// `ξ = 1`.
    Critical,
    /// `ξ > 1`, i.e. `E < v`.
    OverGain,
}

impl BarrierPoint {
    pub fn new(xi: f64, ka: f64) -> Result<Self> {
        ensure_finite("xi", xi)?;
        ensure_finite("ka", ka)?;
        if xi < 0.0 {
            return Err(Error::Domain(format!("xi must be >= 0, got {xi}")));
        }
        if ka < 0.0 {
            return Err(Error::Domain(format!("ka must be >= 0, got {ka}")));
        }
        Ok(Self { xi, ka })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn ka(&self) -> f64 {
        self.ka
    }

    pub fn regime(&self) -> Regime {
        if self.xi == 0.0 {
            Regime::Free
        } else if self.xi < 1.0 {
            Regime::UnderGain
        } else if self.xi == 1.0 {
            Regime::Critical
        } else {
            Regime::OverGain
        }
    }

    pub fn dispersion(&self) -> DispersionParams {
        DispersionParams::from_xi_unchecked(self.xi)
    }
}

/// Propagative (`gamma`) and evanescent (`delta`) parameters of the active
/// regions, defined through `sqrt(E ∓ iv) = k (γ ∓ iδ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DispersionParams {
    pub gamma: f64,
    pub delta: f64,
}

impl DispersionParams {
    pub fn from_xi(xi: f64) -> Result<Self> {
        ensure_finite("xi", xi)?;
        if xi < 0.0 {
            return Err(Error::Domain(format!("xi must be >= 0, got {xi}")));
        }
        Ok(Self::from_xi_unchecked(xi))
    }

    pub(crate) fn from_xi_unchecked(xi: f64) -> Self {
        let modulus = 1f64.hypot(xi);
        let gamma = ((modulus + 1.0) / 2.0).sqrt();
        // 2γδ = ξ; avoids the cancellation in sqrt((|1+iξ| - 1)/2) at small ξ.
        let delta = xi.abs() / (2.0 * gamma);
        Self { gamma, delta }
    }

    /// `γ² + δ² = sqrt(1 + ξ²)`.
    pub fn modulus(&self) -> f64 {
        self.gamma * self.gamma + self.delta * self.delta
    }
}

/// `ln cosh(s)` without overflow.
pub(crate) fn ln_cosh(s: f64) -> f64 {
    let s = s.abs();
    if s < 20.0 {
        s.cosh().ln()
    } else {
        s + (-2.0 * s).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// Residuals of the resonance system
///
/// ```text
/// r1 = γ² cos(2γka) + δ² cosh(2δka)
/// r2 = γ³ sin(2γka) − δ³ sinh(2δka)
/// ```
///
/// stored as `r = r_scaled · exp(log_scale)`. Both vanish exactly at a
/// spectral singularity, where the transmission probability diverges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResonanceResidual {
    pub r1_scaled: f64,
    pub r2_scaled: f64,
    pub log_scale: f64,
}

impl ResonanceResidual {
    /// `max(|r1|, |r2|) / cosh(2δka)`.
    pub fn norm(&self) -> f64 {
        self.r1_scaled.abs().max(self.r2_scaled.abs())
    }

    /// Denominator of the transmission probability divided by `cosh²(2δka)`.
    pub fn scaled_denominator(&self) -> f64 {
        self.r1_scaled * self.r1_scaled + self.r2_scaled * self.r2_scaled
    }

    pub fn r1(&self) -> f64 {
        self.r1_scaled * self.log_scale.exp()
    }

    pub fn r2(&self) -> f64 {
        self.r2_scaled * self.log_scale.exp()
    }

    /// `(sign, ln|r1|)`.
    pub fn r1_signed_log(&self) -> (f64, f64) {
        signed_log(self.r1_scaled, self.log_scale)
    }

    /// `(sign, ln|r2|)`.
    pub fn r2_signed_log(&self) -> (f64, f64) {
        signed_log(self.r2_scaled, self.log_scale)
    }
}

fn signed_log(scaled: f64, log_scale: f64) -> (f64, f64) {
    let sign = if scaled == 0.0 { 0.0 } else { scaled.signum() };
    (sign, scaled.abs().ln() + log_scale)
}

/// Auxiliaries `A, B, C, D` entering `tan φ = (γ²A − δ²B) / (γ²C − δ²D)`, all
/// scaled by the common factor `exp(-log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseTerms {
    pub a_term: f64,
    pub b_term: f64,
    pub c_term: f64,
    pub d_term: f64,
    pub log_scale: f64,
    pub dispersion: DispersionParams,
}

impl PhaseTerms {
    /// `γ²A − δ²B`, scaled.
    pub fn numerator(&self) -> f64 {
        let DispersionParams { gamma, delta } = self.dispersion;
        gamma * gamma * self.a_term - delta * delta * self.b_term
    }

    /// `γ²C − δ²D`, scaled.
    pub fn denominator(&self) -> f64 {
        let DispersionParams { gamma, delta } = self.dispersion;
        gamma * gamma * self.c_term - delta * delta * self.d_term
    }

    /// Phase of the transmission amplitude on the principal branch `(-π, π]`.
    pub fn phase(&self) -> f64 {
        self.numerator().atan2(self.denominator())
    }

    /// `(A, B, C, D)` without scaling; may overflow to infinity for large δ·ka.
    pub fn unscaled(&self) -> (f64, f64, f64, f64) {
        let f = self.log_scale.exp();
        (self.a_term * f, self.b_term * f, self.c_term * f, self.d_term * f)
    }
}

pub(crate) fn residual_raw(xi: f64, ka: f64) -> ResonanceResidual {
    let DispersionParams { gamma, delta } = DispersionParams::from_xi_unchecked(xi);
    let theta = 2.0 * gamma * ka;
    let s = 2.0 * delta * ka;
    let log_scale = ln_cosh(s);
    let damp = (-log_scale).exp();
    let g2 = gamma * gamma;
    let d2 = delta * delta;
    ResonanceResidual {
        r1_scaled: g2 * theta.cos() * damp + d2,
        r2_scaled: g2 * gamma * theta.sin() * damp - d2 * delta * s.tanh(),
        log_scale,
    }
}

pub(crate) fn phase_terms_raw(xi: f64, ka: f64) -> PhaseTerms {
    let dispersion = DispersionParams::from_xi_unchecked(xi);
    let DispersionParams { gamma, delta } = dispersion;
    let x = 2.0 * ka;
    let s = delta * x;
    let log_scale = ln_cosh(s);
    let damp = (-log_scale).exp();
    let (sin_x, cos_x) = x.sin_cos();
    let (sin_g, cos_g) = (gamma * x).sin_cos();
    // sinh/cosh -> tanh/1 after scaling
    let tanh_s = s.tanh();
    PhaseTerms {
        a_term: (gamma * sin_g * cos_x - cos_g * sin_x) * damp,
        b_term: delta * tanh_s * cos_x + sin_x,
        c_term: (gamma * sin_g * sin_x + cos_g * cos_x) * damp,
        d_term: delta * tanh_s * sin_x - cos_x,
        log_scale,
        dispersion,
    }
}

/// Natural log of the transmission probability, or `SingularPoint` when the
/// denominator vanishes exactly.
pub(crate) fn log_transmission_raw(xi: f64, ka: f64) -> Result<f64> {
    if ka == 0.0 || xi == 0.0 {
        return Ok(0.0);
    }
    let res = residual_raw(xi, ka);
    let den = res.scaled_denominator();
    if den == 0.0 {
        return Err(Error::SingularPoint { xi, ka });
    }
    // (1 - 2γ²)² = (γ² + δ²)² = 1 + ξ²
    Ok((xi * xi).ln_1p() - 2.0 * res.log_scale - den.ln())
}

pub fn dispersion_params(xi: f64) -> Result<DispersionParams> {
    DispersionParams::from_xi(xi)
}

/// Transmission probability `|T_L|²` of the ±iv barrier.
///
/// Can exceed one in the active medium. Returns `Error::SingularPoint` if the
/// point is a spectral singularity to machine precision; for very opaque
/// barriers the result underflows gracefully towards zero.
pub fn transmission_probability(p: BarrierPoint) -> Result<f64> {
    let log_t2 = log_transmission_raw(p.xi, p.ka)?;
    let t2 = log_t2.exp();
    if t2.is_infinite() {
        return Err(Error::Unrepresentable(format!(
            "|T|^2 = exp({log_t2}) at xi = {}, ka = {}",
            p.xi, p.ka
        )));
    }
    Ok(t2)
}

/// `ln |T_L|²`; finite wherever the probability itself might overflow.
pub fn log_transmission_probability(p: BarrierPoint) -> Result<f64> {
    log_transmission_raw(p.xi, p.ka)
}

pub fn resonance_residual(p: BarrierPoint) -> ResonanceResidual {
    residual_raw(p.xi, p.ka)
}

pub fn phase_terms(p: BarrierPoint) -> PhaseTerms {
    phase_terms_raw(p.xi, p.ka)
}
