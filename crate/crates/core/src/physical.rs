//! Waveguide realisation of the ±iv barrier.
//!
//! A slab waveguide of height `2b` filled over `(-a, a)` with a medium whose
//! permittivity is `1 ∓ i·v` reduces, for the lowest transverse mode, to the
//! one-dimensional barrier problem with
//!
//! - `k0 = ω/c`, `kc = π/(2b)`, `k² = k0² − kc²`,
//! - `v = ω_p² / (2·δ·ω)` from the plasma and damping energies,
//! - `ξ = v·k0²/k²` and `ka = k·a`.
//!
//! The confinement enhances the effective contrast as the photon energy
//! approaches the mode cutoff.

use serde::Serialize;

use crate::barrier::{residual_raw, BarrierPoint};
use crate::error::{ensure_finite, Error, Result};
use crate::numeric::golden_section_max;
use crate::parallel::Execution;
use crate::singularity::{find_singularities, SearchBox, SearchOptions, SingularityPoint};

/// Physical constants used by every conversion in this module.
pub mod constants {
    /// `ħc` in eV·nm.
    pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
    /// Speed of light in m/s.
    pub const C_M_PER_S: f64 = 299_792_458.0;
    pub const NM_PER_M: f64 = 1e9;
}

use constants::{C_M_PER_S, HBAR_C_EV_NM, NM_PER_M};

/// Waveguide and material parameters. Energies in eV, lengths in nm.
///
/// `half_height_b` may be infinite, which removes the transverse confinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhysicalWaveguide {
    pub photon_energy: f64,
    pub plasma_energy: f64,
    pub damping_energy: f64,
    pub half_length_a: f64,
    pub half_height_b: f64,
}

impl PhysicalWaveguide {
    /// Vacuum wavenumber `ω/c` in nm⁻¹.
    pub fn vacuum_wavenumber(&self) -> f64 {
        self.photon_energy / HBAR_C_EV_NM
    }

    /// Transverse cutoff wavenumber `π/(2b)` in nm⁻¹.
    pub fn cutoff_wavenumber(&self) -> f64 {
        cutoff_wavenumber(self.half_height_b)
    }

    /// Photon energy of the mode cutoff in eV.
    pub fn cutoff_energy(&self) -> f64 {
        self.cutoff_wavenumber() * HBAR_C_EV_NM
    }

    /// Propagation constant `k` in nm⁻¹.
    pub fn propagation_wavenumber(&self) -> Result<f64> {
        self.validate()?;
        let k0 = self.vacuum_wavenumber();
        let kc = self.cutoff_wavenumber();
        // (k0 - kc)(k0 + kc) keeps precision just above cutoff
        let k2 = (k0 - kc) * (k0 + kc);
        if !(k2 > 0.0) {
            return Err(Error::Domain(format!(
                "photon energy {} eV is at or below the cutoff {} eV for b = {} nm",
                self.photon_energy,
                self.cutoff_energy(),
                self.half_height_b
            )));
        }
        Ok(k2.sqrt())
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("photon_energy", self.photon_energy),
            ("plasma_energy", self.plasma_energy),
            ("damping_energy", self.damping_energy),
            ("half_length_a", self.half_length_a),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.half_height_b > 0.0) {
            return Err(Error::Domain(format!(
                "half_height_b must be > 0, got {}",
                self.half_height_b
            )));
        }
        Ok(())
    }
}

fn cutoff_wavenumber(b: f64) -> f64 {
    std::f64::consts::PI / (2.0 * b)
}

/// `v = (ħω_p)² / (2·ħδ·ħω)`.
pub fn potential_strength(w: &PhysicalWaveguide) -> Result<f64> {
    w.validate()?;
    if w.damping_energy == 0.0 || w.photon_energy == 0.0 {
        return Err(Error::Domain(
            "potential strength needs nonzero damping and photon energies".into(),
        ));
    }
    Ok(w.plasma_energy * w.plasma_energy / (2.0 * w.damping_energy * w.photon_energy))
}

/// `(ξ, ka)` of the guided mode.
pub fn to_dimensionless(w: &PhysicalWaveguide) -> Result<BarrierPoint> {
    let v = potential_strength(w)?;
    let k = w.propagation_wavenumber()?;
    let k0 = w.vacuum_wavenumber();
    let ratio = k0 / k;
    BarrierPoint::new(v * ratio * ratio, k * w.half_length_a)
}

/// Photon energy at which the mode of the given geometry has the requested
/// `ka`. The `photon_energy` field of `w` is ignored.
pub fn photon_energy_for(w: &PhysicalWaveguide, ka: f64) -> Result<f64> {
    ensure_finite("ka", ka)?;
    if !(ka > 0.0 && w.half_length_a > 0.0) {
        return Err(Error::Domain("ka and half_length_a must be > 0".into()));
    }
    let k = ka / w.half_length_a;
    Ok(k.hypot(w.cutoff_wavenumber()) * HBAR_C_EV_NM)
}

/// Reference time `τ0 = 2a·dk/dω = 2a·k0/(c·k)` in seconds.
pub fn tau0_physical(w: &PhysicalWaveguide) -> Result<f64> {
    let k = w.propagation_wavenumber()?;
    let k0 = w.vacuum_wavenumber();
    Ok(2.0 * w.half_length_a / NM_PER_M * k0 / (C_M_PER_S * k))
}

/// Result of [`solve_geometry_for_singularity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometrySolution {
    /// Half-height `b` in nm.
    pub half_height_b: f64,
    pub xi: f64,
    pub ka: f64,
    /// Scaled resonance residual at `(xi, ka)`.
    pub residual_norm: f64,
    /// The exact singularity confirmed next to `(xi, ka)`.
    pub singularity: SingularityPoint,
}

/// Residual norm above which a minimum along the geometry curve is rejected.
pub const GEOMETRY_ACCEPT: f64 = 1e-2;
const SAMPLES_PER_UNIT_KA: f64 = 400.0;

/// Finds the half-height `b` that tunes the mode onto a spectral singularity.
///
/// At fixed energies and `a`, varying `b` moves `(ξ, ka)` along the curve
/// `ξ·ka² = v·k0²·a²`, parameterised here by `ka ∈ (0, k0·a)`. Local minima of
/// the scaled residual along that curve are refined, those below
/// [`GEOMETRY_ACCEPT`] are cross-checked against an exact root from
/// [`find_singularities`], and the one nearest the cutoff (smallest `ka`) wins.
pub fn solve_geometry_for_singularity(
    photon_energy: f64,
    plasma_energy: f64,
    damping_energy: f64,
    half_length_a: f64,
) -> Result<GeometrySolution> {
    for (name, v) in [
        ("photon_energy", photon_energy),
        ("plasma_energy", plasma_energy),
        ("damping_energy", damping_energy),
        ("half_length_a", half_length_a),
    ] {
        ensure_finite(name, v)?;
        if v < 0.0 {
            return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
        }
    }
    if photon_energy == 0.0 || damping_energy == 0.0 || half_length_a == 0.0 {
        return Err(Error::Domain(
            "photon energy, damping energy and half length must be > 0".into(),
        ));
    }
    if plasma_energy == 0.0 {
        return Err(Error::NotFound("no gain: plasma energy is zero".into()));
    }
    let probe = PhysicalWaveguide {
        photon_energy,
        plasma_energy,
        damping_energy,
        half_length_a,
        half_height_b: f64::INFINITY,
    };
    let v = potential_strength(&probe)?;
    let k0 = probe.vacuum_wavenumber();
    let ka_max = k0 * half_length_a;
    let curve = v * ka_max * ka_max;
    // the Euclidean form is smooth, so the golden-section minimum is well defined
    let residual = |ka: f64| residual_raw(curve / (ka * ka), ka).scaled_denominator().sqrt();

    let n = (ka_max * SAMPLES_PER_UNIT_KA).ceil().max(16.0) as usize;
    let ka_at = |i: usize| ka_max * i as f64 / n as f64;
    let vals: Vec<f64> = (0..n)
        .map(|i| if i == 0 { f64::INFINITY } else { residual(ka_at(i)) })
        .collect();

    for i in 1..n - 1 {
        if !(vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1]) {
            continue;
        }
        let (ka, neg) = golden_section_max(|x| -residual(x), ka_at(i - 1), ka_at(i + 1), 1e-14);
        if -neg > GEOMETRY_ACCEPT {
            continue;
        }
        let xi = curve / (ka * ka);
        let norm = residual_raw(xi, ka).norm();
        let bx = SearchBox::new((0.9 * xi, 1.1 * xi), (0.9 * ka, 1.1 * ka))?;
        let opts = SearchOptions {
            grid_density: 40.0 / ka.min(xi).max(1e-3),
            exec: Execution::Sequential,
            ..SearchOptions::default()
        };
        let roots = find_singularities(&bx, &opts)?;
        let Some(root) = roots
            .into_iter()
            .min_by(|p, q| (p.xi - xi).hypot(p.ka - ka).total_cmp(&(q.xi - xi).hypot(q.ka - ka)))
        else {
            continue;
        };
        let k = ka / half_length_a;
        let kc = (k0 - k).sqrt() * (k0 + k).sqrt();
        return Ok(GeometrySolution {
            half_height_b: std::f64::consts::PI / (2.0 * kc),
            xi,
            ka,
            residual_norm: norm,
            singularity: root,
        });
    }
    Err(Error::NotFound(format!(
        "no geometry with residual below {GEOMETRY_ACCEPT} for ka in (0, {ka_max})"
    )))
}
