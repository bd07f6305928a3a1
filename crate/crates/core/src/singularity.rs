//! Spectral singularities and transmission peaks of the ±iv barrier.
//!
//! Singularities are the common zeros of the two resonance residuals
//! (see [`crate::barrier::ResonanceResidual`]). They are located by a coarse
//! sign scan followed by damped Newton iteration on the scaled residuals, which
//! stay smooth where the transmission probability itself blows up.

use serde::Serialize;

use crate::barrier::{log_transmission_raw, residual_raw};
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section_max, linspace, parabolic_max};
use crate::parallel::{self, Execution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularityPoint {
    pub xi: f64,
    pub ka: f64,
    /// `max(|r1|, |r2|) / cosh(2δka)` at the root.
    pub residual_norm: f64,
    pub newton_iterations: u32,
}

/// A local maximum of `|T|²` along `ka` at fixed `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub xi: f64,
    pub ka_position: f64,
    pub height: f64,
    /// Half the distance between the crossings of `height/2`, or of the
    /// half-prominence level when the peak does not drop to half its height
    /// before the neighbouring minima.
    pub half_width: f64,
}

/// Rectangular search region in the `(ξ, ka)` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchBox {
    pub xi: (f64, f64),
    pub ka: (f64, f64),
}

impl SearchBox {
    pub fn new(xi: (f64, f64), ka: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("xi", xi), ("ka", ka)] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
                return Err(Error::Domain(format!(
                    "{name} range must satisfy 0 < lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { xi, ka })
    }

    fn contains(&self, xi: f64, ka: f64) -> bool {
        xi >= self.xi.0 && xi <= self.xi.1 && ka >= self.ka.0 && ka <= self.ka.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    /// Coarse-grid samples per unit length along each axis.
    pub grid_density: f64,
    /// Acceptance threshold on the scaled residual norm.
    pub tol: f64,
    pub max_iterations: u32,
    pub exec: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid_density: 20.0,
            tol: 1e-10,
            max_iterations: 50,
            exec: Execution::Parallel,
        }
    }
}

const MERGE_DISTANCE: f64 = 1e-6;

fn residual_vec(xi: f64, ka: f64) -> [f64; 2] {
    let r = residual_raw(xi, ka);
    [r.r1_scaled, r.r2_scaled]
}

fn norm(r: [f64; 2]) -> f64 {
    r[0].abs().max(r[1].abs())
}

/// Damped Newton iteration from `seed`. Returns the root and the number of
/// iterations, or `None` if it does not reach `tol`.
fn newton(seed: (f64, f64), tol: f64, max_iterations: u32) -> Option<(f64, f64, f64, u32)> {
    let (mut xi, mut ka) = seed;
    let mut r = residual_vec(xi, ka);
    let mut current = norm(r);
    for it in 0..=max_iterations {
        if current < tol {
            return Some((xi, ka, current, it));
        }
        if it == max_iterations {
            break;
        }
        let hx = 1e-7 * xi.abs().max(1.0);
        let hk = 1e-7 * ka.abs().max(1.0);
        let (rxp, rxm) = (residual_vec(xi + hx, ka), residual_vec((xi - hx).max(0.0), ka));
        let dxi = xi + hx - (xi - hx).max(0.0);
        let (rkp, rkm) = (residual_vec(xi, ka + hk), residual_vec(xi, ka - hk));
        let j = [
            [(rxp[0] - rxm[0]) / dxi, (rkp[0] - rkm[0]) / (2.0 * hk)],
            [(rxp[1] - rxm[1]) / dxi, (rkp[1] - rkm[1]) / (2.0 * hk)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let sx = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let sk = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (nx, nk) = (xi + lambda * sx, ka + lambda * sk);
            if nx > 0.0 && nk > 0.0 {
                let nr = residual_vec(nx, nk);
                let nn = norm(nr);
                if nn < current {
                    xi = nx;
                    ka = nk;
                    r = nr;
                    current = nn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

fn axis(lo: f64, hi: f64, density: f64) -> Vec<f64> {
    let n = ((hi - lo) * density).ceil().max(4.0) as usize + 1;
    linspace(lo, hi, n)
}

/// Locates the spectral singularities inside `bx`.
///
/// Seeds come from coarse cells where both residuals change sign and from
/// local minima of the residual norm on the grid. Roots closer than `1e-6`
/// are merged; the result is sorted by `ka`, then `ξ`.
pub fn find_singularities(bx: &SearchBox, opts: &SearchOptions) -> Result<Vec<SingularityPoint>> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tol must be > 0, got {}", opts.tol)));
    }
    if !(opts.grid_density > 0.0 && opts.grid_density.is_finite()) {
        return Err(Error::Domain(format!(
            "grid density must be > 0, got {}",
            opts.grid_density
        )));
    }
    let xs = axis(bx.xi.0, bx.xi.1, opts.grid_density);
    let ks = axis(bx.ka.0, bx.ka.1, opts.grid_density);
    let (nx, nk) = (xs.len(), ks.len());

    let rows: Vec<usize> = (0..nx).collect();
    let grid: Vec<Vec<[f64; 2]>> = parallel::map(&rows, opts.exec, |&i| {
        ks.iter().map(|&k| residual_vec(xs[i], k)).collect()
    });

    let mut seeds = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..nk - 1 {
            let corners = [grid[i][j], grid[i + 1][j], grid[i][j + 1], grid[i + 1][j + 1]];
            let changes = |c: usize| {
                let pos = corners.iter().any(|r| r[c] > 0.0);
                let neg = corners.iter().any(|r| r[c] < 0.0);
                pos && neg
            };
            if changes(0) && changes(1) {
                seeds.push((0.5 * (xs[i] + xs[i + 1]), 0.5 * (ks[j] + ks[j + 1])));
            }
        }
    }
    for i in 0..nx {
        for j in 0..nk {
            let here = norm(grid[i][j]);
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nx as i64 || b >= nk as i64 {
                        continue;
                    }
                    if norm(grid[a as usize][b as usize]) < here {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push((xs[i], ks[j]));
            }
        }
    }

    let roots: Vec<Option<(f64, f64, f64, u32)>> =
        parallel::map(&seeds, opts.exec, |&s| newton(s, opts.tol, opts.max_iterations));
    let mut found: Vec<SingularityPoint> = roots
        .into_iter()
        .flatten()
        .filter(|&(xi, ka, _, _)| bx.contains(xi, ka))
        .map(|(xi, ka, residual_norm, newton_iterations)| SingularityPoint {
            xi,
            ka,
            residual_norm,
            newton_iterations,
        })
        .collect();
    found.sort_by(|a, b| a.ka.total_cmp(&b.ka).then(a.xi.total_cmp(&b.xi)));
    let mut merged: Vec<SingularityPoint> = Vec::new();
    for p in found {
        match merged
            .iter_mut()
            .find(|m| (m.xi - p.xi).abs() < MERGE_DISTANCE && (m.ka - p.ka).abs() < MERGE_DISTANCE)
        {
            Some(m) => {
                if p.residual_norm < m.residual_norm {
                    *m = p;
                }
            }
            None => merged.push(p),
        }
    }
    merged.sort_by(|a, b| a.ka.total_cmp(&b.ka).then(a.xi.total_cmp(&b.xi)));
    Ok(merged)
}

fn log_t2(xi: f64, ka: f64) -> f64 {
    log_transmission_raw(xi, ka).unwrap_or(f64::INFINITY)
}

/// Peaks of `|T|²` along `ka` at fixed `ξ`, sorted by position.
///
/// Grid maxima are refined by parabolic interpolation on `ln|T|²`.
pub fn peak_scan(xi: f64, ka_range: (f64, f64), grid_density: f64) -> Result<Vec<Peak>> {
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(Error::Domain(format!("xi must be >= 0, got {xi}")));
    }
    let (lo, hi) = ka_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid ka range [{lo}, {hi}]")));
    }
    if !(grid_density > 0.0 && grid_density.is_finite()) {
        return Err(Error::Domain(format!("grid density must be > 0, got {grid_density}")));
    }
    if xi == 0.0 {
        return Ok(Vec::new());
    }
    let ks = axis(lo, hi, grid_density);
    let vals: Vec<f64> = ks.iter().map(|&k| log_t2(xi, k)).collect();
    let f = |k: f64| log_t2(xi, k);
    let mut peaks = Vec::new();
    for i in 1..ks.len() - 1 {
        if !(vals[i] > vals[i - 1] && vals[i] > vals[i + 1]) {
            continue;
        }
        let (pos, log_h) = if vals[i].is_infinite() {
            (ks[i], vals[i])
        } else {
            parabolic_max(f, ks[i - 1], ks[i], ks[i + 1], 1e-13)
        };
        let height = log_h.exp();
        let half_width = half_width(&f, &ks, &vals, i, pos, log_h);
        peaks.push(Peak {
            xi,
            ka_position: pos,
            height,
            half_width,
        });
    }
    Ok(peaks)
}

/// Width at half height, with a half-prominence fallback.
fn half_width<F: Fn(f64) -> f64>(f: &F, ks: &[f64], vals: &[f64], i: usize, pos: f64, log_h: f64) -> f64 {
    // walk downhill to the neighbouring minima (or the grid ends)
    let mut l = i;
    while l > 0 && vals[l - 1] < vals[l] {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < vals.len() && vals[r + 1] < vals[r] {
        r += 1;
    }
    let height = log_h.exp();
    let base = vals[l].exp().max(vals[r].exp());
    let level = if vals[l].exp() <= 0.5 * height && vals[r].exp() <= 0.5 * height {
        0.5 * height
    } else {
        0.5 * (height + base)
    };
    let g = |k: f64| f(k).exp() - level;
    let tol = 1e-12 * pos.abs().max(1.0);
    let left = if g(ks[l]) < 0.0 {
        bisect(g, ks[l], pos, tol)
    } else {
        ks[l]
    };
    let right = if g(ks[r]) < 0.0 {
        bisect(g, pos, ks[r], tol)
    } else {
        ks[r]
    };
    let w = 0.5 * (right - left);
    if w > 0.0 {
        w
    } else {
        0.5 * (ks[1] - ks[0])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpacingStats {
    pub mean_spacing: f64,
    pub std_spacing: f64,
    pub relative_std: f64,
}

/// Mean and spread of the gaps between successive peak positions.
pub fn peak_spacing_stats(peaks: &[Peak]) -> Result<SpacingStats> {
    if peaks.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "spacing statistics need at least 3 peaks, got {}",
            peaks.len()
        )));
    }
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1].ka_position - w[0].ka_position).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(SpacingStats {
        mean_spacing: mean,
        std_spacing: std,
        relative_std: std / mean,
    })
}

/// Highest peak, i.e. the top of the probability wave packet.
pub fn highest_peak(peaks: &[Peak]) -> Option<&Peak> {
    peaks.iter().max_by(|a, b| a.height.total_cmp(&b.height))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResonancePoint {
    pub ka: f64,
    pub xi_star: f64,
    /// `|T|²` at `(xi_star, ka)`.
    pub height: f64,
}

/// For each `ka` sample, the contrast in `xi_range` that maximises `|T|²`.
///
/// A coarse scan of `xi_samples` points picks the best bracket, which is then
/// refined by golden-section search.
pub fn resonance_curve(
    ka_range: (f64, f64),
    steps: usize,
    xi_range: (f64, f64),
    xi_samples: usize,
    exec: Execution,
) -> Result<Vec<ResonancePoint>> {
    let (klo, khi) = ka_range;
    let (xlo, xhi) = xi_range;
    if !(klo > 0.0 && khi >= klo && khi.is_finite()) {
        return Err(Error::Domain(format!("invalid ka range [{klo}, {khi}]")));
    }
    if !(xlo >= 0.0 && xhi > xlo && xhi.is_finite()) {
        return Err(Error::Domain(format!("invalid xi range [{xlo}, {xhi}]")));
    }
    if steps < 2 || xi_samples < 3 {
        return Err(Error::Domain(
            "resonance curve needs steps >= 2 and xi_samples >= 3".into(),
        ));
    }
    let kas = linspace(klo, khi, steps);
    let xis = linspace(xlo, xhi, xi_samples);
    Ok(parallel::map(&kas, exec, |&ka| {
        let vals: Vec<f64> = xis.iter().map(|&x| log_t2(x, ka)).collect();
        let best = (0..vals.len())
            .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .expect("non-empty scan");
        let lo = xis[best.saturating_sub(1)];
        let hi = xis[(best + 1).min(xis.len() - 1)];
        let (xi_star, log_h) = golden_section_max(|x| log_t2(x, ka), lo, hi, 1e-12);
        ResonancePoint {
            ka,
            xi_star,
            height: log_h.exp(),
        }
    }))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::barrier::{transmission_probability, BarrierPoint};
    use approx::assert_relative_eq;

    #[test]
    fn first_singularity_in_reference_box() {
        let bx = SearchBox::new((1.5, 2.5), (0.5, 1.5)).unwrap();
        let found = find_singularities(&bx, &SearchOptions::default()).unwrap();
        assert_eq!(found.len(), 1, "{found:?}");
        let s = found[0];
        // 50-digit root of the resonance system
        assert_relative_eq!(s.xi, 1.8276556606482208197, max_relative = 1e-9);
        assert_relative_eq!(s.ka, 1.0646825505619702766, max_relative = 1e-9);
        assert!(s.residual_norm < 1e-10);
    }

    #[test]
    fn transmission_peaks_at_roots() {
        let bx = SearchBox::new((0.3, 2.5), (0.5, 12.0)).unwrap();
        let found = find_singularities(&bx, &SearchOptions::default()).unwrap();
        assert_eq!(found.len(), 4, "{found:?}");
        for s in &found {
            let t = |ka: f64| transmission_probability(BarrierPoint::new(s.xi, ka).unwrap()).unwrap();
            let (l, r) = (t(s.ka - 1e-4), t(s.ka + 1e-4));
            assert!(l > 1e3 && r > 1e3, "{s:?}: {l} {r}");
            assert!(t(s.ka - 2e-4) < l && t(s.ka + 2e-4) < r);
        }
        // the third root
        assert_relative_eq!(found[2].xi, 0.49008726548251393531, max_relative = 1e-9);
        assert_relative_eq!(found[2].ka, 7.5292830439176724407, max_relative = 1e-9);
    }

    #[test]
    fn under_gain_resonant_xi_decreases_with_ka() {
        let bx = SearchBox::new((0.01, 0.3), (10.0, 30.0)).unwrap();
        let found = find_singularities(&bx, &SearchOptions::default()).unwrap();
        assert!(found.len() >= 3, "{found:?}");
        assert!(found.windows(2).all(|w| w[1].xi < w[0].xi));
    }

    #[test]
    fn empty_box_is_fine() {
        let bx = SearchBox::new((0.01, 0.05), (0.5, 2.0)).unwrap();
        assert!(find_singularities(&bx, &SearchOptions::default()).unwrap().is_empty());
        assert!(SearchBox::new((0.0, 1.0), (0.5, 2.0)).is_err());
        assert!(SearchBox::new((1.0, 0.5), (0.5, 2.0)).is_err());
    }

    #[test]
    fn free_space_has_no_peaks() {
        assert!(peak_scan(0.0, (0.0, 10.0), 50.0).unwrap().is_empty());
    }

    #[test]
    fn over_gain_single_peak() {
        let peaks = peak_scan(2.0, (0.0, 6.0), 100.0).unwrap();
        assert_eq!(peaks.len(), 1, "{peaks:?}");
        let p = peaks[0];
        assert!(p.height > 100.0);
        let t = |ka: f64| transmission_probability(BarrierPoint::new(2.0, ka).unwrap()).unwrap();
        // the peak is skewed, so the half-height crossings straddle pos ± half_width
        let (l, r) = (t(p.ka_position - p.half_width), t(p.ka_position + p.half_width));
        assert!(l > 0.35 * p.height && l < 0.65 * p.height, "{l}");
        assert!(r > 0.35 * p.height && r < 0.65 * p.height, "{r}");
        assert!((l - 0.5 * p.height) * (r - 0.5 * p.height) <= 0.0);
    }

    #[test]
    fn under_gain_wave_packet() {
        let peaks = peak_scan(0.4, (0.0, 25.0), 100.0).unwrap();
        assert!(peaks.len() >= 5, "{peaks:?}");
        let top = peaks
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.height.total_cmp(&b.1.height))
            .unwrap()
            .0;
        assert!(top > 0 && top < peaks.len() - 1);
        assert!(peaks[..=top].windows(2).all(|w| w[1].height > w[0].height));
        assert!(peaks[top..].windows(2).all(|w| w[1].height < w[0].height));
        let stats = peak_spacing_stats(&peaks).unwrap();
        assert!(stats.relative_std < 0.05, "{stats:?}");
        for p in &peaks {
            let t = |ka: f64| transmission_probability(BarrierPoint::new(0.4, ka).unwrap()).unwrap();
            assert!(p.half_width > 0.0);
            assert!(t(p.ka_position + 0.01) < p.height && t(p.ka_position - 0.01) < p.height);
        }
    }

    #[test]
    fn spacing_of_synthetic_list() {
        let mk = |k: f64| Peak {
            xi: 0.1,
            ka_position: k,
            height: 1.0,
            half_width: 0.1,
        };
        let s = peak_spacing_stats(&[mk(1.0), mk(2.5), mk(4.0), mk(5.5)]).unwrap();
        assert_relative_eq!(s.mean_spacing, 1.5);
        assert_eq!(s.relative_std, 0.0);
        assert!(matches!(
            peak_spacing_stats(&[mk(1.0), mk(2.0)]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn resonance_curve_over_gain_branch() {
        let curve = resonance_curve((0.9, 1.1), 5, (1.2, 4.0), 300, Execution::Sequential).unwrap();
        let near = curve.iter().find(|p| (p.ka - 1.0).abs() < 1e-12).unwrap();
        assert!((near.xi_star - 2.0).abs() < 0.3, "{near:?}");
        for p in &curve {
            let t = |x: f64| transmission_probability(BarrierPoint::new(x, p.ka).unwrap()).unwrap();
            // maximiser: |T|² falls off on both sides
            assert!(t(p.xi_star - 1e-3) < p.height && t(p.xi_star + 1e-3) < p.height);
        }
    }
}
