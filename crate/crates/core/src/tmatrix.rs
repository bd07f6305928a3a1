//! Scattering by stacks of constant complex potential layers.
//!
//! Lengths are in units of `a` and potentials in units of the incident energy
//! `E = k²`, so the local wavenumber in a layer with potential `u = V/E` is
//! `q = k·sqrt(1 − u)`. The origin sits at the middle of the stack and the free
//! regions follow the plane-wave conventions
//!
//! ```text
//! left incidence:   e^{ikx} + R_L e^{-ikx}   |  T_L e^{ikx}
//! right incidence:  T_R e^{-ikx}             |  e^{-ikx} + R_R e^{ikx}
//! ```
//!
//! Two independent routes compute the amplitudes: [`solve_stack`] assembles and
//! factorises the full boundary-matching system, [`transfer_amplitudes`]
//! multiplies 2×2 characteristic matrices. They share nothing beyond
//! [`local_wavenumber`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Layer {
    width: f64,
    #[serde(serialize_with = "ser_complex")]
    potential: Complex64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl Layer {
    pub fn new(width: f64, potential: Complex64) -> Result<Self> {
        ensure_finite("layer width", width)?;
        if width <= 0.0 {
            return Err(Error::Domain(format!("layer width must be > 0, got {width}")));
        }
        if !(potential.re.is_finite() && potential.im.is_finite()) {
            return Err(Error::Domain(format!(
                "layer potential must be finite, got {potential}"
            )));
        }
        Ok(Self { width, potential })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Potential relative to the incident energy, `V/E`.
    pub fn potential(&self) -> Complex64 {
        self.potential
    }
}

/// Ordered layers from left to right. An empty stack is free space.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LayerStack {
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn total_width(&self) -> f64 {
        self.layers.iter().map(|l| l.width).sum()
    }

    /// Interface positions, left to right, with the origin at the stack centre.
    pub fn edges(&self) -> Vec<f64> {
        let mut x = -0.5 * self.total_width();
        let mut edges = Vec::with_capacity(self.layers.len() + 1);
        edges.push(x);
        for l in &self.layers {
            x += l.width;
            edges.push(x);
        }
        edges
    }

    /// Potential (`V/E`) at `x`; interfaces belong to the layer on their right.
    pub fn potential_at(&self, x: f64) -> Complex64 {
        let edges = self.edges();
        if x < edges[0] || x >= edges[edges.len() - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let idx = edges.partition_point(|&e| e <= x) - 1;
        self.layers[idx.min(self.layers.len() - 1)].potential
    }

    /// Merges neighbouring layers with identical potential.
    fn canonical(&self) -> Vec<Layer> {
        let mut out: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            match out.last_mut() {
                Some(last) if last.potential == l.potential => last.width += l.width,
                _ => out.push(*l),
            }
        }
        out
    }
}

/// Stack for the barrier `+iξ` on `(-1, 0)` and `−iξ` on `(0, 1)`, in units of
/// `a` and `E`.
pub fn pt_barrier_stack(xi: f64) -> Result<LayerStack> {
    ensure_finite("xi", xi)?;
    if xi < 0.0 {
        return Err(Error::Domain(format!("xi must be >= 0, got {xi}")));
    }
    Ok(LayerStack::new(vec![
        Layer::new(1.0, Complex64::new(0.0, xi))?,
        Layer::new(1.0, Complex64::new(0.0, -xi))?,
    ]))
}

/// True iff `V(x) = V*(−x)` about the stack midpoint.
pub fn pt_symmetry_check(stack: &LayerStack) -> bool {
    let layers = stack.canonical();
    let n = layers.len();
    (0..n).all(|i| {
        let (l, r) = (layers[i], layers[n - 1 - i]);
        l.width == r.width && l.potential == r.potential.conj()
    })
}

/// `q = sqrt(k² − V)` for `V = u·k²`, on the branch `Re q ≥ 0` (and `Im q ≥ 0`
/// when `Re q = 0`).
pub fn local_wavenumber(k: f64, potential: Complex64) -> Complex64 {
    let q = (Complex64::new(1.0, 0.0) - potential).sqrt() * k;
    if q.re < 0.0 || (q.re == 0.0 && q.im < 0.0) {
        -q
    } else {
        // normalise a negative zero imaginary part
        Complex64::new(q.re, q.im + 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScatteringAmplitudes {
    #[serde(serialize_with = "ser_complex")]
    pub t_left: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub t_right: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub r_left: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub r_right: Complex64,
}

impl ScatteringAmplitudes {
    pub fn free() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            t_left: one,
            t_right: one,
            r_left: zero,
            r_right: zero,
        }
    }

    /// `|T_L|²`.
    pub fn transmittance(&self) -> f64 {
        self.t_left.norm_sqr()
    }

    /// `| |T_L|² − 1 | − |R_L|·|R_R|`, which vanishes for PT-symmetric stacks.
    pub fn generalized_unitarity_residual(&self) -> f64 {
        (self.transmittance() - 1.0).abs() - self.r_left.norm() * self.r_right.norm()
    }

    /// `|T|² + |R_L|² − 1`, which vanishes for real potentials.
    pub fn unitarity_residual(&self) -> f64 {
        self.transmittance() + self.r_left.norm_sqr() - 1.0
    }
}

/// Amplitudes of one scattering state in every region.
///
/// `pairs[j]` is `(forward, backward)` for region `j`: index 0 is the left free
/// region and the last index the right one, both in global coordinates
/// (`F e^{ikx} + B e^{-ikx}`). Inner layers are referenced to their own left
/// edge `x_j`: `F e^{iq(x−x_j)} + B e^{−iq(x−x_j)}`. A layer with `q = 0`
/// holds the linear solution `F + B·k(x−x_j)` instead.
///
/// For the ±iv barrier the inner pairs of the left-incidence state are
/// `(A1, B1)` and `(A2, B2)`, those of the right-incidence state `(D1, C1)` and
/// `(D2, C2)`, up to the choice of reference point.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveCoefficients {
    pub k: f64,
    pub edges: Vec<f64>,
    pub wavenumbers: Vec<Complex64>,
    pub pairs: Vec<(Complex64, Complex64)>,
}

impl WaveCoefficients {
    fn region(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e <= x)
    }

    fn basis(&self, region: usize, x: f64) -> (Complex64, Complex64, Complex64) {
        let q = self.wavenumbers[region];
        let last = self.wavenumbers.len() - 1;
        let dx = if region == 0 || region == last {
            x
        } else {
            x - self.edges[region - 1]
        };
        let ef = (I * q * dx).exp();
        let eb = (-I * q * dx).exp();
        (ef, eb, q)
    }

    /// `ψ(x)` evaluated from region `region`'s expansion.
    pub fn psi_in(&self, region: usize, x: f64) -> Complex64 {
        let (f, b) = self.pairs[region];
        if self.wavenumbers[region] == Complex64::new(0.0, 0.0) {
            return f + b * self.k * (x - self.edges[region - 1]);
        }
        let (ef, eb, _) = self.basis(region, x);
        f * ef + b * eb
    }

    /// `ψ′(x)` evaluated from region `region`'s expansion.
    pub fn dpsi_in(&self, region: usize, x: f64) -> Complex64 {
        let (f, b) = self.pairs[region];
        if self.wavenumbers[region] == Complex64::new(0.0, 0.0) {
            return b * self.k;
        }
        let (ef, eb, q) = self.basis(region, x);
        I * q * (f * ef - b * eb)
    }

    pub fn psi(&self, x: f64) -> Complex64 {
        self.psi_in(self.region(x), x)
    }

    pub fn dpsi(&self, x: f64) -> Complex64 {
        self.dpsi_in(self.region(x), x)
    }

    /// Largest relative mismatch of `ψ` and `ψ′/k` across the interfaces.
    pub fn continuity_error(&self) -> f64 {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let (pl, pr) = (self.psi_in(i, x), self.psi_in(i + 1, x));
                let (dl, dr) = (self.dpsi_in(i, x) / self.k, self.dpsi_in(i + 1, x) / self.k);
                let scale = pl.norm().max(pr.norm()).max(dl.norm()).max(dr.norm()).max(1.0);
                ((pl - pr).norm().max((dl - dr).norm())) / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Full solution of a stack: amplitudes plus both scattering states.
#[derive(Clone, Debug, PartialEq)]
pub struct StackSolution {
    pub amplitudes: ScatteringAmplitudes,
    pub left: WaveCoefficients,
    pub right: WaveCoefficients,
}

fn check_k(k: f64) -> Result<()> {
    ensure_finite("k", k)?;
    if k <= 0.0 {
        return Err(Error::Domain(format!("k must be > 0, got {k}")));
    }
    Ok(())
}

fn all_finite(z: &[Complex64]) -> bool {
    z.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Solves the matching conditions as one linear system.
///
/// Inside each layer the forward and backward exponentials are referenced to
/// whichever edge keeps them bounded by one, so the system stays well scaled
/// for strongly evanescent layers. The coefficients are converted to the
/// left-edge reference afterwards.
pub fn solve_stack(k: f64, stack: &LayerStack) -> Result<StackSolution> {
    check_k(k)?;
    let n = stack.len();
    let regions = n + 2;
    let edges = stack.edges();
    let mut wavenumbers = Vec::with_capacity(regions);
    wavenumbers.push(Complex64::new(k, 0.0));
    wavenumbers.extend(stack.layers().iter().map(|l| local_wavenumber(k, l.potential)));
    wavenumbers.push(Complex64::new(k, 0.0));

    // reference points for forward/backward parts of each region
    let refs: Vec<(f64, f64)> = (0..regions)
        .map(|r| {
            if r == 0 || r == regions - 1 {
                (0.0, 0.0)
            } else {
                let (xl, xr) = (edges[r - 1], edges[r]);
                if wavenumbers[r].im >= 0.0 {
                    (xl, xr)
                } else {
                    (xr, xl)
                }
            }
        })
        .collect();

    let size = 2 * regions;
    let mut m = DMatrix::<Complex64>::zeros(size, size);
    let mut rhs = DMatrix::<Complex64>::zeros(size, 2);
    for (i, &x) in edges.iter().enumerate() {
        for (r, sign) in [(i, 1.0), (i + 1, -1.0)] {
            let q = wavenumbers[r];
            if q == Complex64::new(0.0, 0.0) {
                // linear solution F + B·k(x − x_left) of a layer with V = E
                m[(2 * i, 2 * r)] += sign;
                m[(2 * i, 2 * r + 1)] += sign * k * (x - edges[r - 1]);
                m[(2 * i + 1, 2 * r + 1)] += sign;
                continue;
            }
            let ef = (I * q * (x - refs[r].0)).exp();
            let eb = (-I * q * (x - refs[r].1)).exp();
            let dq = I * q / k;
            m[(2 * i, 2 * r)] += ef * sign;
            m[(2 * i, 2 * r + 1)] += eb * sign;
            m[(2 * i + 1, 2 * r)] += dq * ef * sign;
            m[(2 * i + 1, 2 * r + 1)] -= dq * eb * sign;
        }
    }
    let (row_a, row_b) = (size - 2, size - 1);
    m[(row_a, 0)] = Complex64::new(1.0, 0.0);
    m[(row_b, 2 * regions - 1)] = Complex64::new(1.0, 0.0);
    // column 0: left incidence (F_0 = 1, B_last = 0); column 1: right incidence
    rhs[(row_a, 0)] = Complex64::new(1.0, 0.0);
    rhs[(row_b, 1)] = Complex64::new(1.0, 0.0);

    let sol = m.lu().solve(&rhs).ok_or(Error::SingularStack { k })?;

    let state = |col: usize| -> Result<WaveCoefficients> {
        let mut pairs = Vec::with_capacity(regions);
        for r in 0..regions {
            let (mut f, mut b) = (sol[(2 * r, col)], sol[(2 * r + 1, col)]);
            if r != 0 && r != regions - 1 {
                let xl = edges[r - 1];
                let q = wavenumbers[r];
                f *= (I * q * (xl - refs[r].0)).exp();
                b *= (-I * q * (xl - refs[r].1)).exp();
            }
            pairs.push((f, b));
        }
        let flat: Vec<Complex64> = pairs.iter().flat_map(|&(f, b)| [f, b]).collect();
        if !all_finite(&flat) {
            return Err(Error::Unrepresentable(format!(
                "layer coefficients overflow at k = {k}"
            )));
        }
        Ok(WaveCoefficients {
            k,
            edges: edges.clone(),
            wavenumbers: wavenumbers.clone(),
            pairs,
        })
    };
    let left = state(0)?;
    let right = state(1)?;
    let last = regions - 1;
    let amplitudes = ScatteringAmplitudes {
        t_left: left.pairs[last].0,
        r_left: left.pairs[0].1,
        t_right: right.pairs[0].1,
        r_right: right.pairs[last].0,
    };
    if !all_finite(&[
        amplitudes.t_left,
        amplitudes.t_right,
        amplitudes.r_left,
        amplitudes.r_right,
    ]) {
        return Err(Error::Unrepresentable(format!("amplitudes overflow at k = {k}")));
    }
    Ok(StackSolution {
        amplitudes,
        left,
        right,
    })
}

type Mat2 = [[Complex64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Characteristic matrix of one layer mapping `(ψ, ψ′)` from its left to its
/// right edge, divided by `exp(|Im(q w)|)`. Returns the matrix and the log of
/// the removed factor.
fn layer_matrix(q: Complex64, w: f64) -> (Mat2, f64) {
    let z = q * w;
    let g = z.im.abs();
    let p = (I * z - g).exp();
    let mm = (-I * z - g).exp();
    let cos = (p + mm) * 0.5;
    let sin = (p - mm) / (2.0 * I);
    // sin(z)/q = w·sin(z)/z
    let sin_over_q = if z.norm() < 1e-4 {
        let z2 = z * z;
        (Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0) * w * (-g).exp()
    } else {
        sin / q
    };
    ([[cos, sin_over_q], [-q * sin, cos]], g)
}

/// Amplitudes from the product of characteristic matrices.
///
/// The running product is renormalised after every layer; the removed growth
/// is tracked as a log-magnitude and only applied to `T` at the end.
pub fn transfer_amplitudes(k: f64, stack: &LayerStack) -> Result<ScatteringAmplitudes> {
    check_k(k)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut m: Mat2 = [[one, zero], [zero, one]];
    let mut log_scale = 0.0;
    for layer in stack.layers() {
        let q = local_wavenumber(k, layer.potential);
        let (lm, g) = layer_matrix(q, layer.width);
        m = mul(&lm, &m);
        log_scale += g;
        let big = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if big > 0.0 && big.is_finite() {
            for z in m.iter_mut().flatten() {
                *z /= big;
            }
            log_scale += big.ln();
        }
    }
    let half = 0.5 * stack.total_width();
    let (xl, xr) = (-half, half);
    // P(x) maps plane-wave amplitudes (f, b) to (ψ, ψ′)
    let ik = I * k;
    let p_left: Mat2 = [
        [(ik * xl).exp(), (-ik * xl).exp()],
        [ik * (ik * xl).exp(), -ik * (-ik * xl).exp()],
    ];
    let p_right_inv: Mat2 = [
        [(-ik * xr).exp() * 0.5, (-ik * xr).exp() / (2.0 * ik)],
        [(ik * xr).exp() * 0.5, -(ik * xr).exp() / (2.0 * ik)],
    ];
    let w = mul(&p_right_inv, &mul(&m, &p_left));
    if w[1][1] == zero {
        return Err(Error::SingularStack { k });
    }
    // det W = 1, hence T_L = T_R = 1/W22
    let t = (-log_scale).exp() / w[1][1];
    let amps = ScatteringAmplitudes {
        t_left: t,
        t_right: t,
        r_left: -w[1][0] / w[1][1],
        r_right: w[0][1] / w[1][1],
    };
    if !all_finite(&[amps.t_left, amps.r_left, amps.r_right]) {
        return Err(Error::Unrepresentable(format!("amplitudes overflow at k = {k}")));
    }
    Ok(amps)
}
