//! Small one-dimensional numerical routines shared by the analysis modules.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximises a unimodal `f` on `[lo, hi]` by golden-section search.
///
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Vertex of the parabola through three points, if it is well defined.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (x[1] - x[0]) * (y[1] - y[2]);
    let d2 = (x[1] - x[2]) * (y[1] - y[0]);
    let den = d1 - d2;
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let v = x[1] - 0.5 * ((x[1] - x[0]) * d1 - (x[1] - x[2]) * d2) / den;
    v.is_finite().then_some(v)
}

/// Refines a bracketed maximum `lo < mid < hi` with `f(mid) >= f(lo), f(hi)` by
/// successive parabolic interpolation, falling back to a golden step whenever
/// the vertex is unusable.
pub fn parabolic_max<F: Fn(f64) -> f64>(f: F, lo: f64, mid: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b, mut c) = (lo, mid, hi);
    let (mut fa, mut fb, mut fc) = (f(a), f(b), f(c));
    for _ in 0..200 {
        if c - a <= tol * (1.0 + b.abs()) {
            break;
        }
        let golden = || {
            if b - a > c - b {
                b - (1.0 - INV_PHI) * (b - a)
            } else {
                b + (1.0 - INV_PHI) * (c - b)
            }
        };
        let mut x = match parabola_vertex([a, b, c], [fa, fb, fc]) {
            Some(v) if v > a && v < c => v,
            _ => golden(),
        };
        let min_step = 0.25 * tol * (1.0 + b.abs());
        if (x - b).abs() < min_step {
            // nudge away from the current best so the bracket keeps shrinking
            x = if b - a > c - b { b - min_step } else { b + min_step };
        }
        let fx = f(x);
        if fx >= fb {
            if x < b {
                c = b;
                fc = fb;
            } else {
                a = b;
                fa = fb;
            }
            b = x;
            fb = fx;
        } else if x < b {
            a = x;
            fa = fx;
        } else {
            c = x;
            fc = fx;
        }
    }
    let _ = (fa, fc);
    (b, fb)
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol {
            return mid;
        }
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central-difference derivative with one Richardson extrapolation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RichardsonDerivative {
    pub value: f64,
    /// Estimated absolute error of `value`, including a rounding term.
    pub error: f64,
    pub step: f64,
}

/// Differentiates `f` at `x` from central differences at steps `h` and `h/2`.
///
/// `diff(a, b)` computes `f(a) - f(b)`; callers use it to fold branch jumps of
/// multivalued functions back into the principal range.
pub fn richardson_derivative<F, D>(f: F, diff: D, x: f64, h: f64) -> RichardsonDerivative
where
    F: Fn(f64) -> f64,
    D: Fn(f64, f64) -> f64,
{
    let f_pp = f(x + h);
    let f_mm = f(x - h);
    let f_p = f(x + h / 2.0);
    let f_m = f(x - h / 2.0);
    let coarse = diff(f_pp, f_mm) / (2.0 * h);
    let fine = diff(f_p, f_m) / h;
    let value = (4.0 * fine - coarse) / 3.0;
    let magnitude = f_pp.abs().max(f_mm.abs()).max(1.0);
    let rounding = 8.0 * f64::EPSILON * magnitude / h;
    RichardsonDerivative {
        value,
        error: (fine - coarse).abs() / 3.0 + rounding,
        step: h,
    }
}

/// Folds an angle difference into `(-π, π]`.
pub fn wrap_angle(d: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = d % TAU;
    if w > PI {
        w -= TAU;
    } else if w <= -PI {
        w += TAU;
    }
    w
}

/// `n` evenly spaced samples from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}
