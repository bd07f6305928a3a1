#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use proptest::prelude::*;
use ptscatter::numeric::linspace;
use ptscatter::singularity::peak_scan;
use ptscatter::timing::{delay_curve, delay_time, delay_time_with, opaque_asymptotic, DelayOptions};
use ptscatter::{BarrierPoint, DerivativeMode, Execution};

fn point(xi: f64, ka: f64) -> BarrierPoint {
    BarrierPoint::new(xi, ka).unwrap()
}

#[test]
fn frozen_fixed_xi_delays() {
    // 20-digit derivatives of the closed-form phase
    for (xi, ka, expected) in [
        (2.0, 1.0, -15.044890689590451),
        (0.5, 3.0, -0.065894668002412412),
        (0.4, 7.0, -0.052777565178052022),
    ] {
        let r = delay_time(point(xi, ka), DerivativeMode::FixedXi).unwrap();
        assert_relative_eq!(r.delay_ratio, expected, max_relative = 1e-7);
        assert!(r.derivative_error < 1e-6 * expected.abs().max(1.0));
    }
}

#[test]
fn fixed_v_matches_opaque_expansion() {
    let r = delay_time(point(1.0, 20.0), DerivativeMode::FixedV).unwrap();
    assert_relative_eq!(r.time_ratio, 0.016089978200765649, max_relative = 1e-7);
    for xi in [0.3, 0.5, 1.0, 2.0] {
        let p = point(xi, 40.0);
        let exact = delay_time(p, DerivativeMode::FixedV).unwrap().time_ratio;
        let approx = opaque_asymptotic(p).unwrap();
        assert!(
            exact < 0.02 && (exact / approx - 1.0).abs() < 0.02,
            "xi {xi}: {exact} {approx}"
        );
    }
}

#[test]
fn fixed_xi_decays_exponentially() {
    let a = delay_time(point(1.0, 10.0), DerivativeMode::FixedXi)
        .unwrap()
        .time_ratio;
    let b = delay_time(point(1.0, 20.0), DerivativeMode::FixedXi)
        .unwrap()
        .time_ratio;
    assert!(a.abs() < 2e-3 && b.abs() < 1e-6, "{a} {b}");
}

#[test]
fn delay_maximum_sits_on_a_transmission_peak() {
    for xi in [0.4, 0.5] {
        let grid = linspace(0.5, 12.0, 2301);
        let curve = delay_curve(xi, &grid, DerivativeMode::FixedXi, &[], 0.0, Execution::Parallel);
        let best = curve
            .iter()
            .filter_map(|s| s.delay_ratio.map(|d| (s.ka, d)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let peaks = peak_scan(xi, (0.0, 12.0), 200.0).unwrap();
        let near = peaks
            .iter()
            .min_by(|a, b| {
                (a.ka_position - best.0)
                    .abs()
                    .total_cmp(&(b.ka_position - best.0).abs())
            })
            .unwrap();
        assert!(
            (near.ka_position - best.0).abs() <= near.half_width,
            "xi {xi}: delay max at {} vs peak {near:?}",
            best.0
        );
    }
}

#[test]
fn peaks_stable_under_doubled_density() {
    for xi in [0.3, 0.4, 2.0] {
        let a = peak_scan(xi, (0.0, 20.0), 100.0).unwrap();
        let b = peak_scan(xi, (0.0, 20.0), 200.0).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            assert!((p.ka_position - q.ka_position).abs() < 1e-7, "{p:?} {q:?}");
            assert_relative_eq!(p.height, q.height, max_relative = 1e-10);
        }
    }
}

#[test]
fn curve_is_independent_of_execution() {
    let grid = linspace(0.0, 15.0, 301);
    for mode in [DerivativeMode::FixedXi, DerivativeMode::FixedV] {
        let a = delay_curve(0.7, &grid[1..], mode, &[], 0.0, Execution::Sequential);
        let b = delay_curve(0.7, &grid[1..], mode, &[], 0.0, Execution::Parallel);
        assert_eq!(a, b);
    }
}

proptest! {
    #[test]
    fn step_refinement_is_stable(xi in 0.1f64..3.0, ka in 0.2f64..12.0) {
        let p = point(xi, ka);
        let coarse = delay_time_with(p, DerivativeMode::FixedXi, &DelayOptions { step: Some(1e-3), rel_tol: 1e-7 });
        let fine = delay_time_with(p, DerivativeMode::FixedXi, &DelayOptions { step: Some(2.5e-4), rel_tol: 1e-7 });
        if let (Ok(c), Ok(f)) = (coarse, fine) {
            let tol = 1e-5 * c.delay_ratio.abs().max(1.0) + 10.0 * (c.derivative_error + f.derivative_error);
            prop_assert!((c.delay_ratio - f.delay_ratio).abs() <= tol, "{:?} {:?}", c, f);
        }
    }

    #[test]
    fn phase_is_continuous_along_ka(xi in 0.1f64..3.0, ka in 0.5f64..10.0) {
        let a = delay_time(point(xi, ka), DerivativeMode::FixedXi);
        let b = delay_time(point(xi, ka + 1e-3), DerivativeMode::FixedXi);
        if let (Ok(a), Ok(b)) = (a, b) {
            // dφ/dka = 2 Δτ/τ0
            let predicted = a.phase + 2e-3 * a.delay_ratio;
            prop_assert!((b.phase - predicted).abs() < 1e-3 * (1.0 + a.delay_ratio.abs()), "{:?} {:?}", a, b);
        }
    }
}
