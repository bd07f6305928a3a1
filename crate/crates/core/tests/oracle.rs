//! Closed forms against both layer-solver routes.

#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use proptest::prelude::*;
use ptscatter::barrier::{phase_terms, transmission_probability};
use ptscatter::numeric::linspace;
use ptscatter::singularity::{find_singularities, SearchBox, SearchOptions};
use ptscatter::tmatrix::{pt_barrier_stack, solve_stack, transfer_amplitudes};
use ptscatter::BarrierPoint;

fn point(xi: f64, ka: f64) -> BarrierPoint {
    BarrierPoint::new(xi, ka).unwrap()
}

// (xi, ka, |T|², arg T, |R_L|, |R_R|), 20-digit reference values
const FROZEN: &[(f64, f64, f64, f64, f64, f64)] = &[
    (
        2.0,
        1.0,
        104.65336539128698978,
        -1.8252372610802243897,
        26.668464583090970967,
        3.8867391509673929608,
    ),
    (
        0.5,
        3.0,
        0.874588202965541,
        f64::NAN,
        0.708273236870846,
        0.177066971481979,
    ),
];

#[test]
fn frozen_amplitudes() {
    for &(xi, ka, t2, arg, rl, rr) in FROZEN {
        let stack = pt_barrier_stack(xi).unwrap();
        let s = solve_stack(ka, &stack).unwrap().amplitudes;
        let p = transfer_amplitudes(ka, &stack).unwrap();
        assert_relative_eq!(
            transmission_probability(point(xi, ka)).unwrap(),
            t2,
            max_relative = 1e-12
        );
        for a in [s, p] {
            assert_relative_eq!(a.transmittance(), t2, max_relative = 1e-11);
            assert_relative_eq!(a.r_left.norm(), rl, max_relative = 1e-10);
            assert_relative_eq!(a.r_right.norm(), rr, max_relative = 1e-10);
            if !arg.is_nan() {
                assert_relative_eq!(a.t_left.arg(), arg, max_relative = 1e-11);
            }
        }
    }
    assert_relative_eq!(
        transmission_probability(point(1.0, 1.0)).unwrap(),
        1.7856323213097281223,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        phase_terms(point(1.0, 1.0)).phase(),
        -0.032586466937993015089,
        max_relative = 1e-12
    );
}

#[test]
fn closed_form_matches_layer_solver_on_grid() {
    let bx = SearchBox::new((0.1, 3.0), (0.01, 10.0)).unwrap();
    let roots = find_singularities(&bx, &SearchOptions::default()).unwrap();
    let mut checked = 0;
    for xi in linspace(0.1, 3.0, 50) {
        let stack = pt_barrier_stack(xi).unwrap();
        for ka in linspace(0.01, 10.0, 41) {
            if roots.iter().any(|r| (r.xi - xi).hypot(r.ka - ka) < 1e-3) {
                continue;
            }
            let closed = transmission_probability(point(xi, ka)).unwrap();
            let lu = solve_stack(ka, &stack).unwrap().amplitudes;
            let product = transfer_amplitudes(ka, &stack).unwrap();
            assert_relative_eq!(lu.transmittance(), closed, max_relative = 1e-9);
            assert_relative_eq!(product.transmittance(), closed, max_relative = 1e-9);
            checked += 1;
        }
    }
    assert!(checked >= 2000, "{checked}");
}

proptest! {
    #[test]
    fn closed_form_equals_both_routes(xi in 0.0f64..5.0, ka in 0.01f64..15.0) {
        let closed = transmission_probability(point(xi, ka)).unwrap();
        let stack = pt_barrier_stack(xi).unwrap();
        let lu = solve_stack(ka, &stack).unwrap().amplitudes;
        let product = transfer_amplitudes(ka, &stack).unwrap();
        prop_assert!((lu.transmittance() / closed - 1.0).abs() < 1e-9);
        prop_assert!((product.transmittance() / closed - 1.0).abs() < 1e-9);
        for (a, b) in [
            (lu.t_left, product.t_left),
            (lu.t_right, product.t_right),
            (lu.r_left, product.r_left),
            (lu.r_right, product.r_right),
        ] {
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }
    }

    #[test]
    fn phase_auxiliaries_give_arg_t(xi in 0.01f64..4.0, ka in 0.01f64..12.0) {
        let phi = phase_terms(point(xi, ka)).phase();
        let t = transfer_amplitudes(ka, &pt_barrier_stack(xi).unwrap()).unwrap().t_left;
        let d = ptscatter::numeric::wrap_angle(phi - t.arg());
        prop_assert!(d.abs() < 1e-9, "phi {} arg {}", phi, t.arg());
    }

    #[test]
    fn stack_wavefunction_is_continuous(xi in 0.0f64..3.0, ka in 0.05f64..8.0) {
        let s = solve_stack(ka, &pt_barrier_stack(xi).unwrap()).unwrap();
        prop_assert!(s.left.continuity_error() < 1e-10);
        prop_assert!(s.right.continuity_error() < 1e-10);
    }
}
