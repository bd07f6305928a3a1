use num_complex::Complex64;
use proptest::prelude::*;
use ptscatter::barrier::{dispersion_params, transmission_probability};
use ptscatter::tmatrix::{pt_barrier_stack, pt_symmetry_check, transfer_amplitudes};
use ptscatter::{BarrierPoint, Layer, LayerStack};

fn layer() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1f64..1.5, -2.0f64..2.0, -2.0f64..2.0)
}

/// Mirror a half stack into a PT-symmetric one: V(x) = V*(−x).
fn pt_stack(half: &[(f64, f64, f64)]) -> LayerStack {
    let mut layers: Vec<Layer> = half
        .iter()
        .map(|&(w, re, im)| Layer::new(w, Complex64::new(re, im)).unwrap())
        .collect();
    let mirrored: Vec<Layer> = half
        .iter()
        .rev()
        .map(|&(w, re, im)| Layer::new(w, Complex64::new(re, -im)).unwrap())
        .collect();
    layers.extend(mirrored);
    LayerStack::new(layers)
}

#[test]
fn trivial_limits() {
    for xi in [0.0, 0.3, 1.0, 7.5] {
        let t = transmission_probability(BarrierPoint::new(xi, 0.0).unwrap()).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }
    for ka in [0.0, 0.5, 9.0, 300.0] {
        let t = transmission_probability(BarrierPoint::new(0.0, ka).unwrap()).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dispersion_hyperbola(xi in 0.0f64..10.0) {
        let d = dispersion_params(xi).unwrap();
        prop_assert!((d.gamma * d.gamma - d.delta * d.delta - 1.0).abs() < 1e-12);
        prop_assert!((2.0 * d.gamma * d.delta - xi).abs() <= 1e-12 * xi.max(1.0));
    }
}

proptest! {
    #[test]
    fn reciprocity_and_generalized_unitarity(xi in 0.0f64..4.0, ka in 0.01f64..12.0) {
        let a = transfer_amplitudes(ka, &pt_barrier_stack(xi).unwrap()).unwrap();
        prop_assert!((a.t_left - a.t_right).norm() < 1e-10 * a.t_left.norm().max(1.0));
        let t2 = a.transmittance();
        prop_assert!(a.generalized_unitarity_residual().abs() <= 1e-9 * t2.max(1.0));
    }

    #[test]
    fn mirrored_stacks_keep_pt_identities(
        half in prop::collection::vec(layer(), 1..4),
        k in 0.1f64..4.0,
    ) {
        let stack = pt_stack(&half);
        prop_assert!(pt_symmetry_check(&stack));
        if let Ok(a) = transfer_amplitudes(k, &stack) {
            let t2 = a.transmittance();
            prop_assert!((a.t_left - a.t_right).norm() < 1e-8 * a.t_left.norm().max(1.0));
            prop_assert!(a.generalized_unitarity_residual().abs() <= 1e-8 * t2.max(1.0));
        }
    }

    #[test]
    fn hermitian_limit_conserves_flux(
        layers in prop::collection::vec((0.1f64..1.5, -3.0f64..3.0), 1..5),
        k in 0.1f64..4.0,
    ) {
        let stack = LayerStack::new(
            layers.iter().map(|&(w, v)| Layer::new(w, Complex64::new(v, 0.0)).unwrap()).collect(),
        );
        let a = transfer_amplitudes(k, &stack).unwrap();
        prop_assert!(a.unitarity_residual().abs() < 1e-10);
        prop_assert!((a.t_left - a.t_right).norm() < 1e-10);
    }
}
