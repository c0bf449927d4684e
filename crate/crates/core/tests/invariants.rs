//! Structural invariants of the transforms and flows under random inputs.

use logse::nonlinear::{apply_nonlinear_flow, NonlinParams};
use logse::propagator::phi_a;
use logse::spectral::{forward, synthesize, SpectralField};
use logse::splitting::{init, Stepper, SolverConfig};
use logse::initdata::InitialData;
use num_complex::Complex64;
use proptest::prelude::*;

fn field(modes: usize) -> impl Strategy<Value = SpectralField> {
    let n = 2 * modes + 1;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(move |c| SpectralField::new(1, modes, c.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesis_round_trip_and_parseval(u in field(12), q in 2usize..6) {
        let phys = synthesize(&u, q).unwrap();
        prop_assert!(close(phys.l2_norm(), u.l2_norm(), 1e-12));
        let back = forward(&phys, 12).unwrap();
        prop_assert!(back.difference(&u).unwrap().l2_norm() <= 1e-12 * (1.0 + u.l2_norm()));
    }

    #[test]
    fn projection_is_a_contraction_with_orthogonal_error(u in field(16), n in 0usize..16) {
        let p = u.project(n).unwrap();
        prop_assert!(p.l2_norm() <= u.l2_norm() * (1.0 + 1e-14));
        let tail = u.difference(&p.zero_pad(16).unwrap()).unwrap();
        let total = p.l2_norm().powi(2) + tail.l2_norm().powi(2);
        prop_assert!(close(total, u.l2_norm().powi(2), 1e-12));
        // the tail only holds modes above n
        prop_assert!(tail.hs_seminorm(1.0) >= (n as f64 + 1.0) * tail.l2_norm() * (1.0 - 1e-12));
    }

    #[test]
    fn free_flow_is_an_isometry_and_a_group(u in field(10), t in -2.0f64..2.0, s in -2.0f64..2.0) {
        let a = phi_a(&u, t);
        prop_assert!(close(a.l2_norm(), u.l2_norm(), 1e-12));
        prop_assert!(close(a.hs_norm(1.0), u.hs_norm(1.0), 1e-12));
        let composed = phi_a(&phi_a(&u, t), s);
        let direct = phi_a(&u, t + s);
        prop_assert!(composed.difference(&direct).unwrap().l2_norm() <= 1e-12 * (1.0 + u.l2_norm()));
    }

    #[test]
    fn nonlinear_flow_keeps_moduli(
        values in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..64),
        lambda in -20.0f64..20.0,
        t in 0.0f64..1.0,
    ) {
        let mut z: Vec<Complex64> = values.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let before: Vec<f64> = z.iter().map(|w| w.norm()).collect();
        apply_nonlinear_flow(&mut z, &NonlinParams::new(lambda, 0.0).unwrap(), t);
        for (w, m) in z.iter().zip(before) {
            prop_assert!(close(w.norm(), m, 1e-14));
        }
    }

    #[test]
    fn a_split_step_never_gains_mass(u in field(8), lambda in -4.0f64..4.0) {
        let config = SolverConfig::new(lambda, 0.125, 1.0, 8);
        let u0 = InitialData::from_coefficients(u, 0.0, "random").unwrap();
        let mut state = init(&u0, &config).unwrap();
        let mut stepper = Stepper::new(&config).unwrap();
        for _ in 0..8 {
            let previous = state.mass;
            stepper.step(&mut state).unwrap();
            prop_assert!(state.mass <= previous * (1.0 + 1e-12));
        }
    }
}
