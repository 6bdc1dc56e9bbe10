use std::f64::consts::TAU;

use proptest::prelude::*;
use softbody::body::*;
use softbody::{Potential, SoftBodyParams};

/// Energy summed monad by monad and pair by pair, straight from the
/// definition.
fn energy_by_pairs(mass: f64, omega0: f64, x: &[f64], v: &[f64], pot: &Potential) -> f64 {
    let n = x.len();
    let m = mass / n as f64;
    let mut e = 0.0;
    for i in 0..n {
        e += 0.5 * m * v[i] * v[i] + pot.value(x[i]) / n as f64;
        for j in i + 1..n {
            e += 0.25 * m * omega0 * omega0 * (x[i] - x[j]).powi(2);
        }
    }
    e
}

#[test]
fn expanded_energy_error_is_high_order_in_amplitude() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let params = SoftBodyParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
    let gap = |a: f64| {
        let cm = CMState {
            t: 0.0,
            x: 0.3,
            v: 0.2,
            xi: a,
            xi_dot: 0.1,
        };
        (total_energy_expanded(&params, &cm, &pot)
            - total_energy_exact(&params, &monads_from_cm(&cm), &pot))
        .abs()
    };
    let amplitudes = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 1e-3];
    for pair in amplitudes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let order = (gap(a) / gap(b)).ln() / (a / b).ln();
        // The odd terms cancel between the two monads, so the gap is quartic.
        assert!(order > 3.0, "observed order {order} between {a} and {b}");
        assert!(gap(a) <= 1.0 * a * a * a);
    }
}

#[test]
fn resting_pair_reproduces_calibrated_potential() {
    let pot = Potential::soft_rect(0.8, 1.5, 0.3).unwrap();
    let params = SoftBodyParams::new(2.0, 1.7, 0.0, 0.0).unwrap();
    for x in [-3.0, -1.5, 0.0, 0.4] {
        let state = MonadState::new(0.0, vec![x, x], vec![0.0, 0.0]).unwrap();
        assert!((total_energy_exact(&params, &state, &pot) - pot.value(x)).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cm_transform_round_trips(
        x in -50.0f64..50.0, v in -5.0f64..5.0, xi in -3.0f64..3.0, xd in -5.0f64..5.0,
    ) {
        let cm = CMState { t: 1.5, x, v, xi, xi_dot: xd };
        let back = cm_from_monads(&monads_from_cm(&cm)).unwrap();
        prop_assert!((back.x - x).abs() <= 1e-14 * x.abs().max(1.0));
        prop_assert!((back.v - v).abs() <= 1e-14 * v.abs().max(1.0));
        prop_assert!((back.xi - xi).abs() <= 1e-14 * x.abs().max(1.0));
        prop_assert!((back.xi_dot - xd).abs() <= 1e-14 * v.abs().max(1.0));
        prop_assert_eq!(back.t, 1.5);
    }

    #[test]
    fn free_launch_energy_is_action_times_frequency(
        j in 0.0f64..5.0, alpha in -20.0f64..20.0, m in 0.1f64..10.0, w in 0.1f64..10.0,
    ) {
        let p = SoftBodyParams::new(m, w, j, alpha).unwrap();
        let (xi, xd) = p.init_internal();
        let e = 0.5 * m * xd * xd + 0.5 * m * w * w * xi * xi;
        prop_assert!((e - j * w).abs() <= 1e-12 * (j * w).max(1.0));
    }

    #[test]
    fn alpha_is_stored_modulo_a_full_turn(alpha in -100.0f64..100.0, k in -5i32..5) {
        let p = SoftBodyParams::new(1.0, 2.0, 0.7, alpha).unwrap();
        prop_assert!(p.alpha() >= 0.0 && p.alpha() < TAU);
        let q = SoftBodyParams::new(1.0, 2.0, 0.7, alpha + k as f64 * TAU).unwrap();
        let (a, b) = (p.init_internal(), q.init_internal());
        prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn exact_energy_matches_pairwise_sum(
        xs in prop::collection::vec(-6.0f64..6.0, 2..7),
        vseed in -3.0f64..3.0, m in 0.2f64..5.0, w in 0.2f64..5.0,
    ) {
        let pot = Potential::gaussian(1.2, 0.3, 0.9).unwrap();
        let vs: Vec<f64> = xs.iter().enumerate().map(|(i, x)| vseed * (i as f64 + 0.5) - 0.3 * x).collect();
        let params = SoftBodyParams::new(m, w, 0.0, 0.0).unwrap();
        let state = MonadState::new(0.0, xs.clone(), vs.clone()).unwrap();
        let lib = total_energy_exact(&params, &state, &pot);
        let oracle = energy_by_pairs(m, w, &xs, &vs, &pot);
        prop_assert!((lib - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "{} vs {}", lib, oracle);
    }

    #[test]
    fn two_monad_energies_agree_without_curvature(
        x in -5.0f64..5.0, v in -2.0f64..2.0, xi in -1.0f64..1.0, xd in -1.0f64..1.0,
    ) {
        // For linear and quadratic potentials the expansion is exact.
        let params = SoftBodyParams::new(1.3, 0.8, 0.0, 0.0).unwrap();
        let cm = CMState { t: 0.0, x, v, xi, xi_dot: xd };
        for pot in [Potential::linear(0.4).unwrap(), Potential::quadratic(0.9).unwrap()] {
            let a = total_energy_expanded(&params, &cm, &pot);
            let b = total_energy_exact(&params, &monads_from_cm(&cm), &pot);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
