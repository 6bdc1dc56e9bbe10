use proptest::prelude::*;
use softbody::{Potential, PotentialSpec};

/// Central difference of order `k` with Richardson extrapolation over step
/// halvings; the table cancels the h^2 and h^4 error terms.
fn richardson(f: &dyn Fn(f64) -> f64, x: f64, order: usize, h: f64) -> f64 {
    let central = |h: f64| match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        _ => unreachable!(),
    };
    let d0 = central(h);
    let d1 = central(h / 2.0);
    let d2 = central(h / 4.0);
    let r1 = (4.0 * d1 - d0) / 3.0;
    let r2 = (4.0 * d2 - d1) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Step per derivative order, in units of the potential's length scale, that
/// balances truncation and rounding.
const STEPS: [f64; 4] = [0.0, 1e-3, 1e-2, 4e-2];

fn length_scale(pot: &Potential) -> f64 {
    match *pot.spec() {
        PotentialSpec::Gaussian { sigma, .. } => sigma,
        PotentialSpec::SoftRect { l, .. } => l,
        _ => 1.0,
    }
}

fn check_against_differences(pot: &Potential, x: f64) -> Result<(), String> {
    let f = |y: f64| pot.value(y);
    let d = pot.eval(x);
    let scale = length_scale(pot);
    for (order, analytic) in [(1, d.u1), (2, d.u2), (3, d.u3)] {
        let fd = richardson(&f, x, order, STEPS[order] * scale);
        let err = (fd - analytic).abs();
        // Differences cannot resolve below the rounding of U itself, measured
        // in the potential's natural derivative units.
        let floor = 1e-9 * (1.0 + d.u.abs()) / scale.powi(order as i32);
        if err > 1e-6 * analytic.abs() + floor {
            return Err(format!(
                "{:?} at X = {x}: order {order} analytic {analytic:e} vs fd {fd:e}",
                pot.spec()
            ));
        }
    }
    Ok(())
}

fn variants() -> Vec<Potential> {
    vec![
        Potential::free(),
        Potential::gaussian(1.3, 0.4, 0.8).unwrap(),
        Potential::gaussian(1.0, 0.0, 1.0).unwrap(),
        Potential::soft_rect(0.9, 2.0, 0.5).unwrap(),
        Potential::soft_rect(1.0, 1.0, 0.125).unwrap(),
        Potential::quadratic(0.7).unwrap(),
        Potential::linear(-0.3).unwrap(),
    ]
}

#[test]
fn gaussian_derivatives_match_richardson_at_reference_point() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let d = pot.eval(1.7);
    let f = |y: f64| pot.value(y);
    // First derivative with the reference step h = 1e-4.
    let fd1 = richardson(&f, 1.7, 1, 1e-4);
    assert!((fd1 - d.u1).abs() < 1e-6 * d.u1.abs());
    check_against_differences(&pot, 1.7).unwrap();
    // Closed forms written out independently.
    let g = (-0.5f64 * 1.7 * 1.7).exp();
    assert!((d.u - g).abs() < 1e-15);
    assert!((d.u1 + 1.7 * g).abs() < 1e-15);
    assert!((d.u2 - (1.7 * 1.7 - 1.0) * g).abs() < 1e-15);
    assert!((d.u3 - (3.0 * 1.7 - 1.7 * 1.7 * 1.7) * g).abs() < 1e-15);
}

#[test]
fn soft_rect_value_matches_tanh_form() {
    let pot = Potential::soft_rect(1.0, 2.0, 0.5).unwrap();
    assert!((pot.value(0.0) - 4f64.tanh()).abs() < 1e-15);
    assert!((pot.value(0.0) - 0.999_329).abs() < 1e-6);
}

#[test]
fn soft_rect_approaches_height_as_edges_sharpen() {
    let mut prev = 0.0;
    for l in [1.0, 0.5, 0.25, 0.125] {
        let u0 = Potential::soft_rect(1.0, 1.0, l).unwrap().value(0.0);
        assert!(u0 > prev && u0 < 1.0);
        prev = u0;
    }
}

#[test]
fn all_channels_finite_far_out() {
    for pot in variants() {
        for x in [-1e6, -50.0, 50.0, 1e6] {
            let d = pot.eval(x);
            assert!(d.u.is_finite() && d.u1.is_finite() && d.u2.is_finite() && d.u3.is_finite());
        }
    }
}

#[test]
fn config_spellings() {
    let spec: PotentialSpec =
        toml::from_str("type = \"soft_rect\"\nA = 1.0\nd = 3.0\nL = 0.25\n").unwrap();
    assert_eq!(spec, PotentialSpec::SoftRect { a: 1.0, d: 3.0, l: 0.25 });
    assert!(toml::from_str::<PotentialSpec>("type = \"gaussian\"\nA = 1.0\nsigma = 1.0\nwidth = 2.0\n").is_err());
    assert!(Potential::new(PotentialSpec::Gaussian { a: 1.0, x0: 0.0, sigma: 0.0 }).is_err());
    assert!(Potential::new(PotentialSpec::SoftRect { a: 1.0, d: 1.0, l: -0.1 }).is_err());
    assert!(Potential::new(PotentialSpec::SoftRect { a: 1.0, d: 0.0, l: 0.1 }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn analytic_derivatives_match_differences(x in -20.0f64..20.0) {
        for pot in variants() {
            prop_assert!(check_against_differences(&pot, x).is_ok(), "{:?}", check_against_differences(&pot, x));
        }
    }

    #[test]
    fn barriers_have_parity_about_their_centre(h in 0.0f64..15.0) {
        for pot in [
            Potential::gaussian(1.3, 0.4, 0.8).unwrap(),
            Potential::soft_rect(0.9, 2.0, 0.5).unwrap(),
        ] {
            let c = pot.center();
            let (r, l) = (pot.eval(c + h), pot.eval(c - h));
            prop_assert!((r.u - l.u).abs() < 1e-12);
            prop_assert!((r.u1 + l.u1).abs() < 1e-12);
            prop_assert!((r.u2 - l.u2).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_bound_dominates(x in -20.0f64..20.0) {
        for pot in variants() {
            prop_assert!(pot.eval(x).u2.abs() <= pot.curvature_bound() * (1.0 + 1e-12));
        }
    }
}
