use std::f64::consts::TAU;

use proptest::prelude::*;
use softbody::body::{monads_from_cm, CMState, MonadState};
use softbody::dynamics::*;
use softbody::{Error, Potential, Scheme, SoftBodyParams};

fn body(mass: f64, omega0: f64, action: f64, alpha: f64) -> SoftBodyParams {
    SoftBodyParams::new(mass, omega0, action, alpha).unwrap()
}

/// Point particle `M x'' = -U'(x)` with classical RK4, written independently
/// of the library steppers.
fn point_particle(pot: &Potential, mass: f64, x0: f64, v0: f64, dt: f64, steps: usize) -> Vec<f64> {
    let f = |x: f64, v: f64| (v, -pot.eval(x).u1 / mass);
    let (mut x, mut v) = (x0, v0);
    let mut out = vec![x];
    for _ in 0..steps {
        let (a1, b1) = f(x, v);
        let (a2, b2) = f(x + 0.5 * dt * a1, v + 0.5 * dt * b1);
        let (a3, b3) = f(x + 0.5 * dt * a2, v + 0.5 * dt * b2);
        let (a4, b4) = f(x + dt * a3, v + dt * b3);
        x += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        out.push(x);
    }
    out
}

fn max_gap_to_reference(traj: &Trajectory, reference: &[f64], refine: usize) -> f64 {
    traj.samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.x - reference[i * refine]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn free_unexcited_body_moves_uniformly() {
    let params = body(1.0, 1.0, 0.0, 0.0);
    let traj = integrate(
        ModelTier::Exact,
        &params,
        &Potential::free(),
        -3.0,
        1.0,
        &IntegratorConfig::new(0.01, 100.0),
    )
    .unwrap();
    assert!((traj.last().t - 100.0).abs() < 1e-9);
    for s in &traj.samples {
        assert!((s.x - (-3.0 + s.t)).abs() <= 1e-10, "t = {}", s.t);
    }
}

#[test]
fn free_excited_body_keeps_modes_apart() {
    let (m, w, j, alpha) = (1.5, 2.0, 0.8, 1.1);
    let params = body(m, w, j, alpha);
    let a = (2.0 * j / (m * w)).sqrt();
    for tier in [ModelTier::Exact, ModelTier::Expanded] {
        let traj = integrate(
            tier,
            &params,
            &Potential::free(),
            0.5,
            -0.3,
            &IntegratorConfig::new(0.005, 60.0),
        )
        .unwrap();
        for s in &traj.samples {
            assert!((s.xi - a * (w * s.t + alpha).cos()).abs() < 1e-8, "{tier} t = {}", s.t);
            assert!((s.x - (0.5 - 0.3 * s.t)).abs() < 1e-10);
        }
    }
}

#[test]
fn fast_point_particle_keeps_its_speed_across_barrier() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let v0 = (2.0 * 1.5f64).sqrt();
    let traj = integrate(
        ModelTier::Exact,
        &body(1.0, 1.0, 0.0, 0.0),
        &pot,
        -12.0,
        v0,
        &IntegratorConfig::new(0.01, 24.0 / v0),
    )
    .unwrap();
    let last = traj.last();
    assert!(last.x > 10.0);
    assert!((last.v - v0).abs() < 1e-8, "{}", last.v - v0);
}

#[test]
fn unexcited_tiers_follow_point_particle() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let params = body(1.0, 3.0, 0.0, 0.7);
    let dt = 0.01;
    let t_max = 16.0;
    let steps = (t_max / dt) as usize;
    for ke in [0.7f64, 1.3] {
        let v0 = (2.0 * ke).sqrt();
        let reference = point_particle(&pot, 1.0, -8.0, v0, dt / 4.0, steps * 4);
        for tier in ModelTier::ALL {
            let traj = integrate(tier, &params, &pot, -8.0, v0, &IntegratorConfig::new(dt, t_max))
                .unwrap();
            let gap = max_gap_to_reference(&traj, &reference, 4);
            assert!(gap < 1e-9, "{tier} at KE {ke}: {gap:e}");
        }
    }
}

#[test]
fn linear_potential_ignores_internal_motion() {
    let pot = Potential::linear(0.35).unwrap();
    let dt = 0.01;
    let steps = 1000;
    let reference = point_particle(&pot, 2.0, 0.0, 1.0, dt, steps);
    for tier in ModelTier::ALL {
        let traj = integrate(
            tier,
            &body(2.0, 2.0, 1.3, 0.4),
            &pot,
            0.0,
            1.0,
            &IntegratorConfig::new(dt, steps as f64 * dt),
        )
        .unwrap();
        let gap = max_gap_to_reference(&traj, &reference, 1);
        assert!(gap < 1e-10, "{tier}: {gap:e}");
    }
}

#[test]
fn quadratic_well_gives_cm_its_own_frequency() {
    let (m, k) = (1.3, 2.1);
    let pot = Potential::quadratic(k).unwrap();
    let traj = integrate(
        ModelTier::Expanded,
        &body(m, 3.0, 0.9, 0.2),
        &pot,
        1.0,
        0.0,
        &IntegratorConfig::new(0.005, 80.0),
    )
    .unwrap();
    let mut crossings = Vec::new();
    for w in traj.samples.windows(2) {
        if w[0].x.signum() != w[1].x.signum() {
            crossings.push(w[0].t + (w[1].t - w[0].t) * w[0].x / (w[0].x - w[1].x));
        }
    }
    assert!(crossings.len() > 20);
    let span = crossings.last().unwrap() - crossings[0];
    let measured = std::f64::consts::PI * (crossings.len() - 1) as f64 / span;
    let expected = (k / m).sqrt();
    assert!((measured - expected).abs() < 1e-6 * expected, "{measured} vs {expected}");
}

#[test]
fn conserving_tiers_hold_energy_through_scattering() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    for alpha in [0.0, 1.0, 2.5, 4.0, 5.5] {
        for tier in [ModelTier::Exact, ModelTier::Expanded] {
            let traj = integrate(
                tier,
                &body(1.0, 2.0, 0.5, alpha),
                &pot,
                -8.0,
                1.2,
                &IntegratorConfig::new(0.01, 20.0),
            )
            .unwrap();
            assert!(traj.energy_drift() <= 1e-8, "{tier}: {:e}", traj.energy_drift());
        }
    }
}

#[test]
fn exact_tier_retraces_under_velocity_reversal() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let params = body(1.0, 2.0, 0.6, 0.9);
    let cfg = IntegratorConfig::new(0.01, 15.0);
    let start = monads_from_cm(&CMState::launch(&params, -6.0, 1.1));
    let forward = integrate_exact(&params, &pot, &start, &cfg).unwrap();
    let end = forward.last();
    let turned = monads_from_cm(&CMState {
        t: 0.0,
        x: end.x,
        v: -end.v,
        xi: end.xi,
        xi_dot: -end.xi_dot,
    });
    let back = integrate_exact(&params, &pot, &turned, &cfg).unwrap();
    let home = back.last();
    let first = forward.samples[0];
    for (a, b) in [
        (home.x, first.x),
        (home.v, -first.v),
        (home.xi, first.xi),
        (home.xi_dot, -first.xi_dot),
    ] {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn many_monads_conserve_energy_and_momentum() {
    let params = body(3.0, 1.5, 0.0, 0.0);
    let pot = Potential::gaussian(0.5, 0.0, 1.0).unwrap();
    let init = MonadState::new(
        0.0,
        vec![-5.2, -4.9, -5.0, -4.7],
        vec![1.0, 1.3, 0.8, 0.9],
    )
    .unwrap();
    let traj = integrate_exact(&params, &pot, &init, &IntegratorConfig::new(0.005, 12.0)).unwrap();
    assert!(traj.energy_drift() <= 1e-8);
    let free = integrate_exact(&params, &Potential::free(), &init, &IntegratorConfig::new(0.005, 12.0))
        .unwrap();
    let (x0, v0) = init.center_of_mass();
    for s in &free.samples {
        assert!((s.x - (x0 + v0 * s.t)).abs() < 1e-10);
    }
}

#[test]
fn expanded_tracks_exact_at_small_amplitude() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let (m, w) = (1.0, 2.0);
    // a = 0.01 sigma
    let j = 0.5 * m * w * 0.01f64.powi(2);
    for alpha in [0.0, 1.3, 3.0] {
        for ke in [0.8, 1.2] {
            let params = body(m, w, j, alpha);
            let v0 = (2.0 * ke / m).sqrt();
            let cfg = IntegratorConfig::new(0.01, 16.0 / v0);
            let ex = integrate(ModelTier::Exact, &params, &pot, -8.0, v0, &cfg).unwrap();
            let xp = integrate(ModelTier::Expanded, &params, &pot, -8.0, v0, &cfg).unwrap();
            let gap = ex.max_cm_difference(&xp);
            assert!(gap <= 1e-4, "alpha {alpha} KE {ke}: {gap:e}");
        }
    }
}

#[test]
fn wkb_phase_of_free_body_is_linear() {
    let w = 2.5;
    let traj = integrate(
        ModelTier::Wkb,
        &body(1.0, w, 0.7, 0.3),
        &Potential::free(),
        0.0,
        0.4,
        &IntegratorConfig::new(0.01, 40.0),
    )
    .unwrap();
    for s in &traj.samples {
        assert!((s.phi.unwrap() - w * s.t).abs() < 1e-10);
        assert!((s.x - 0.4 * s.t).abs() < 1e-10);
    }
}

#[test]
fn wkb_phase_rate_stays_in_curvature_band() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let (m, w) = (1.0, 3.0);
    let traj = integrate(
        ModelTier::Wkb,
        &body(m, w, 0.5, 1.0),
        &pot,
        -7.0,
        1.3,
        &IntegratorConfig::new(0.01, 12.0),
    )
    .unwrap();
    let c = pot.curvature_bound() / m;
    let (lo, hi) = ((w * w - c).sqrt(), (w * w + c).sqrt());
    for pair in traj.samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let rate = (b.phi.unwrap() - a.phi.unwrap()) / (b.t - a.t);
        assert!(rate >= lo - 1e-12 && rate <= hi + 1e-12, "rate {rate}");
    }
}

#[test]
fn wkb_aborts_where_internal_frequency_turns_imaginary() {
    let pot = Potential::gaussian(1.0, 0.0, 0.5).unwrap();
    let res = integrate(
        ModelTier::Wkb,
        &body(1.0, 1.0, 0.1, 0.0),
        &pot,
        -3.0,
        2.0,
        &IntegratorConfig::new(0.01, 20.0),
    );
    match res {
        Err(Error::WkbValidity { omega_sq, trajectory, .. }) => {
            assert!(omega_sq <= 0.0);
            assert!(trajectory.samples.len() > 1);
        }
        Err(other) => panic!("expected a validity abort, got {other}"),
        Ok(_) => panic!("expected a validity abort"),
    }
}

/// Largest CM separation between each approximate tier and the exact one.
fn tier_gaps(omega0: f64) -> [f64; 3] {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let params = body(1.0, omega0, 1.0, 0.8);
    let v0 = 3f64.sqrt();
    let dt = 0.025 / omega0;
    let cfg = IntegratorConfig::new(dt, 14.0 / v0).with_stride((0.05 / dt).round() as usize);
    let run = |tier| integrate(tier, &params, &pot, -7.0, v0, &cfg).unwrap();
    let exact = run(ModelTier::Exact);
    [ModelTier::Expanded, ModelTier::Wkb, ModelTier::Crude].map(|t| run(t).max_cm_difference(&exact))
}

#[test]
fn tiers_converge_as_internal_frequency_grows() {
    let ladder: Vec<[f64; 3]> = [10.0, 20.0, 40.0].iter().map(|&w| tier_gaps(w)).collect();
    for k in 0..3 {
        assert!(
            ladder[1][k] < ladder[0][k] && ladder[2][k] < ladder[1][k],
            "tier {k}: {:?}",
            ladder.iter().map(|g| g[k]).collect::<Vec<_>>()
        );
    }
}

#[test]
fn exit_speed_reflects_internal_energy_exchange() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let (m, w, j) = (1.0, 2.0, 0.25);
    let v0 = (2.0 * 1.4f64).sqrt();
    let ke = 0.5 * m * v0 * v0;
    let mut worst: f64 = 0.0;
    for i in 0..16 {
        let alpha = TAU * i as f64 / 16.0;
        for tier in [ModelTier::Exact, ModelTier::Expanded] {
            let traj = integrate(
                tier,
                &body(m, w, j, alpha),
                &pot,
                -9.0,
                v0,
                &IntegratorConfig::new(0.01, 40.0).with_stop(ExitWindow { lower: -9.5, upper: 9.5 }),
            )
            .unwrap();
            let last = traj.last();
            let side = last.x.signum();
            let expected = (2.0 * (traj.samples[0].e_cm - pot.asymptote(side)) / m).sqrt();
            worst = worst.max((expected - last.v.abs()).abs() / expected);
        }
    }
    assert!(worst <= 0.5 * j * w / ke, "relative speed change {worst:e}");
}

#[test]
fn time_step_guard_uses_fastest_frequency() {
    let pot = Potential::gaussian(1.0, 0.0, 0.1).unwrap();
    // U'' peaks at A / sigma^2 = 100, so sqrt(100) = 10 dominates omega0 = 1.
    let res = integrate(
        ModelTier::Expanded,
        &body(1.0, 1.0, 0.1, 0.0),
        &pot,
        -1.0,
        1.0,
        &IntegratorConfig::new(0.01, 1.0),
    );
    assert!(matches!(res, Err(Error::StepTooLarge { .. })));
}

#[test]
fn leapfrog_misses_the_default_energy_budget() {
    let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
    let params = body(1.0, 2.0, 0.5, 0.3);
    let cfg = IntegratorConfig::new(0.025, 20.0);
    let res = integrate(
        ModelTier::Exact,
        &params,
        &pot,
        -8.0,
        1.2,
        &cfg.clone().with_scheme(Scheme::Leapfrog),
    );
    assert!(matches!(res, Err(Error::EnergyBudget { .. })));
    assert!(integrate(ModelTier::Exact, &params, &pot, -8.0, 1.2, &cfg).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn csv_round_trips_every_sample(alpha in 0.0f64..TAU, tier_ix in 0usize..4) {
        let tier = ModelTier::ALL[tier_ix];
        let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
        let traj = integrate(
            tier, &body(1.0, 2.0, 0.3, alpha), &pot, -6.0, 1.0,
            &IntegratorConfig::new(0.01, 3.0).with_stride(7),
        ).unwrap();
        let text = traj.to_csv_string();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        let cols = header.split(',').count();
        prop_assert_eq!(cols, if tier == ModelTier::Wkb { 8 } else { 7 });
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        prop_assert_eq!(rows.len(), traj.samples.len());
        for (row, s) in rows.iter().zip(&traj.samples) {
            prop_assert_eq!(row[0], s.t);
            prop_assert_eq!(row[1], s.x);
            prop_assert_eq!(row[5], s.e_total);
        }
        // Samples at every 7th step plus the final one.
        prop_assert_eq!(traj.samples.len(), 300 / 7 + 2);
    }

    #[test]
    fn stored_alpha_is_periodic(alpha in 0.0f64..TAU) {
        let pot = Potential::gaussian(1.0, 0.0, 1.0).unwrap();
        let cfg = IntegratorConfig::new(0.01, 4.0);
        let a = integrate(ModelTier::Crude, &body(1.0, 2.0, 0.4, alpha), &pot, -4.0, 1.0, &cfg).unwrap();
        let b = integrate(ModelTier::Crude, &body(1.0, 2.0, 0.4, alpha + TAU), &pot, -4.0, 1.0, &cfg).unwrap();
        prop_assert!(a.max_cm_difference(&b) < 1e-12);
    }
}
