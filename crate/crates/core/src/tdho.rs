//! Time-dependent harmonic oscillator toolkit.
//!
//! The internal mode of a two-monad body obeys `xi'' + Omega^2(t) xi = 0` with
//! `Omega^2 = omega0^2 + U''(X(t))/M`. Writing two independent solutions as
//! `rho cos(theta)` and `rho sin(theta)` gives:
//!
//! * the action constant `J = M rho^2 theta_dot / 2`, which is `M/2` times
//!   their Wronskian and therefore exactly conserved;
//! * the Ermakov–Pinney equation `rho'' + Omega^2 rho - 4 J^2 / (M^2 rho^3) = 0`;
//! * the phase equation `Omega^2 = theta_dot^2 + {theta; t} / 2`, where
//!   `{theta; t} = theta'''/theta' - (3/2) (theta''/theta')^2` is the
//!   Schwarzian derivative;
//! * the oscillator energy `M (xi1_dot^2 + Omega^2 xi1^2) / 2 = J omega_eff`,
//!   with `omega_eff` built from `theta` and its first three derivatives.
//!
//! Negative `Omega^2` is allowed everywhere in the solver. The polar tools only
//! need `theta_dot > 0`, which holds whenever the two solutions are independent
//! with positive Wronskian.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::integrate::{Scheme, Symplectic};
use crate::series::Series;

/// Largest `dt * max sqrt|Omega^2|` accepted by [`solve_tdho`].
pub const MAX_PHASE_STEP: f64 = 0.05;

/// `Omega^2(t)` sampled on a uniform grid, interpolated by a clamped cubic
/// spline (end slopes from one-sided fourth-order differences).
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTrack {
    t_start: f64,
    dt: f64,
    samples: Vec<f64>,
    curvature: Vec<f64>,
}

impl FrequencyTrack {
    pub fn new(t_start: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        if samples.len() < 2 {
            return Err(Error::Domain("a frequency track needs at least 2 samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite Omega^2 sample at index {i}")));
        }
        let curvature = spline_curvature(dt, &samples);
        Ok(FrequencyTrack {
            t_start,
            dt,
            samples,
            curvature,
        })
    }

    pub fn from_fn(t_start: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..n).map(|i| f(t_start + i as f64 * dt)).collect();
        Self::new(t_start, dt, samples)
    }

    /// Constant `Omega^2` on `[t_start, t_end]`.
    pub fn constant(omega_sq: f64, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(t_start, t_end - t_start, vec![omega_sq, omega_sq])
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `max sqrt|Omega^2|` over the samples.
    pub fn max_frequency(&self) -> f64 {
        self.samples.iter().fold(0.0, |m: f64, v| m.max(v.abs().sqrt()))
    }

    /// Spline value; clamped to the end segments outside the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let s = (t - self.t_start) / self.dt;
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        let u = s - i as f64;
        let (y0, y1) = (self.samples[i], self.samples[i + 1]);
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        let h2 = self.dt * self.dt;
        let w = 1.0 - u;
        w * y0 + u * y1 + h2 / 6.0 * ((w * w * w - w) * m0 + (u * u * u - u) * m1)
    }
}

fn spline_curvature(h: f64, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut diag = vec![4.0; n];
    let mut rhs = vec![0.0; n];
    let mut lower = vec![1.0; n];
    let mut upper = vec![1.0; n];
    for i in 1..n - 1 {
        rhs[i] = 6.0 / (h * h) * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
    }
    if n >= 5 {
        let edge = Series::new(0.0, h, y.to_vec())
            .and_then(|s| s.derivative(1))
            .map(|d| (d.values[0], d.values[n - 1]))
            .unwrap_or((0.0, 0.0));
        diag[0] = 2.0;
        rhs[0] = 6.0 / h * ((y[1] - y[0]) / h - edge.0);
        diag[n - 1] = 2.0;
        rhs[n - 1] = 6.0 / h * (edge.1 - (y[n - 1] - y[n - 2]) / h);
    } else {
        // natural ends
        diag[0] = 1.0;
        upper[0] = 0.0;
        rhs[0] = 0.0;
        diag[n - 1] = 1.0;
        lower[n - 1] = 0.0;
        rhs[n - 1] = 0.0;
    }
    // Thomas algorithm; lower[i] couples row i to i-1, upper[i] row i to i+1.
    for i in 1..n {
        let f = lower[i] / diag[i - 1];
        diag[i] -= f * upper[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

/// Two solutions of the oscillator equation carried side by side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorState {
    pub t: f64,
    pub xi1: f64,
    pub xi1_dot: f64,
    pub xi2: f64,
    pub xi2_dot: f64,
}

impl OscillatorState {
    /// `xi1 xi2_dot - xi2 xi1_dot`.
    pub fn wronskian(&self) -> f64 {
        self.xi1 * self.xi2_dot - self.xi2 * self.xi1_dot
    }

    /// The pair `a cos(omega t + phase)`, `a sin(omega t + phase)` at time `t`.
    pub fn rotating(t: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        let (s, c) = (omega * t + phase).sin_cos();
        OscillatorState {
            t,
            xi1: amplitude * c,
            xi1_dot: -amplitude * omega * s,
            xi2: amplitude * s,
            xi2_dot: amplitude * omega * c,
        }
    }
}

/// Integrates both components over the whole track with the sixth-order
/// symplectic composition. Returns one state per step, starting with `init`.
pub fn solve_tdho(
    track: &FrequencyTrack,
    init: OscillatorState,
    dt: f64,
) -> Result<Vec<OscillatorState>> {
    solve_tdho_with(track, init, dt, Scheme::Yoshida6)
}

pub fn solve_tdho_with(
    track: &FrequencyTrack,
    init: OscillatorState,
    dt: f64,
    scheme: Scheme,
) -> Result<Vec<OscillatorState>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let product = dt * track.max_frequency();
    if product > MAX_PHASE_STEP {
        return Err(Error::StepTooLarge {
            product,
            limit: MAX_PHASE_STEP,
        });
    }
    let span = track.t_end() - init.t;
    let steps = (span / dt + 1e-9).floor().max(0.0) as usize;

    let accel = |t: f64, q: &[f64], a: &mut [f64]| {
        let w2 = track.eval(t);
        a[0] = -w2 * q[0];
        a[1] = -w2 * q[1];
    };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(init);
    let mut q = [init.xi1, init.xi2];
    let mut v = [init.xi1_dot, init.xi2_dot];
    match scheme {
        Scheme::Rk4 => {
            let f = |t: f64, y: &[f64; 4]| {
                let w2 = track.eval(t);
                [y[1], -w2 * y[0], y[3], -w2 * y[2]]
            };
            let mut y = [q[0], v[0], q[1], v[1]];
            for k in 0..steps {
                let t = init.t + k as f64 * dt;
                y = crate::integrate::rk4_step(&f, t, &y, dt);
                let t1 = init.t + (k + 1) as f64 * dt;
                if !y.iter().all(|v| v.is_finite()) {
                    return Err(Error::Divergence { t: t1 });
                }
                out.push(OscillatorState {
                    t: t1,
                    xi1: y[0],
                    xi1_dot: y[1],
                    xi2: y[2],
                    xi2_dot: y[3],
                });
            }
        }
        _ => {
            let mut stepper = Symplectic::new(scheme, 2);
            for k in 0..steps {
                let t = init.t + k as f64 * dt;
                stepper.step(&accel, t, &mut q, &mut v, dt);
                let t1 = init.t + (k + 1) as f64 * dt;
                if !(q.iter().chain(&v).all(|x| x.is_finite())) {
                    return Err(Error::Divergence { t: t1 });
                }
                out.push(OscillatorState {
                    t: t1,
                    xi1: q[0],
                    xi1_dot: v[0],
                    xi2: q[1],
                    xi2_dot: v[1],
                });
            }
        }
    }
    Ok(out)
}

/// Amplitude-phase form of an oscillator state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarState {
    pub t: f64,
    pub rho: f64,
    /// Phase in `(-pi, pi]`, or unwrapped when produced by [`polar_track`].
    pub theta: f64,
    pub theta_dot: f64,
}

/// Polar form of `xi1 + i xi2` and the action `J = M rho^2 theta_dot / 2`.
pub fn polar_decompose(state: &OscillatorState, mass: f64) -> Result<(PolarState, f64)> {
    let rho2 = state.xi1 * state.xi1 + state.xi2 * state.xi2;
    if rho2 == 0.0 || !rho2.is_finite() {
        return Err(Error::Degenerate { t: state.t });
    }
    let w = state.wronskian();
    let polar = PolarState {
        t: state.t,
        rho: rho2.sqrt(),
        theta: state.xi2.atan2(state.xi1),
        theta_dot: w / rho2,
    };
    Ok((polar, 0.5 * mass * w))
}

/// Polar decomposition of a whole run with the phase lifted to a continuous
/// function (a `2 pi` is added at every branch crossing).
pub fn polar_track(states: &[OscillatorState], mass: f64) -> Result<Vec<PolarState>> {
    let mut out: Vec<PolarState> = Vec::with_capacity(states.len());
    let mut turns = 0.0;
    let mut prev_raw = None;
    for s in states {
        let (mut p, _) = polar_decompose(s, mass)?;
        if let Some(prev) = prev_raw {
            let jump = p.theta - prev;
            if jump < -std::f64::consts::PI {
                turns += TAU;
            } else if jump > std::f64::consts::PI {
                turns -= TAU;
            }
        }
        prev_raw = Some(p.theta);
        p.theta += turns;
        out.push(p);
    }
    Ok(out)
}

/// Lifts a wrapped phase sequence to a continuous one in place.
pub fn unwrap_phase(phase: &mut [f64]) {
    let mut turns = 0.0;
    for i in 1..phase.len() {
        let raw = phase[i];
        let prev = phase[i - 1] - turns;
        let jump = raw - prev;
        if jump < -std::f64::consts::PI {
            turns += TAU;
        } else if jump > std::f64::consts::PI {
            turns -= TAU;
        }
        phase[i] = raw + turns;
    }
}

/// Uniform-grid series helpers for solver output (requires a constant step).
pub fn radius_series(polar: &[PolarState]) -> Result<Series> {
    series_of(polar, |p| p.rho)
}

pub fn phase_series(polar: &[PolarState]) -> Result<Series> {
    series_of(polar, |p| p.theta)
}

fn series_of(polar: &[PolarState], f: impl Fn(&PolarState) -> f64) -> Result<Series> {
    if polar.len() < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let dt = polar[1].t - polar[0].t;
    Series::new(polar[0].t, dt, polar.iter().map(f).collect())
}

/// `max |rho'' + Omega^2 rho - 4 J^2 / (M^2 rho^3)|` normalized by
/// `max |Omega^2 rho|`, with `rho''` from fourth-order differences.
pub fn ermakov_pinney_residual(
    rho: &Series,
    track: &FrequencyTrack,
    action: f64,
    mass: f64,
) -> Result<f64> {
    if let Some(i) = rho.values.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::Domain(format!(
            "rho must be positive, got {} at t = {}",
            rho.values[i],
            rho.time(i)
        )));
    }
    let rho_dd = rho.derivative(2)?;
    let c = 4.0 * action * action / (mass * mass);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, (&r, &r_dd)) in rho.values.iter().zip(&rho_dd.values).enumerate() {
        let w2 = track.eval(rho.time(i));
        let res = r_dd + w2 * r - c / (r * r * r);
        worst = worst.max(res.abs());
        scale = scale.max((w2 * r).abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Stencil accuracy for phase derivatives. The third derivative sits where
/// truncation and rounding errors cross, and fourth order leaves no common
/// sample spacing below a 1e-6 residual budget.
pub const PHASE_STENCIL_ACCURACY: usize = 6;

/// Phase derivatives `(theta', theta'', theta''')`, rejecting non-rotating
/// phases.
fn phase_derivatives(theta: &Series) -> Result<(Series, Series, Series)> {
    let d1 = theta.derivative_with(1, PHASE_STENCIL_ACCURACY)?;
    if let Some(i) = d1.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain(format!(
            "theta_dot must be positive, got {} at t = {}",
            d1.values[i],
            theta.time(i)
        )));
    }
    Ok((
        d1,
        theta.derivative_with(2, PHASE_STENCIL_ACCURACY)?,
        theta.derivative_with(3, PHASE_STENCIL_ACCURACY)?,
    ))
}

/// Schwarzian derivative `{theta; t}` of a sampled phase.
pub fn schwarzian(theta: &Series) -> Result<Series> {
    let (d1, d2, d3) = phase_derivatives(theta)?;
    let values = d1
        .values
        .iter()
        .zip(&d2.values)
        .zip(&d3.values)
        .map(|((a, b), c)| c / a - 1.5 * (b / a) * (b / a))
        .collect();
    Series::new(theta.t_start, theta.dt, values)
}

/// `max |Omega^2 - theta_dot^2 - {theta; t}/2|` normalized by `max theta_dot^2`.
pub fn phase_equation_residual(theta: &Series, track: &FrequencyTrack) -> Result<f64> {
    let (d1, d2, d3) = phase_derivatives(theta)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..theta.len() {
        let (a, b, c) = (d1.values[i], d2.values[i], d3.values[i]);
        let s = c / a - 1.5 * (b / a) * (b / a);
        let res = track.eval(theta.time(i)) - a * a - 0.5 * s;
        worst = worst.max(res.abs());
        scale = scale.max(a * a);
    }
    Ok(worst / scale)
}

/// Effective frequency
/// `theta' + cos^2(theta) (theta''' theta' - theta''^2) / (2 theta'^3) + sin(2 theta) theta'' / (2 theta')`.
pub fn omega_eff(theta: &Series) -> Result<Series> {
    let (d1, d2, d3) = phase_derivatives(theta)?;
    let values = theta
        .values
        .iter()
        .enumerate()
        .map(|(i, &th)| {
            let (a, b, c) = (d1.values[i], d2.values[i], d3.values[i]);
            let cos = th.cos();
            a + 0.5 * cos * cos * (c * a - b * b) / (a * a * a) + 0.5 * (2.0 * th).sin() * b / a
        })
        .collect();
    Series::new(theta.t_start, theta.dt, values)
}

/// Instantaneous energy of the first component, `M (xi1_dot^2 + Omega^2 xi1^2) / 2`.
pub fn oscillator_energy(state: &OscillatorState, omega_sq: f64, mass: f64) -> f64 {
    0.5 * mass * (state.xi1_dot * state.xi1_dot + omega_sq * state.xi1 * state.xi1)
}

/// Continuous phase of the constant-frequency family
/// `theta(t) = arctan(kappa tan(omega t + alpha0))`, lifted across branches.
pub fn constant_frequency_phase(t: f64, omega: f64, kappa: f64, alpha0: f64) -> f64 {
    let u = omega * t + alpha0;
    let (s, c) = u.sin_cos();
    // theta - u = atan((kappa - 1) sin u cos u / (cos^2 u + kappa sin^2 u))
    u + ((kappa - 1.0) * s * c).atan2(c * c + kappa * s * s)
}

/// `theta_dot` of [`constant_frequency_phase`].
pub fn constant_frequency_phase_rate(t: f64, omega: f64, kappa: f64, alpha0: f64) -> f64 {
    let (s, c) = (omega * t + alpha0).sin_cos();
    kappa * omega / (c * c + kappa * kappa * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic() {
        let f = |t: f64| 0.3 * t * t * t - t * t + 2.0;
        let tr = FrequencyTrack::from_fn(0.0, 0.1, 41, f).unwrap();
        for i in 0..400 {
            let t = 0.01 * i as f64 + 0.003;
            assert!((tr.eval(t) - f(t)).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn constant_track_is_flat() {
        let tr = FrequencyTrack::constant(4.0, 0.0, 10.0).unwrap();
        assert_eq!(tr.eval(3.7), 4.0);
        assert_eq!(tr.t_end(), 10.0);
    }

    #[test]
    fn rejects_large_step() {
        let tr = FrequencyTrack::constant(100.0, 0.0, 1.0).unwrap();
        let init = OscillatorState::rotating(0.0, 1.0, 10.0, 0.0);
        assert!(matches!(
            solve_tdho(&tr, init, 0.01),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let tr = FrequencyTrack::constant(-1.0, 0.0, 2000.0).unwrap();
        let init = OscillatorState {
            t: 0.0,
            xi1: 1.0,
            xi1_dot: 0.0,
            xi2: 0.0,
            xi2_dot: 1.0,
        };
        match solve_tdho(&tr, init, 0.05) {
            Err(Error::Divergence { t }) => assert!(t > 100.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn polar_of_rotation() {
        let s = OscillatorState::rotating(0.4, 1.0, 2.0, 0.0);
        let (p, j) = polar_decompose(&s, 1.0).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-15);
        assert!((p.theta_dot - 2.0).abs() < 1e-15);
        assert!((j - 1.0).abs() < 1e-15);
        let scaled = OscillatorState::rotating(0.4, 3.0, 2.0, 0.0);
        let (_, j3) = polar_decompose(&scaled, 1.0).unwrap();
        assert!((j3 - 9.0 * j).abs() < 1e-13);
    }

    #[test]
    fn caustic_is_degenerate() {
        let s = OscillatorState {
            t: 1.0,
            xi1: 0.0,
            xi1_dot: 1.0,
            xi2: 0.0,
            xi2_dot: 0.0,
        };
        assert!(matches!(
            polar_decompose(&s, 1.0),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn unwrap_lifts_branches() {
        let mut ph: Vec<f64> = (0..100)
            .map(|i| {
                let t = 0.1 * i as f64;
                t.sin().atan2(t.cos())
            })
            .collect();
        unwrap_phase(&mut ph);
        for (i, p) in ph.iter().enumerate() {
            assert!((p - 0.1 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_phase() {
        let th = Series::from_fn(0.0, 0.05, 100, |t| 1.5 * t).unwrap();
        let s = schwarzian(&th).unwrap();
        // Pure rounding: ulp(theta) amplified by the one-sided h^-3 closures.
        assert!(s.max_abs() < 1e-8, "{:e}", s.max_abs());
        let w = omega_eff(&th).unwrap();
        assert!(w.values.iter().all(|v| (v - 1.5).abs() < 1e-9));
        let tr = FrequencyTrack::constant(2.25, 0.0, 5.0).unwrap();
        assert!(phase_equation_residual(&th, &tr).unwrap() < 1e-9);
    }

    #[test]
    fn non_rotating_phase_rejected() {
        let th = Series::from_fn(0.0, 0.01, 200, |t| -t).unwrap();
        assert!(matches!(schwarzian(&th), Err(Error::Domain(_))));
        assert!(matches!(omega_eff(&th), Err(Error::Domain(_))));
    }

    #[test]
    fn ep_rejects_nonpositive_radius() {
        let rho = Series::new(0.0, 0.1, vec![1.0, 0.5, 0.0, 0.5, 1.0, 1.0]).unwrap();
        let tr = FrequencyTrack::constant(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            ermakov_pinney_residual(&rho, &tr, 0.5, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn equilibrium_radius() {
        // 4 J^2 / (M^2 rho^3) = omega0^2 rho at rho = sqrt(2J / (M omega0)).
        let (j, m, w): (f64, f64, f64) = (0.7, 1.3, 2.0);
        let r = (2.0 * j / (m * w)).sqrt();
        let rho = Series::new(0.0, 0.01, vec![r; 50]).unwrap();
        let tr = FrequencyTrack::constant(w * w, 0.0, 1.0).unwrap();
        assert!(ermakov_pinney_residual(&rho, &tr, j, m).unwrap() < 1e-10);
    }

    #[test]
    fn unexcited_radius_is_linear_oscillator() {
        let h = 1e-3;
        let t0 = -std::f64::consts::FRAC_PI_2 + 0.05;
        let n = ((std::f64::consts::PI - 0.1) / h) as usize;
        let rho = Series::from_fn(t0, h, n, |t| t.cos().abs()).unwrap();
        let tr = FrequencyTrack::constant(1.0, -2.0, 2.0).unwrap();
        let res = ermakov_pinney_residual(&rho, &tr, 0.0, 1.0).unwrap();
        assert!(res < 1e-8, "{res:e}");
    }

    #[test]
    fn constant_frequency_phase_is_continuous() {
        let mut prev = constant_frequency_phase(0.0, 1.0, 5.0, 0.3);
        for i in 1..10_000 {
            let th = constant_frequency_phase(i as f64 * 1e-3, 1.0, 5.0, 0.3);
            assert!(th > prev && th - prev < 0.01);
            prev = th;
        }
    }
}
