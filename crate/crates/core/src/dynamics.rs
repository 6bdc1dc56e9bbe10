//! Trajectory integrators for the four model tiers.
//!
//! | tier       | degrees of freedom          | scheme (default)        |
//! |------------|-----------------------------|-------------------------|
//! | `Exact`    | every monad, no expansion   | 6th-order symplectic    |
//! | `Expanded` | `X`, `xi`; `U` to 2nd order | 6th-order symplectic    |
//! | `Wkb`      | `X`, running phase `phi`    | RK4                     |
//! | `Crude`    | `X` only, fixed frequency   | RK4                     |
//!
//! The WKB tier replaces the internal mode by its adiabatic solution
//! `xi = sqrt(2J/M) Omega^(-1/2) cos(phi + alpha)` with
//! `phi(t) = int_0^t Omega(X(s)) ds`. The history integral is carried as an
//! extra state variable `phi' = Omega(X)`, so the centre-of-mass force
//! `-U' - J U''' cos^2(phi + alpha) / (M Omega)` stays local in time.
//!
//! The crude tier freezes `Omega` at `omega0`: the centre of mass moves in
//! `U + (J U'' / (M omega0)) cos^2(omega0 t + alpha)`.
//!
//! Integrators only record; interpreting a trajectory is left to
//! [`crate::experiments`].

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::body::{cm_from_monads, monads_from_cm, total_energy_exact, CMState, MonadState,
    SoftBodyParams};
use crate::body::total_energy_expanded;
use crate::error::{Error, Result};
use crate::integrate::{rk4_step, Scheme, Symplectic};
use crate::potentials::Potential;

/// Largest `dt` times the fastest model frequency accepted at run start.
pub const MAX_PHASE_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTier {
    Exact,
    Expanded,
    Wkb,
    Crude,
}

impl ModelTier {
    pub const ALL: [ModelTier; 4] = [
        ModelTier::Exact,
        ModelTier::Expanded,
        ModelTier::Wkb,
        ModelTier::Crude,
    ];

    pub fn default_scheme(self) -> Scheme {
        match self {
            ModelTier::Exact | ModelTier::Expanded => Scheme::Yoshida6,
            ModelTier::Wkb | ModelTier::Crude => Scheme::Rk4,
        }
    }

    /// Whether the tier conserves its total energy (static potentials only).
    pub fn conserves_energy(self) -> bool {
        matches!(self, ModelTier::Exact | ModelTier::Expanded)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTier::Exact => "exact",
            ModelTier::Expanded => "expanded",
            ModelTier::Wkb => "wkb",
            ModelTier::Crude => "crude",
        }
    }
}

impl fmt::Display for ModelTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ModelTier::Exact),
            "expanded" => Ok(ModelTier::Expanded),
            "wkb" => Ok(ModelTier::Wkb),
            "crude" => Ok(ModelTier::Crude),
            other => Err(Error::param(
                "tier",
                format!("expected exact|expanded|wkb|crude, got `{other}`"),
            )),
        }
    }
}

/// Stop as soon as the centre of mass is below `lower` moving left or above
/// `upper` moving right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitWindow {
    pub lower: f64,
    pub upper: f64,
}

impl ExitWindow {
    #[inline]
    pub fn exited(&self, x: f64, v: f64) -> bool {
        (x < self.lower && v < 0.0) || (x > self.upper && v > 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_budget")]
    pub energy_drift_budget: f64,
    /// `None` picks the tier default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(skip)]
    pub stop: Option<ExitWindow>,
}

fn default_stride() -> usize {
    1
}

fn default_budget() -> f64 {
    1e-8
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        IntegratorConfig {
            dt,
            t_max,
            record_stride: 1,
            energy_drift_budget: default_budget(),
            scheme: None,
            stop: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = Some(scheme);
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.energy_drift_budget = budget;
        self
    }

    pub fn with_stop(mut self, stop: ExitWindow) -> Self {
        self.stop = Some(stop);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::param("t_max", format!("must be > 0, got {}", self.t_max)));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be >= 1"));
        }
        if !(self.energy_drift_budget > 0.0) {
            return Err(Error::param("energy_drift_budget", "must be > 0"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }

    fn check_step(&self, frequency: f64) -> Result<()> {
        self.validate()?;
        let product = self.dt * frequency;
        if product > MAX_PHASE_STEP {
            return Err(Error::StepTooLarge {
                product,
                limit: MAX_PHASE_STEP,
            });
        }
        Ok(())
    }
}

/// One recorded point of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub xi: f64,
    pub xi_dot: f64,
    /// Total energy of the tier's model (see the tier docs for WKB/crude).
    pub e_total: f64,
    /// Point-particle energy of the centre of mass, `M V^2/2 + U(X)`.
    pub e_cm: f64,
    /// Running phase `phi`; WKB tier only.
    pub phi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: SoftBodyParams,
    pub tier: ModelTier,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.samples[0].t
    }

    /// `max |E(t) - E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.samples[0].e_total;
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        self.samples
            .iter()
            .map(|s| (s.e_total - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn max_cm_difference(&self, other: &Trajectory) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.x - b.x).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,X,V,xi,xi_dot,E_total,E_cm[,phi]`, every value with
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let with_phi = self.samples.iter().any(|s| s.phi.is_some());
        if with_phi {
            writeln!(w, "t,X,V,xi,xi_dot,E_total,E_cm,phi")?;
        } else {
            writeln!(w, "t,X,V,xi,xi_dot,E_total,E_cm")?;
        }
        for s in &self.samples {
            write!(
                w,
                "{},{},{},{},{},{},{}",
                fmt17(s.t),
                fmt17(s.x),
                fmt17(s.v),
                fmt17(s.xi),
                fmt17(s.xi_dot),
                fmt17(s.e_total),
                fmt17(s.e_cm)
            )?;
            if with_phi {
                write!(w, ",{}", fmt17(s.phi.unwrap_or(f64::NAN)))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Formats with 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Recorder {
    samples: Vec<Sample>,
    stride: usize,
}

impl Recorder {
    fn new(cfg: &IntegratorConfig, first: Sample) -> Self {
        let mut samples = Vec::with_capacity(cfg.steps() / cfg.record_stride + 2);
        samples.push(first);
        Recorder {
            samples,
            stride: cfg.record_stride,
        }
    }

    fn due(&self, step: usize, last: usize) -> bool {
        step.is_multiple_of(self.stride) || step == last
    }

    fn finish(self, params: &SoftBodyParams, tier: ModelTier) -> Trajectory {
        Trajectory {
            params: *params,
            tier,
            samples: self.samples,
        }
    }
}

fn audit(traj: Trajectory, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let drift = traj.energy_drift();
    if drift > cfg.energy_drift_budget {
        let e0 = traj.samples[0].e_total;
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        let t = traj
            .samples
            .iter()
            .find(|s| (s.e_total - e0).abs() / scale > cfg.energy_drift_budget)
            .map(|s| s.t)
            .unwrap_or(0.0);
        return Err(Error::EnergyBudget {
            t,
            drift,
            budget: cfg.energy_drift_budget,
            trajectory: Box::new(traj),
        });
    }
    Ok(traj)
}

fn external_frequency(params: &SoftBodyParams, pot: &Potential) -> f64 {
    (pot.curvature_bound() / params.mass()).sqrt()
}

fn exact_sample(params: &SoftBodyParams, pot: &Potential, state: &MonadState) -> Sample {
    let (x, v, xi, xi_dot) = if state.len() == 2 {
        let cm = cm_from_monads(state).expect("two monads");
        (cm.x, cm.v, cm.xi, cm.xi_dot)
    } else {
        let (x, v) = state.center_of_mass();
        let n = state.len() as f64;
        let spread = (state.positions.iter().map(|p| (p - x) * (p - x)).sum::<f64>() / n).sqrt();
        let rate = if spread > 0.0 {
            state
                .positions
                .iter()
                .zip(&state.velocities)
                .map(|(p, u)| (p - x) * (u - v))
                .sum::<f64>()
                / (n * spread)
        } else {
            0.0
        };
        (x, v, spread, rate)
    };
    Sample {
        t: state.t,
        x,
        v,
        xi,
        xi_dot,
        e_total: total_energy_exact(params, state, pot),
        e_cm: 0.5 * params.mass() * v * v + pot.value(x),
        phi: None,
    }
}

type MonadStep<'a> = Box<dyn FnMut(&mut MonadState, f64) + 'a>;

/// Integrates every monad under the unexpanded potential energy.
///
/// Works for any number of monads `N >= 2`. For `N = 2` the recorded `xi` is
/// the half-separation; for `N > 2` it is the RMS distance from the centre of
/// mass.
pub fn integrate_exact(
    params: &SoftBodyParams,
    pot: &Potential,
    init: &MonadState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let n = init.len();
    if n < 2 {
        return Err(Error::Unsupported("exact tier needs at least 2 monads".into()));
    }
    let internal = params.omega0() * (n as f64 / 2.0).sqrt();
    cfg.check_step(internal.max(external_frequency(params, pot)))?;
    let scheme = cfg.scheme.unwrap_or(ModelTier::Exact.default_scheme());

    let inv_mass = 1.0 / params.mass();
    let spring = 0.5 * params.omega0() * params.omega0() * n as f64;
    let accel = |_t: f64, q: &[f64], a: &mut [f64]| {
        let mean = q.iter().sum::<f64>() / n as f64;
        for (ai, &xi) in a.iter_mut().zip(q) {
            *ai = -pot.eval(xi).u1 * inv_mass - spring * (xi - mean);
        }
    };

    let mut state = init.clone();
    let t0 = init.t;
    let steps = cfg.steps();
    let mut rec = Recorder::new(cfg, exact_sample(params, pot, &state));
    let mut step_fn: MonadStep<'_> = if scheme.is_symplectic() {
        let mut st = Symplectic::new(scheme, n);
        Box::new(move |s: &mut MonadState, t: f64| {
            st.step(&accel, t, &mut s.positions, &mut s.velocities, cfg.dt)
        })
    } else {
        let mut a = vec![0.0; n];
        let mut tmp_q = vec![0.0; n];
        let mut tmp_v = vec![0.0; n];
        Box::new(move |s: &mut MonadState, t: f64| {
            rk4_vec(&accel, t, &mut s.positions, &mut s.velocities, cfg.dt, &mut a, &mut tmp_q, &mut tmp_v)
        })
    };
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * cfg.dt;
        step_fn(&mut state, t);
        state.t = t0 + k as f64 * cfg.dt;
        if !state.positions.iter().chain(&state.velocities).all(|v| v.is_finite()) {
            return Err(Error::Divergence { t: state.t });
        }
        let exited = cfg.stop.is_some_and(|w| {
            let (x, v) = state.center_of_mass();
            w.exited(x, v)
        });
        if exited || rec.due(k, steps) {
            rec.samples.push(exact_sample(params, pot, &state));
        }
        if exited {
            break;
        }
    }
    audit(rec.finish(params, ModelTier::Exact), cfg)
}

/// RK4 on `q'' = a(t, q)` for slices, written as a first-order system.
#[allow(clippy::too_many_arguments)]
fn rk4_vec(
    accel: &impl Fn(f64, &[f64], &mut [f64]),
    t: f64,
    q: &mut [f64],
    v: &mut [f64],
    h: f64,
    a: &mut [f64],
    tq: &mut [f64],
    tv: &mut [f64],
) {
    let n = q.len();
    let mut kq = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut kv = kq.clone();
    let stages = [(0.0, 0.0), (0.5, 0.5), (0.5, 0.5), (1.0, 1.0)];
    for (s, &(ct, cy)) in stages.iter().enumerate() {
        for i in 0..n {
            let (pq, pv) = if s == 0 { (0.0, 0.0) } else { (kq[s - 1][i], kv[s - 1][i]) };
            tq[i] = q[i] + cy * h * pq;
            tv[i] = v[i] + cy * h * pv;
        }
        accel(t + ct * h, tq, a);
        kq[s].copy_from_slice(tv);
        kv[s].copy_from_slice(a);
    }
    for i in 0..n {
        q[i] += h / 6.0 * (kq[0][i] + 2.0 * kq[1][i] + 2.0 * kq[2][i] + kq[3][i]);
        v[i] += h / 6.0 * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
    }
}

fn expanded_sample(params: &SoftBodyParams, pot: &Potential, cm: &CMState) -> Sample {
    Sample {
        t: cm.t,
        x: cm.x,
        v: cm.v,
        xi: cm.xi,
        xi_dot: cm.xi_dot,
        e_total: total_energy_expanded(params, cm, pot),
        e_cm: 0.5 * params.mass() * cm.v * cm.v + pot.value(cm.x),
        phi: None,
    }
}

/// Integrates the coupled centre-of-mass / internal-mode equations
/// `M X'' = -U'(X) - U'''(X) xi^2 / 2` and `xi'' + (omega0^2 + U''(X)/M) xi = 0`.
pub fn integrate_expanded(
    params: &SoftBodyParams,
    pot: &Potential,
    init: &CMState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.check_step(params.omega0().max(external_frequency(params, pot)))?;
    let scheme = cfg.scheme.unwrap_or(ModelTier::Expanded.default_scheme());
    let inv_mass = 1.0 / params.mass();
    let w2 = params.omega0() * params.omega0();
    let accel = |_t: f64, q: &[f64], a: &mut [f64]| {
        let d = pot.eval(q[0]);
        a[0] = (-d.u1 - 0.5 * d.u3 * q[1] * q[1]) * inv_mass;
        a[1] = -(w2 + d.u2 * inv_mass) * q[1];
    };

    let t0 = init.t;
    let steps = cfg.steps();
    let mut q = [init.x, init.xi];
    let mut v = [init.v, init.xi_dot];
    let mut rec = Recorder::new(cfg, expanded_sample(params, pot, init));
    let mut symplectic = scheme.is_symplectic().then(|| Symplectic::new(scheme, 2));
    let rk = |t: f64, y: &[f64; 4]| {
        let mut a = [0.0; 2];
        accel(t, &[y[0], y[2]], &mut a);
        [y[1], a[0], y[3], a[1]]
    };
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * cfg.dt;
        match symplectic.as_mut() {
            Some(st) => st.step(&accel, t, &mut q, &mut v, cfg.dt),
            None => {
                let y = rk4_step(&rk, t, &[q[0], v[0], q[1], v[1]], cfg.dt);
                q = [y[0], y[2]];
                v = [y[1], y[3]];
            }
        }
        let cm = CMState {
            t: t0 + k as f64 * cfg.dt,
            x: q[0],
            v: v[0],
            xi: q[1],
            xi_dot: v[1],
        };
        if !(q.iter().chain(&v).all(|x| x.is_finite())) {
            return Err(Error::Divergence { t: cm.t });
        }
        let exited = cfg.stop.is_some_and(|w| w.exited(cm.x, cm.v));
        if exited || rec.due(k, steps) {
            rec.samples.push(expanded_sample(params, pot, &cm));
        }
        if exited {
            break;
        }
    }
    audit(rec.finish(params, ModelTier::Expanded), cfg)
}

fn wkb_sample(params: &SoftBodyParams, pot: &Potential, t: f64, y: &[f64; 3]) -> Sample {
    let m = params.mass();
    let d = pot.eval(y[0]);
    let omega = (params.omega0() * params.omega0() + d.u2 / m).max(0.0).sqrt();
    let amp = (2.0 * params.action() / m).sqrt();
    let (s, c) = (y[2] + params.alpha()).sin_cos();
    let e_cm = 0.5 * m * y[1] * y[1] + d.u;
    Sample {
        t,
        x: y[0],
        v: y[1],
        xi: amp / omega.sqrt() * c,
        xi_dot: -amp * omega.sqrt() * s,
        e_total: e_cm + params.action() * omega,
        e_cm,
        phi: Some(y[2]),
    }
}

/// Integrates the WKB centre-of-mass equation with the running phase as a
/// state variable.
///
/// Aborts with [`Error::WkbValidity`] (carrying the trajectory so far) if
/// `omega0^2 + U''/M` becomes non-positive. The recorded `E_total` is the
/// adiabatic estimate `M V^2/2 + U + J Omega(X)`.
pub fn integrate_wkb(
    params: &SoftBodyParams,
    pot: &Potential,
    init: &CMState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let scheme = cfg.scheme.unwrap_or(ModelTier::Wkb.default_scheme());
    if scheme != Scheme::Rk4 {
        return Err(Error::Unsupported(format!(
            "the WKB tier is not separable; {scheme:?} cannot integrate it"
        )));
    }
    let m = params.mass();
    let w2 = params.omega0() * params.omega0();
    cfg.check_step((w2 + pot.curvature_bound() / m).sqrt())?;
    let (j, alpha) = (params.action(), params.alpha());

    let invalid = std::cell::Cell::new(None::<f64>);
    let f = |_t: f64, y: &[f64; 3]| {
        let d = pot.eval(y[0]);
        let om2 = w2 + d.u2 / m;
        if !(om2 > 0.0) {
            if invalid.get().is_none() {
                invalid.set(Some(om2));
            }
            return [y[1], 0.0, 0.0];
        }
        let omega = om2.sqrt();
        let c = (y[2] + alpha).cos();
        [y[1], (-d.u1 - j * d.u3 * c * c / (m * omega)) / m, omega]
    };

    let t0 = init.t;
    let steps = cfg.steps();
    let mut y = [init.x, init.v, 0.0];
    let mut rec = Recorder::new(cfg, wkb_sample(params, pot, t0, &y));
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * cfg.dt;
        y = rk4_step(&f, t, &y, cfg.dt);
        let t1 = t0 + k as f64 * cfg.dt;
        if let Some(omega_sq) = invalid.get() {
            return Err(Error::WkbValidity {
                t: t1,
                omega_sq,
                trajectory: Box::new(rec.finish(params, ModelTier::Wkb)),
            });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { t: t1 });
        }
        let exited = cfg.stop.is_some_and(|w| w.exited(y[0], y[1]));
        if exited || rec.due(k, steps) {
            rec.samples.push(wkb_sample(params, pot, t1, &y));
        }
        if exited {
            break;
        }
    }
    Ok(rec.finish(params, ModelTier::Wkb))
}

fn crude_sample(params: &SoftBodyParams, pot: &Potential, t: f64, x: f64, v: f64) -> Sample {
    let m = params.mass();
    let w0 = params.omega0();
    let d = pot.eval(x);
    let a = params.amplitude();
    let (s, c) = (w0 * t + params.alpha()).sin_cos();
    let e_cm = 0.5 * m * v * v + d.u;
    Sample {
        t,
        x,
        v,
        xi: a * c,
        xi_dot: -a * w0 * s,
        e_total: e_cm + params.action() * d.u2 / (m * w0) * c * c + params.action() * w0,
        e_cm,
        phi: None,
    }
}

/// Integrates the centre of mass in the time-dependent effective potential
/// `U + (J U'' / (M omega0)) cos^2(omega0 t + alpha)`.
///
/// `t` is measured from `t = 0`, so `alpha` is the internal phase at launch
/// time zero. No energy budget applies; the recorded `E_total` is
/// `M V^2/2 + U_eff + J omega0`.
pub fn integrate_crude(
    params: &SoftBodyParams,
    pot: &Potential,
    init: &CMState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let m = params.mass();
    let w0 = params.omega0();
    cfg.check_step(w0.max(external_frequency(params, pot)))?;
    let scheme = cfg.scheme.unwrap_or(ModelTier::Crude.default_scheme());
    let coupling = params.action() / (m * w0);
    let alpha = params.alpha();
    let force = |t: f64, x: f64| {
        let d = pot.eval(x);
        let c = (w0 * t + alpha).cos();
        (-d.u1 - coupling * d.u3 * c * c) / m
    };

    let t0 = init.t;
    let steps = cfg.steps();
    let (mut x, mut v) = (init.x, init.v);
    let mut rec = Recorder::new(cfg, crude_sample(params, pot, t0, x, v));
    let accel = |t: f64, q: &[f64], a: &mut [f64]| a[0] = force(t, q[0]);
    let mut symplectic = scheme.is_symplectic().then(|| Symplectic::new(scheme, 1));
    let rk = |t: f64, y: &[f64; 2]| [y[1], force(t, y[0])];
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * cfg.dt;
        match symplectic.as_mut() {
            Some(st) => {
                let (mut q, mut p) = ([x], [v]);
                st.step(&accel, t, &mut q, &mut p, cfg.dt);
                x = q[0];
                v = p[0];
            }
            None => {
                let y = rk4_step(&rk, t, &[x, v], cfg.dt);
                x = y[0];
                v = y[1];
            }
        }
        let t1 = t0 + k as f64 * cfg.dt;
        if !(x.is_finite() && v.is_finite()) {
            return Err(Error::Divergence { t: t1 });
        }
        let exited = cfg.stop.is_some_and(|w| w.exited(x, v));
        if exited || rec.due(k, steps) {
            rec.samples.push(crude_sample(params, pot, t1, x, v));
        }
        if exited {
            break;
        }
    }
    Ok(rec.finish(params, ModelTier::Crude))
}

/// Launches a two-monad body at `x` with centre-of-mass velocity `v` at
/// `t = 0`, internal mode set by `(J, alpha)`, and integrates it on `tier`.
pub fn integrate(
    tier: ModelTier,
    params: &SoftBodyParams,
    pot: &Potential,
    x: f64,
    v: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let cm = CMState::launch(params, x, v);
    match tier {
        ModelTier::Exact => integrate_exact(params, pot, &monads_from_cm(&cm), cfg),
        ModelTier::Expanded => integrate_expanded(params, pot, &cm, cfg),
        ModelTier::Wkb => integrate_wkb(params, pot, &cm, cfg),
        ModelTier::Crude => integrate_crude(params, pot, &cm, cfg),
    }
}
