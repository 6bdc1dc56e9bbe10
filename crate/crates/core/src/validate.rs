//! Invariant suite behind `softbody validate`.
//!
//! Each check measures one residual and compares it with a fixed tolerance.
//! The oscillator checks run on built-in tracks; the dynamics checks use the
//! body, barrier and step of the supplied configuration.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::config::RunConfig;
use crate::dynamics::{integrate, IntegratorConfig, ModelTier, Trajectory};
use crate::series::Series;
use crate::tdho::*;
use crate::{Potential, PotentialSpec, Result, SoftBodyParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    /// Passes when `measured <= tolerance`; an error counts as a failure.
    pub fn at_most(name: impl Into<String>, measured: Result<f64>, tolerance: f64) -> Self {
        let name = name.into();
        match measured {
            Ok(m) => Check {
                name,
                measured: m,
                tolerance,
                passed: m <= tolerance,
                error: None,
            },
            Err(e) => Check {
                name,
                measured: f64::NAN,
                tolerance,
                passed: false,
                error: Some(e.to_string()),
            },
        }
    }
}

/// A check that does not apply to the configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config_hash: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub skipped: Vec<Skipped>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            out += &format!("{verdict}  {:<34} {:.3e} <= {:.1e}", c.name, c.measured, c.tolerance);
            if let Some(e) = &c.error {
                out += &format!("  ({e})");
            }
            out.push('\n');
        }
        for s in &self.skipped {
            out += &format!("skip  {:<34} {}\n", s.name, s.reason);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out += &format!("{} checks, {failed} failed\n", self.checks.len());
        out
    }
}

/// Runs every check.
pub fn run(cfg: &RunConfig) -> Report {
    let mut checks = vec![
        Check::at_most("tdho.ermakov_pinney", ermakov_pinney_check(), 1e-6),
        Check::at_most("tdho.phase_equation", phase_equation_check(), 1e-6),
    ];
    for kappa in [0.5, 1.0, 2.0, 5.0] {
        checks.push(Check::at_most(
            format!("tdho.constant_frequency_kappa_{kappa}"),
            constant_frequency_check(kappa),
            1e-6,
        ));
    }
    checks.push(Check::at_most("tdho.energy_identity", energy_identity_check(), 1e-6));
    checks.push(Check::at_most("tdho.action_drift", action_drift_check(), 1e-8));

    let mut skipped = Vec::new();
    let budget = cfg.integrator.energy_drift_budget;
    checks.push(Check::at_most(
        "dynamics.energy_drift.exact",
        run_config(cfg, ModelTier::Exact, None).map(|t| t.energy_drift()),
        budget,
    ));
    let sigma = length_scale(cfg);
    checks.push(Check::at_most(
        "dynamics.small_amplitude_expanded",
        small_amplitude_gap(cfg),
        1e-4 * sigma,
    ));
    if expansion_applies(cfg) {
        checks.push(Check::at_most(
            "dynamics.energy_drift.expanded",
            run_config(cfg, ModelTier::Expanded, None).map(|t| t.energy_drift()),
            budget,
        ));
        checks.push(Check::at_most("dynamics.unexcited_tiers_agree", unexcited_gap(cfg), 1e-6));
        checks.push(Check::at_most("dynamics.energy_law", energy_law_check(cfg), 1e-4));
    } else {
        let reason = "Omega^2 = omega0^2 + U''/M turns negative on this barrier".to_string();
        for name in [
            "dynamics.energy_drift.expanded",
            "dynamics.unexcited_tiers_agree",
            "dynamics.energy_law",
        ] {
            skipped.push(Skipped {
                name: name.into(),
                reason: reason.clone(),
            });
        }
    }

    Report {
        version: crate::VERSION,
        config_hash: cfg.hash(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        skipped,
    }
}

fn wobbly_track(omega0: f64, t_end: f64) -> Result<FrequencyTrack> {
    let h = 0.01;
    let n = (t_end / h).ceil() as usize + 1;
    FrequencyTrack::from_fn(0.0, h, n, |t| omega0 * omega0 * (1.0 + 0.3 * (0.2 * t).sin()))
}

/// Keeps every `stride`-th state, with the stride chosen so phase samples sit
/// `0.03 / max theta_dot` apart.
fn phase_spaced(states: &[OscillatorState], dt: f64) -> Result<Vec<OscillatorState>> {
    let polar = polar_track(states, 1.0)?;
    let fastest = polar.iter().fold(0.0f64, |m, p| m.max(p.theta_dot));
    let stride = ((0.03 / (fastest * dt)).round() as usize).max(1);
    Ok(states.iter().step_by(stride).copied().collect())
}

fn ermakov_pinney_check() -> Result<f64> {
    let w0 = 2.0;
    let track = wobbly_track(w0, 100.0 * TAU / w0)?;
    let mass = 0.7;
    let out = solve_tdho(&track, OscillatorState::rotating(0.0, 1.0, w0, 0.0), 0.005)?;
    let kept: Vec<_> = out.iter().step_by(2).copied().collect();
    let (_, j) = polar_decompose(&out[0], mass)?;
    let rho = radius_series(&polar_track(&kept, mass)?)?;
    ermakov_pinney_residual(&rho, &track, j, mass)
}

fn unequal_pair(w0: f64, ratio: f64) -> OscillatorState {
    OscillatorState {
        t: 0.0,
        xi1: 1.0,
        xi1_dot: 0.0,
        xi2: 0.0,
        xi2_dot: ratio * w0,
    }
}

fn phase_equation_check() -> Result<f64> {
    let w0 = 2.0;
    let track = wobbly_track(w0, 20.0 * TAU / w0)?;
    let dt = 0.001;
    let out = solve_tdho(&track, unequal_pair(w0, 0.6), dt)?;
    let theta = phase_series(&polar_track(&phase_spaced(&out, dt)?, 1.0)?)?;
    phase_equation_residual(&theta, &track)
}

/// Larger of the phase-equation and Ermakov–Pinney residuals of the
/// constant-frequency family at one `kappa`.
fn constant_frequency_check(kappa: f64) -> Result<f64> {
    let (omega, alpha0, mass, action) = (1.3, 0.2, 0.8, 0.45);
    let h = 0.015 / (omega * kappa.max(1.0 / kappa));
    let n = (2.0 * TAU / (omega * h)) as usize;
    let theta = Series::from_fn(0.0, h, n, |t| constant_frequency_phase(t, omega, kappa, alpha0))?;
    let track = FrequencyTrack::constant(omega * omega, 0.0, theta.time(n - 1))?;
    let rho = Series::from_fn(0.0, h, n, |t| {
        (2.0 * action / (mass * constant_frequency_phase_rate(t, omega, kappa, alpha0))).sqrt()
    })?;
    let phase = phase_equation_residual(&theta, &track)?;
    let radius = ermakov_pinney_residual(&rho, &track, action, mass)?;
    Ok(phase.max(radius))
}

fn energy_identity_check() -> Result<f64> {
    let w0 = 2.0;
    let track = wobbly_track(w0, 20.0 * TAU / w0)?;
    let mass = 1.4;
    let dt = 0.001;
    let out = solve_tdho(&track, unequal_pair(w0, 0.7), dt)?;
    let kept = phase_spaced(&out, dt)?;
    let (_, j) = polar_decompose(&kept[0], mass)?;
    let weff = omega_eff(&phase_series(&polar_track(&kept, mass)?)?)?;
    Ok(kept
        .iter()
        .zip(&weff.values)
        .map(|(s, w)| {
            let e1 = oscillator_energy(s, track.eval(s.t), mass);
            (e1 - j * w).abs() / e1
        })
        .fold(0.0, f64::max))
}

fn action_drift_check() -> Result<f64> {
    let w0 = 2.0;
    let track = wobbly_track(w0, 100.0 * TAU / w0)?;
    let out = solve_tdho(&track, OscillatorState::rotating(0.0, 0.8, w0, 0.4), 0.005)?;
    let (_, j0) = polar_decompose(&out[0], 1.3)?;
    out.iter().try_fold(0.0f64, |m, s| {
        Ok(m.max((polar_decompose(s, 1.3)?.1 / j0 - 1.0).abs()))
    })
}

/// Length over which the potential varies: `sigma`, or the edge width `L`.
fn length_scale(cfg: &RunConfig) -> f64 {
    match cfg.potential {
        PotentialSpec::Gaussian { sigma, .. } => sigma,
        PotentialSpec::SoftRect { l, .. } => l,
        _ => 1.0,
    }
}

/// Whether `Omega^2` stays non-negative everywhere. Otherwise the expanded
/// internal mode grows without bound on the barrier and the WKB tier aborts.
pub fn expansion_applies(cfg: &RunConfig) -> bool {
    match (cfg.params(), cfg.potential()) {
        (Ok(p), Ok(pot)) => p.mass() * p.omega0() * p.omega0() >= pot.curvature_bound(),
        _ => false,
    }
}

/// One trajectory of the configured body on `tier`, optionally with a
/// different action. Barrier runs stop when the body leaves the region.
fn run_config(cfg: &RunConfig, tier: ModelTier, action: Option<f64>) -> Result<Trajectory> {
    let mut params = cfg.params()?;
    if let Some(j) = action {
        params = params.with_action(j)?;
    }
    let pot = cfg.potential()?;
    if pot.support().is_some() {
        cfg.setup()?.with_tier(tier).with_params(params).trajectory(params.alpha())
    } else {
        integrate(tier, &params, &pot, cfg.launch.x_launch, cfg.launch_velocity(), &cfg.integrator())
    }
}

/// Largest centre-of-mass gap between the Exact tier and the others at `J = 0`.
fn unexcited_gap(cfg: &RunConfig) -> Result<f64> {
    let exact = run_config(cfg, ModelTier::Exact, Some(0.0))?;
    let mut worst: f64 = 0.0;
    for tier in [ModelTier::Expanded, ModelTier::Wkb, ModelTier::Crude] {
        let other = run_config(cfg, tier, Some(0.0))?;
        if other.samples.len() != exact.samples.len() {
            return Err(crate::Error::Domain(format!("{tier} run has a different length")));
        }
        worst = worst.max(exact.max_cm_difference(&other));
    }
    Ok(worst)
}

/// Expanded against Exact at internal amplitude `0.01` length scales.
fn small_amplitude_gap(cfg: &RunConfig) -> Result<f64> {
    let p = cfg.params()?;
    let a = 0.01 * length_scale(cfg);
    let j = 0.5 * p.mass() * p.omega0() * a * a;
    let exact = run_config(cfg, ModelTier::Exact, Some(j))?;
    let expanded = run_config(cfg, ModelTier::Expanded, Some(j))?;
    let n = exact.samples.len().min(expanded.samples.len());
    Ok(exact.samples[..n]
        .iter()
        .zip(&expanded.samples[..n])
        .map(|(a, b)| (a.x - b.x).abs())
        .fold(0.0, f64::max))
}

fn energy_law_check(cfg: &RunConfig) -> Result<f64> {
    energy_law_drift(
        &cfg.params()?,
        &cfg.potential()?,
        cfg.launch.x_launch,
        cfg.launch_velocity(),
        cfg.integrator.dt,
        cfg.integrator.t_max,
    )
}

/// Relative drift of `M V^2 / 2 + U(X) + J omega_eff(t)` along an Expanded
/// run, against the run's initial total energy.
///
/// The centre-of-mass path gives `Omega^2(t) = omega0^2 + U''(X(t))/M`; the
/// oscillator pair started from the body's internal state is re-solved on
/// that track to obtain a rotating phase and its `omega_eff`.
pub fn energy_law_drift(
    params: &SoftBodyParams,
    pot: &Potential,
    x0: f64,
    v0: f64,
    dt: f64,
    t_max: f64,
) -> Result<f64> {
    let run = integrate(
        ModelTier::Expanded,
        params,
        pot,
        x0,
        v0,
        &IntegratorConfig::new(dt, t_max).with_budget(f64::INFINITY),
    )?;
    let m = params.mass();
    let w0 = params.omega0();
    let omega_sq: Vec<f64> = run.samples.iter().map(|s| w0 * w0 + pot.eval(s.x).u2 / m).collect();
    let track = FrequencyTrack::new(run.samples[0].t, dt, omega_sq)?;
    let init = OscillatorState::rotating(0.0, params.amplitude(), w0, params.alpha());
    let pair = solve_tdho(&track, init, dt)?;
    let kept = phase_spaced(&pair, dt)?;
    let stride = if kept.len() > 1 {
        ((kept[1].t - kept[0].t) / dt).round() as usize
    } else {
        1
    };
    let weff = omega_eff(&phase_series(&polar_track(&kept, m)?)?)?;
    let e0 = run.samples[0].e_total;
    let j = params.action();
    Ok(run
        .samples
        .iter()
        .step_by(stride)
        .zip(&weff.values)
        .map(|(s, w)| ((0.5 * m * s.v * s.v + pot.value(s.x) + j * w) - e0).abs() / e0.abs())
        .fold(0.0, f64::max))
}
