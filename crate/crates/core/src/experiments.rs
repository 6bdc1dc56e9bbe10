//! Hidden-phase ensembles.
//!
//! Every member of an ensemble is the same body launched the same way; only
//! the internal phase `alpha` differs. Each trajectory is classified by where
//! its centre of mass is relative to the barrier region `[X-, X+]`:
//!
//! * **reflected**: first leaves through `X-` moving left;
//! * **transmitted**: first leaves through `X+` moving right;
//! * **trapped**: still inside the region at the measurement time `tau_m`;
//! * **undecided**: none of the above at `tau_m` (the body has not reached
//!   the region yet, or the run ended early).
//!
//! Members run in parallel and are collected in `alpha` order, so results do
//! not depend on the thread count.

use std::f64::consts::TAU;
use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fmt17, integrate, ExitWindow, IntegratorConfig, ModelTier, Trajectory};
use crate::error::{Error, Result};
use crate::potentials::{Potential, PotentialSpec};
use crate::SoftBodyParams;

/// Largest fraction of failed members an ensemble tolerates.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// Dwell threshold for "trapped then emitted", in barrier-crossing times.
pub const EMISSION_DWELL_CROSSINGS: f64 = 5.0;

/// Classification thresholds `X-` and `X+`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub x_minus: f64,
    pub x_plus: f64,
}

/// One scattering experiment, minus the hidden phase.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatteringSetup {
    /// Body parameters; `alpha` is overridden per member.
    pub params: SoftBodyParams,
    pub potential: Potential,
    /// Initial centre-of-mass kinetic energy `M V^2 / 2`.
    pub kinetic_energy: f64,
    pub x_launch: f64,
    pub region: Region,
    pub tau_m: f64,
    pub tier: ModelTier,
    pub integrator: IntegratorConfig,
}

impl ScatteringSetup {
    /// Setup with the potential's default region and `tau_m = t_max`.
    pub fn new(
        params: SoftBodyParams,
        potential: Potential,
        kinetic_energy: f64,
        x_launch: f64,
        tier: ModelTier,
        integrator: IntegratorConfig,
    ) -> Result<Self> {
        let (x_minus, x_plus) = potential.support().ok_or_else(|| {
            Error::Unsupported("scattering needs a barrier potential".into())
        })?;
        let setup = ScatteringSetup {
            params,
            potential,
            kinetic_energy,
            x_launch,
            region: Region { x_minus, x_plus },
            tau_m: integrator.t_max,
            tier,
            integrator,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn with_tau_m(mut self, tau_m: f64) -> Result<Self> {
        self.tau_m = tau_m;
        self.validate()?;
        Ok(self)
    }

    pub fn with_region(mut self, region: Region) -> Result<Self> {
        self.region = region;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tier(mut self, tier: ModelTier) -> Self {
        self.tier = tier;
        self
    }

    pub fn with_params(mut self, params: SoftBodyParams) -> Self {
        self.params = params;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        let Region { x_minus, x_plus } = self.region;
        let c = self.potential.center();
        if !(self.x_launch < x_minus && x_minus < c && c < x_plus) {
            return Err(Error::param(
                "X_launch",
                format!(
                    "need X_launch < X- < centre < X+, got {} / {x_minus} / {c} / {x_plus}",
                    self.x_launch
                ),
            ));
        }
        if !(self.kinetic_energy.is_finite() && self.kinetic_energy > 0.0) {
            return Err(Error::param(
                "KE",
                format!("must be > 0, got {}", self.kinetic_energy),
            ));
        }
        if !(self.tau_m > 0.0 && self.tau_m <= self.integrator.t_max) {
            return Err(Error::param(
                "tau_m",
                format!("must lie in (0, t_max = {}], got {}", self.integrator.t_max, self.tau_m),
            ));
        }
        Ok(())
    }

    pub fn launch_speed(&self) -> f64 {
        (2.0 * self.kinetic_energy / self.params.mass()).sqrt()
    }

    /// Time to cross the barrier core (two half-widths) at launch speed.
    pub fn crossing_time(&self) -> f64 {
        2.0 * self.potential.half_width().unwrap_or(1.0) / self.launch_speed()
    }

    /// Integrates one member. The run stops as soon as the body leaves the
    /// region, since the first exit decides the outcome.
    pub fn trajectory(&self, alpha: f64) -> Result<Trajectory> {
        let cfg = self.integrator.clone().with_stop(ExitWindow {
            lower: self.region.x_minus,
            upper: self.region.x_plus,
        });
        integrate(
            self.tier,
            &self.params.with_alpha(alpha),
            &self.potential,
            self.x_launch,
            self.launch_speed(),
            &cfg,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Reflected,
    Transmitted,
    Trapped,
    Undecided,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Reflected => "reflected",
            OutcomeKind::Transmitted => "transmitted",
            OutcomeKind::Trapped => "trapped",
            OutcomeKind::Undecided => "undecided",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification of one trajectory. Exit time and velocity are set for
/// reflected and transmitted bodies only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub t_exit: Option<f64>,
    pub v_exit: Option<f64>,
}

impl Outcome {
    fn plain(kind: OutcomeKind) -> Self {
        Outcome {
            kind,
            t_exit: None,
            v_exit: None,
        }
    }
}

/// Classifies at the setup's measurement time.
pub fn classify(traj: &Trajectory, setup: &ScatteringSetup) -> Outcome {
    classify_at(traj, setup.region, setup.tau_m)
}

/// Classifies at measurement time `tau_m`: the first exit through either
/// threshold at or before `tau_m` wins, with exit time and velocity
/// interpolated linearly to the threshold.
pub fn classify_at(traj: &Trajectory, region: Region, tau_m: f64) -> Outcome {
    let s = &traj.samples;
    for k in 0..s.len() {
        let p = s[k];
        if p.t > tau_m {
            break;
        }
        let kind = if p.x < region.x_minus && p.v < 0.0 {
            OutcomeKind::Reflected
        } else if p.x > region.x_plus && p.v > 0.0 {
            OutcomeKind::Transmitted
        } else {
            continue;
        };
        let threshold = match kind {
            OutcomeKind::Reflected => region.x_minus,
            _ => region.x_plus,
        };
        let (t_exit, v_exit) = match k.checked_sub(1).map(|j| s[j]) {
            Some(q) if (q.x - threshold) * (p.x - threshold) <= 0.0 && q.x != p.x => {
                let f = (threshold - q.x) / (p.x - q.x);
                (q.t + f * (p.t - q.t), q.v + f * (p.v - q.v))
            }
            _ => (p.t, p.v),
        };
        return Outcome {
            kind,
            t_exit: Some(t_exit),
            v_exit: Some(v_exit),
        };
    }
    match position_at(traj, tau_m) {
        Some(x) if x >= region.x_minus && x <= region.x_plus => Outcome::plain(OutcomeKind::Trapped),
        _ => Outcome::plain(OutcomeKind::Undecided),
    }
}

/// Centre-of-mass position at `t`, linearly interpolated; `None` outside the
/// recorded span.
fn position_at(traj: &Trajectory, t: f64) -> Option<f64> {
    let s = &traj.samples;
    let last = traj.last();
    if t < s[0].t || t > last.t + 1e-9 * last.t.abs().max(1.0) {
        return None;
    }
    let k = s.partition_point(|p| p.t < t);
    if k == 0 {
        return Some(s[0].x);
    }
    if k == s.len() {
        return Some(last.x);
    }
    let (a, b) = (s[k - 1], s[k]);
    let f = (t - a.t) / (b.t - a.t);
    Some(a.x + f * (b.x - a.x))
}

/// Time the centre of mass spends in the barrier core `|X - Xc| <= w`,
/// counting half of each sample interval that straddles the edge.
pub fn dwell_time(traj: &Trajectory, center: f64, half_width: f64) -> f64 {
    let inside = |x: f64| (x - center).abs() <= half_width;
    traj.samples
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            match (inside(w[0].x), inside(w[1].x)) {
                (true, true) => dt,
                (false, false) => 0.0,
                _ => 0.5 * dt,
            }
        })
        .sum()
}

/// Where the hidden phases come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum AlphaSource {
    /// `alpha_i = 2 pi i / n`.
    Grid,
    /// Uniform on `[0, 2 pi)` from a ChaCha8 stream seeded with the value.
    Seeded(u64),
}

impl AlphaSource {
    pub fn alphas(self, n: usize) -> Vec<f64> {
        match self {
            AlphaSource::Grid => (0..n).map(|i| TAU * i as f64 / n as f64).collect(),
            AlphaSource::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|_| crate::body::normalize_angle(rng.gen::<f64>() * TAU))
                    .collect()
            }
        }
    }

    pub fn seed(self) -> Option<u64> {
        match self {
            AlphaSource::Grid => None,
            AlphaSource::Seeded(s) => Some(s),
        }
    }
}

/// Outcome counts and coefficients of an ensemble. Members whose integration
/// failed have no outcome and are left out of the coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub tau_m: f64,
    pub tier: ModelTier,
    pub seed: Option<u64>,
    pub alphas: Vec<f64>,
    pub outcomes: Vec<Option<Outcome>>,
    pub failures: usize,
    pub trapping_coeff: f64,
    pub transmission_coeff: f64,
    pub reflection_coeff: f64,
    pub undecided_coeff: f64,
}

impl EnsembleSummary {
    fn tally(
        tau_m: f64,
        tier: ModelTier,
        source: AlphaSource,
        alphas: Vec<f64>,
        outcomes: Vec<Option<Outcome>>,
    ) -> Result<Self> {
        let n = alphas.len();
        let failures = outcomes.iter().filter(|o| o.is_none()).count();
        if failures as f64 > MAX_FAILURE_FRACTION * n as f64 {
            return Err(Error::Ensemble { failed: failures, n });
        }
        let done = (n - failures) as f64;
        let frac = |kind: OutcomeKind| {
            outcomes.iter().flatten().filter(|o| o.kind == kind).count() as f64 / done
        };
        Ok(EnsembleSummary {
            n,
            tau_m,
            tier,
            seed: source.seed(),
            trapping_coeff: frac(OutcomeKind::Trapped),
            transmission_coeff: frac(OutcomeKind::Transmitted),
            reflection_coeff: frac(OutcomeKind::Reflected),
            undecided_coeff: frac(OutcomeKind::Undecided),
            alphas,
            outcomes,
            failures,
        })
    }

    pub fn count(&self, kind: OutcomeKind) -> usize {
        self.outcomes.iter().flatten().filter(|o| o.kind == kind).count()
    }

    /// CSV with header `alpha,outcome,t_exit,V_exit`. Missing exit data is
    /// left empty; failed members read `failed`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "alpha,outcome,t_exit,V_exit")?;
        for (alpha, outcome) in self.alphas.iter().zip(&self.outcomes) {
            let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
            match outcome {
                Some(o) => writeln!(
                    w,
                    "{},{},{},{}",
                    fmt17(*alpha),
                    o.kind,
                    opt(o.t_exit),
                    opt(o.v_exit)
                )?,
                None => writeln!(w, "{},failed,,", fmt17(*alpha))?,
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Per-member results at several measurement times.
struct MemberReport {
    outcomes: Vec<Outcome>,
    dwell: f64,
}

fn run_member(setup: &ScatteringSetup, alpha: f64, taus: &[f64]) -> Option<MemberReport> {
    let traj = setup.trajectory(alpha).ok()?;
    let center = setup.potential.center();
    let half = setup.potential.half_width().unwrap_or(0.0);
    Some(MemberReport {
        outcomes: taus
            .iter()
            .map(|&tau| classify_at(&traj, setup.region, tau))
            .collect(),
        dwell: dwell_time(&traj, center, half),
    })
}

/// Runs `n` members with phases from `source`.
pub fn run_ensemble(
    setup: &ScatteringSetup,
    n: usize,
    source: AlphaSource,
) -> Result<EnsembleSummary> {
    if n == 0 {
        return Err(Error::param("n", "ensemble needs at least one member"));
    }
    setup.validate()?;
    let alphas = source.alphas(n);
    let taus = [setup.tau_m];
    let outcomes: Vec<Option<Outcome>> = alphas
        .par_iter()
        .map(|&a| run_member(setup, a, &taus).map(|r| r.outcomes[0]))
        .collect();
    EnsembleSummary::tally(setup.tau_m, setup.tier, source, alphas, outcomes)
}

/// Every member's trajectory over the whole horizon `t_max`, in `alpha`
/// order. Unlike [`ScatteringSetup::trajectory`] the runs do not stop at the
/// region edges, so they suit trajectory-fan plots.
pub fn ensemble_trajectories(setup: &ScatteringSetup, alphas: &[f64]) -> Vec<Result<Trajectory>> {
    alphas
        .par_iter()
        .map(|&a| {
            integrate(
                setup.tier,
                &setup.params.with_alpha(a),
                &setup.potential,
                setup.x_launch,
                setup.launch_speed(),
                &setup.integrator,
            )
        })
        .collect()
}

/// Long-format CSV of several trajectories: the trajectory columns prefixed
/// by `alpha`. Failed members contribute no rows.
pub fn write_trajectories_csv<W: Write>(
    alphas: &[f64],
    trajectories: &[Result<Trajectory>],
    mut w: W,
) -> io::Result<()> {
    let with_phi = trajectories
        .iter()
        .flatten()
        .any(|t| t.samples.iter().any(|s| s.phi.is_some()));
    write!(w, "alpha,t,X,V,xi,xi_dot,E_total,E_cm")?;
    writeln!(w, "{}", if with_phi { ",phi" } else { "" })?;
    for (alpha, traj) in alphas.iter().zip(trajectories) {
        let Ok(traj) = traj else { continue };
        for s in &traj.samples {
            write!(w, "{}", fmt17(*alpha))?;
            for v in [s.t, s.x, s.v, s.xi, s.xi_dot, s.e_total, s.e_cm] {
                write!(w, ",{}", fmt17(v))?;
            }
            if with_phi {
                write!(w, ",{}", fmt17(s.phi.unwrap_or(f64::NAN)))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// One row of a barrier-width sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Full barrier width `D = 2d`.
    pub width: f64,
    pub tau_m: f64,
    pub n: usize,
    pub failures: usize,
    pub trapping: f64,
    pub transmission: f64,
    pub reflection: f64,
}

/// Width sweep over soft-rectangular barriers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows at one measurement time, ordered by width.
    pub fn at_tau(&self, tau_m: f64) -> Vec<SweepRow> {
        self.rows.iter().filter(|r| r.tau_m == tau_m).copied().collect()
    }

    /// CSV with header `D,trapping,transmission,reflection,tau_m,n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "D,trapping,transmission,reflection,tau_m,n")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(r.width),
                fmt17(r.trapping),
                fmt17(r.transmission),
                fmt17(r.reflection),
                fmt17(r.tau_m),
                r.n
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// The setup moved onto a soft rectangle of full width `width`, keeping the
/// launch point at the same distance from the left threshold so that every
/// width sees its first collision at the same time.
pub fn setup_for_width(setup: &ScatteringSetup, width: f64) -> Result<ScatteringSetup> {
    let PotentialSpec::SoftRect { a, l, .. } = *setup.potential.spec() else {
        return Err(Error::Unsupported("width sweeps need a soft_rect potential".into()));
    };
    let potential = Potential::soft_rect(a, 0.5 * width, l)?;
    let (x_minus, x_plus) = potential.support().expect("soft rectangles have support");
    let gap = setup.region.x_minus - setup.x_launch;
    let out = ScatteringSetup {
        potential,
        x_launch: x_minus - gap,
        region: Region { x_minus, x_plus },
        ..setup.clone()
    };
    out.validate()?;
    Ok(out)
}

/// Runs an ensemble for every width and classifies each member at every
/// measurement time in `taus` (one integration per member up to the largest
/// `tau`). Rows are ordered by width, then by `tau`.
pub fn sweep_barrier_width(
    setup: &ScatteringSetup,
    widths: &[f64],
    n: usize,
    source: AlphaSource,
    taus: &[f64],
) -> Result<SweepTable> {
    if n == 0 || widths.is_empty() || taus.is_empty() {
        return Err(Error::param("sweep", "need widths, measurement times and n >= 1"));
    }
    let tau_max = taus.iter().copied().fold(f64::MIN, f64::max);
    let mut integrator = setup.integrator.clone();
    integrator.t_max = integrator.t_max.max(tau_max);
    let base = ScatteringSetup {
        integrator,
        tau_m: tau_max,
        ..setup.clone()
    };
    let setups: Vec<ScatteringSetup> = widths
        .iter()
        .map(|&w| setup_for_width(&base, w))
        .collect::<Result<_>>()?;
    let alphas = source.alphas(n);
    let jobs: Vec<(usize, f64)> = (0..setups.len())
        .flat_map(|i| alphas.iter().map(move |&a| (i, a)))
        .collect();
    let reports: Vec<Option<MemberReport>> = jobs
        .par_iter()
        .map(|&(i, a)| run_member(&setups[i], a, taus))
        .collect();

    let mut rows = Vec::with_capacity(widths.len() * taus.len());
    for (i, &width) in widths.iter().enumerate() {
        let chunk = &reports[i * n..(i + 1) * n];
        for (k, &tau) in taus.iter().enumerate() {
            let outcomes: Vec<Option<Outcome>> = chunk
                .iter()
                .map(|r| r.as_ref().map(|r| r.outcomes[k]))
                .collect();
            let s = EnsembleSummary::tally(tau, setup.tier, source, alphas.clone(), outcomes)?;
            rows.push(SweepRow {
                width,
                tau_m: tau,
                n,
                failures: s.failures,
                trapping: s.trapping_coeff,
                transmission: s.transmission_coeff,
                reflection: s.reflection_coeff,
            });
        }
    }
    Ok(SweepTable { rows })
}

/// Exit statistics of bodies held on the barrier for a long time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmissionStats {
    pub n: usize,
    pub crossing_time: f64,
    pub launch_speed: f64,
    /// Core residence time of every completed member, in `alpha` order.
    pub dwell_times: Vec<f64>,
    /// Members with dwell above the threshold, emitted or not.
    pub long_dwell: usize,
    /// Long-dwell members that left the region before `t_max`.
    pub emitted: usize,
    pub left: usize,
    pub right: usize,
    /// `None` when nothing was emitted.
    pub left_fraction: Option<f64>,
    pub right_fraction: Option<f64>,
    /// `|V_exit|` of each emitted body.
    pub exit_speeds: Vec<f64>,
    /// Fraction of emitted bodies with `|V_exit|` within 10% of the launch
    /// speed.
    pub within_ten_percent: Option<f64>,
}

/// Runs an ensemble to `t_max` and collects exit statistics of the members
/// whose core dwell exceeds [`EMISSION_DWELL_CROSSINGS`] crossing times.
pub fn emission_statistics(
    setup: &ScatteringSetup,
    n: usize,
    source: AlphaSource,
) -> Result<EmissionStats> {
    if n == 0 {
        return Err(Error::param("n", "ensemble needs at least one member"));
    }
    setup.validate()?;
    let alphas = source.alphas(n);
    let taus = [setup.integrator.t_max];
    let reports: Vec<Option<MemberReport>> = alphas
        .par_iter()
        .map(|&a| run_member(setup, a, &taus))
        .collect();
    let failures = reports.iter().filter(|r| r.is_none()).count();
    if failures as f64 > MAX_FAILURE_FRACTION * n as f64 {
        return Err(Error::Ensemble { failed: failures, n });
    }
    let crossing = setup.crossing_time();
    let v0 = setup.launch_speed();
    let threshold = EMISSION_DWELL_CROSSINGS * crossing;
    let mut stats = EmissionStats {
        n,
        crossing_time: crossing,
        launch_speed: v0,
        dwell_times: Vec::new(),
        long_dwell: 0,
        emitted: 0,
        left: 0,
        right: 0,
        left_fraction: None,
        right_fraction: None,
        exit_speeds: Vec::new(),
        within_ten_percent: None,
    };
    for r in reports.iter().flatten() {
        stats.dwell_times.push(r.dwell);
        if r.dwell <= threshold {
            continue;
        }
        stats.long_dwell += 1;
        let o = r.outcomes[0];
        match o.kind {
            OutcomeKind::Reflected => stats.left += 1,
            OutcomeKind::Transmitted => stats.right += 1,
            _ => continue,
        }
        stats.emitted += 1;
        stats.exit_speeds.push(o.v_exit.expect("exits carry a velocity").abs());
    }
    if stats.emitted > 0 {
        let e = stats.emitted as f64;
        stats.left_fraction = Some(stats.left as f64 / e);
        stats.right_fraction = Some(stats.right as f64 / e);
        let close = stats
            .exit_speeds
            .iter()
            .filter(|s| (*s - v0).abs() <= 0.1 * v0)
            .count();
        stats.within_ten_percent = Some(close as f64 / e);
    }
    Ok(stats)
}
