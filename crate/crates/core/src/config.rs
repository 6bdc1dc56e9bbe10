//! Run configurations.
//!
//! A run is described by one TOML document:
//!
//! ```toml
//! [body]
//! M = 1.0
//! omega0 = 1.0
//! J = 0.5
//! alpha = 0.0
//! alpha_source = "grid"
//!
//! [potential]
//! type = "gaussian"
//! A = 1.0
//! sigma = 1.0
//!
//! [launch]
//! X_launch = -6.0
//! KE = 0.7
//!
//! [integrator]
//! tier = "crude"
//! dt = 0.02
//! t_max = 80.0
//!
//! [experiment]
//! n = 100
//! ```
//!
//! Parsing is strict: unknown keys are rejected, and every value is checked
//! against the invariants of the type it feeds. Errors name the offending
//! path, e.g. `potential.sigma`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::experiments::{AlphaSource, Region, ScatteringSetup};
use crate::{Error, IntegratorConfig, ModelTier, Potential, PotentialSpec, Result, Scheme, SoftBodyParams};

/// Default tolerance on regression coefficients.
pub const REGRESSION_TOLERANCE: f64 = 0.02;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Trajectory,
    Ensemble,
    Sweep,
    Validate,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Trajectory => "trajectory",
            Mode::Ensemble => "ensemble",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSourceKind {
    #[default]
    Grid,
    Seeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    /// Long-format CSV of every ensemble member's trajectory.
    Trajectories,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySection {
    #[serde(rename = "M")]
    pub mass: f64,
    pub omega0: f64,
    #[serde(rename = "J")]
    pub action: f64,
    /// Phase of single trajectories.
    #[serde(default)]
    pub alpha: f64,
    /// Phases of ensemble members.
    #[serde(default)]
    pub alpha_source: AlphaSourceKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaunchSection {
    #[serde(rename = "X_launch")]
    pub x_launch: f64,
    #[serde(rename = "KE", default, skip_serializing_if = "Option::is_none")]
    pub kinetic_energy: Option<f64>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_tier")]
    pub tier: ModelTier,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_budget")]
    pub energy_drift_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
}

fn default_tier() -> ModelTier {
    ModelTier::Crude
}

fn default_stride() -> usize {
    1
}

fn default_budget() -> f64 {
    1e-8
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    #[serde(rename = "X_minus")]
    pub x_minus: f64,
    #[serde(rename = "X_plus")]
    pub x_plus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Seed of the phase sampler when `body.alpha_source = "seeded"`.
    #[serde(default)]
    pub seed: u64,
    /// Measurement time; defaults to `integrator.t_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_m: Option<f64>,
    /// Full barrier widths `D` of a sweep.
    #[serde(rename = "D_values", default, skip_serializing_if = "Vec::is_empty")]
    pub d_values: Vec<f64>,
    /// Measurement times of a sweep; defaults to `[tau_m]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tau_values: Vec<f64>,
    /// Classification thresholds; default to the potential's support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSection>,
}

fn default_n() -> usize {
    100
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            mode: Mode::Trajectory,
            n: default_n(),
            seed: 0,
            tau_m: None,
            d_values: Vec::new(),
            tau_values: Vec::new(),
            region: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// Measured coefficients of one tier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflection: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trapping: Option<f64>,
}

/// Measured emission statistics of a trapping preset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionRegression {
    pub long_dwell: usize,
    pub left: usize,
    pub right: usize,
    pub within_ten_percent: f64,
}

/// Frozen measurements a preset is checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSection {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expanded: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wkb: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crude: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<EmissionRegression>,
    /// SHA-256 of the trajectory CSV at `body.alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_sha256: Option<String>,
}

fn default_tolerance() -> f64 {
    REGRESSION_TOLERANCE
}

impl RegressionSection {
    pub fn coefficients(&self, tier: ModelTier) -> Option<Coefficients> {
        match tier {
            ModelTier::Exact => self.exact,
            ModelTier::Expanded => self.expanded,
            ModelTier::Wkb => self.wkb,
            ModelTier::Crude => self.crude,
        }
    }
}

/// How a preset was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverySection {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub body: BodySection,
    pub potential: PotentialSpec,
    pub launch: LaunchSection,
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discovery: Option<DiscoverySection>,
}

/// Re-labels a parameter error with its config path.
fn at(section: &str, err: Error) -> Error {
    match err {
        Error::InvalidParameter { name, reason } => Error::config(format!("{section}.{name}"), reason),
        other => other,
    }
}

fn launch_path(name: &str) -> String {
    match name {
        "X_launch" | "KE" => format!("launch.{name}"),
        other => format!("experiment.{other}"),
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().to_string();
            // Unknown and missing keys are reported at their parent.
            let key = ["unknown field `", "missing field `"]
                .iter()
                .find_map(|p| message.strip_prefix(p))
                .and_then(|rest| rest.split('`').next())
                .map(str::to_string);
            match (path.as_str(), key) {
                (".", None) => Error::config("<document>", inner.to_string().trim_end()),
                (".", Some(key)) => Error::config(key, message),
                (p, Some(key)) if !p.ends_with(&key) => Error::config(format!("{p}.{key}"), message),
                _ => Error::config(path, message),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, as lowercase hex. The output
    /// section is left out since it does not affect results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let digest = Sha256::digest(canonical.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        let potential = Potential::new(self.potential).map_err(|e| at("potential", e))?;

        match (self.launch.kinetic_energy, self.launch.velocity) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::config("launch", "give exactly one of KE and V"));
            }
            (Some(ke), None) if !(ke.is_finite() && ke >= 0.0) => {
                return Err(Error::config("launch.KE", format!("must be >= 0, got {ke}")));
            }
            (None, Some(v)) if !v.is_finite() => {
                return Err(Error::config("launch.V", format!("must be finite, got {v}")));
            }
            _ => {}
        }
        if !self.launch.x_launch.is_finite() {
            return Err(Error::config("launch.X_launch", "must be finite"));
        }

        let integrator = self.integrator();
        integrator.validate().map_err(|e| at("integrator", e))?;

        let exp = &self.experiment;
        if exp.n == 0 {
            return Err(Error::config("experiment.n", "must be >= 1"));
        }
        let t_max = integrator.t_max;
        let in_horizon = |tau: f64| tau > 0.0 && tau <= t_max;
        if let Some(tau) = exp.tau_m {
            if !in_horizon(tau) {
                return Err(Error::config(
                    "experiment.tau_m",
                    format!("must lie in (0, t_max = {t_max}], got {tau}"),
                ));
            }
        }
        if let Some(&tau) = exp.tau_values.iter().find(|&&t| !in_horizon(t)) {
            return Err(Error::config(
                "experiment.tau_values",
                format!("must lie in (0, t_max = {t_max}], got {tau}"),
            ));
        }
        if let Some(&d) = exp.d_values.iter().find(|&&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::config("experiment.D_values", format!("must be > 0, got {d}")));
        }
        if let Some(r) = exp.region {
            if !(r.x_minus.is_finite() && r.x_plus.is_finite() && r.x_minus < r.x_plus) {
                return Err(Error::config("experiment.region", "need X_minus < X_plus"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::config("output.formats", "must not be empty"));
        }
        if let Some(reg) = &self.regression {
            if !(reg.tolerance.is_finite() && reg.tolerance >= 0.0) {
                return Err(Error::config("regression.tolerance", "must be >= 0"));
            }
        }

        match exp.mode {
            Mode::Ensemble | Mode::Sweep => {
                if potential.support().is_none() {
                    return Err(Error::config("potential.type", "ensembles need a barrier potential"));
                }
            }
            Mode::Trajectory | Mode::Validate => {}
        }
        if exp.mode == Mode::Sweep {
            if !matches!(self.potential, PotentialSpec::SoftRect { .. }) {
                return Err(Error::config("potential.type", "width sweeps need a soft_rect barrier"));
            }
            if exp.d_values.is_empty() {
                return Err(Error::config("experiment.D_values", "a sweep needs at least one width"));
            }
        }
        if potential.support().is_some() {
            self.build_setup(params, potential, integrator)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SoftBodyParams> {
        let b = &self.body;
        SoftBodyParams::new(b.mass, b.omega0, b.action, b.alpha).map_err(|e| at("body", e))
    }

    pub fn potential(&self) -> Result<Potential> {
        Potential::new(self.potential).map_err(|e| at("potential", e))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let s = &self.integrator;
        IntegratorConfig {
            dt: s.dt,
            t_max: s.t_max,
            record_stride: s.record_stride,
            energy_drift_budget: s.energy_drift_budget,
            scheme: s.scheme,
            stop: None,
        }
    }

    pub fn tier(&self) -> ModelTier {
        self.integrator.tier
    }

    /// Initial centre-of-mass velocity: `V` as given, or the rightward speed
    /// with kinetic energy `KE`.
    pub fn launch_velocity(&self) -> f64 {
        match (self.launch.velocity, self.launch.kinetic_energy) {
            (Some(v), _) => v,
            (None, Some(ke)) => (2.0 * ke / self.body.mass).sqrt(),
            (None, None) => 0.0,
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        let v = self.launch_velocity();
        0.5 * self.body.mass * v * v
    }

    pub fn alpha_source(&self) -> AlphaSource {
        match self.body.alpha_source {
            AlphaSourceKind::Grid => AlphaSource::Grid,
            AlphaSourceKind::Seeded => AlphaSource::Seeded(self.experiment.seed),
        }
    }

    pub fn tau_m(&self) -> f64 {
        self.experiment.tau_m.unwrap_or(self.integrator.t_max)
    }

    /// Measurement times of a sweep.
    pub fn sweep_taus(&self) -> Vec<f64> {
        if self.experiment.tau_values.is_empty() {
            vec![self.tau_m()]
        } else {
            self.experiment.tau_values.clone()
        }
    }

    /// Scattering setup for ensembles and sweeps.
    pub fn setup(&self) -> Result<ScatteringSetup> {
        self.build_setup(self.params()?, self.potential()?, self.integrator())
    }

    fn build_setup(
        &self,
        params: SoftBodyParams,
        potential: Potential,
        integrator: IntegratorConfig,
    ) -> Result<ScatteringSetup> {
        if self.launch_velocity() <= 0.0 {
            return Err(Error::config("launch", "scattering needs a rightward launch"));
        }
        let relabel = |e: Error| match e {
            Error::InvalidParameter { name, reason } => Error::config(launch_path(name), reason),
            other => other,
        };
        let mut setup = ScatteringSetup::new(
            params,
            potential,
            self.kinetic_energy(),
            self.launch.x_launch,
            self.tier(),
            integrator,
        )
        .map_err(relabel)?;
        if let Some(r) = self.experiment.region {
            setup = setup
                .with_region(Region {
                    x_minus: r.x_minus,
                    x_plus: r.x_plus,
                })
                .map_err(|e| match e {
                    Error::InvalidParameter { reason, .. } => Error::config("experiment.region", reason),
                    other => other,
                })?;
        }
        setup.with_tau_m(self.tau_m()).map_err(relabel)
    }

    pub fn with_tier(mut self, tier: ModelTier) -> Self {
        self.integrator.tier = tier;
        self
    }

    /// Switches to seeded phases with the given seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.body.alpha_source = AlphaSourceKind::Seeded;
        self.experiment.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.experiment.mode = mode;
        self
    }

    pub fn with_output_directory(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output.directory = dir.into();
        self
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[body]
M = 1.0
omega0 = 1.0
J = 0.5

[potential]
type = "gaussian"
A = 1.0
sigma = 1.0

[launch]
X_launch = -6.0
KE = 0.7

[integrator]
dt = 0.02
t_max = 80.0
"#;

    fn err_path(text: &str) -> String {
        match RunConfig::from_toml_str(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.tier(), ModelTier::Crude);
        assert_eq!(cfg.experiment.n, 100);
        assert_eq!(cfg.tau_m(), 80.0);
        assert_eq!(cfg.alpha_source(), AlphaSource::Grid);
        assert!(cfg.wants(Format::Csv) && !cfg.wants(Format::Trajectories));
        assert!((cfg.launch_velocity() - 1.4f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let text = BASE.replace("sigma = 1.0", "sigma = 1.0\nwidth = 2.0");
        assert_eq!(err_path(&text), "potential.width");
        let text = format!("{BASE}\n[experiment]\nsamples = 3\n");
        assert_eq!(err_path(&text), "experiment.samples");
        assert_eq!(err_path(&format!("{BASE}\n[extras]\nx = 1\n")), "extras");
    }

    #[test]
    fn out_of_range_values_name_their_path() {
        assert_eq!(err_path(&BASE.replace("sigma = 1.0", "sigma = 0.0")), "potential.sigma");
        assert_eq!(err_path(&BASE.replace("omega0 = 1.0", "omega0 = -1.0")), "body.omega0");
        assert_eq!(err_path(&BASE.replace("dt = 0.02", "dt = 0.0")), "integrator.dt");
        assert_eq!(err_path(&BASE.replace("X_launch = -6.0", "X_launch = 0.0")), "launch.X_launch");
        assert_eq!(err_path(&BASE.replace("KE = 0.7", "KE = 0.7\nV = 1.0")), "launch");
        assert_eq!(
            err_path(&format!("{BASE}\n[experiment]\ntau_m = 90.0\n")),
            "experiment.tau_m"
        );
        assert_eq!(err_path(&format!("{BASE}\n[experiment]\nmode = \"sweep\"\n")), "potential.type");
    }

    #[test]
    fn hash_tracks_effective_content() {
        let a = RunConfig::from_toml_str(BASE).unwrap();
        let b = RunConfig::from_toml_str(&BASE.replace("[body]", "# comment\n[body]")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), a.clone().with_seed(3).hash());
        assert_eq!(a.hash(), a.clone().with_output_directory("elsewhere").hash());
        let back = RunConfig::from_toml_str(&a.to_toml_string()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap().with_tier(ModelTier::Exact).with_seed(9);
        assert_eq!(cfg.setup().unwrap().tier, ModelTier::Exact);
        assert_eq!(cfg.alpha_source(), AlphaSource::Seeded(9));
    }
}
