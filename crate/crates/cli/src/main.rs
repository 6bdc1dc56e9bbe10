//! `softbody`: run trajectories, phase ensembles, barrier-width sweeps and the
//! invariant suite from a TOML configuration or a shipped preset.
//!
//! Exit status: 0 success, 1 I/O failure, 2 usage error, 3 configuration
//! error, 4 integration failure, 5 failed validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use softbody::config::{Format, Mode, RunConfig};
use softbody::experiments::{
    ensemble_trajectories, run_ensemble, sweep_barrier_width, write_trajectories_csv,
};
use softbody::{dynamics, presets, validate, Error, ModelTier};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 3;
const EXIT_INTEGRATION: u8 = 4;
const EXIT_VALIDATION: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "softbody", version, about = "Soft-body scattering simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Shipped preset: tunneling, above-barrier-reflection, trapping-emission, interference.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Draw ensemble phases from a seeded sampler instead of the grid.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Model tier override.
    #[arg(long, global = true, value_parser = parse_tier)]
    tier: Option<ModelTier>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// One trajectory at `body.alpha`.
    Trajectory,
    /// Hidden-phase ensemble with outcome classification.
    Ensemble,
    /// Barrier-width sweep of the outcome coefficients.
    Sweep,
    /// Invariant suite; the dynamics checks use the configured body and barrier.
    Validate,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Trajectory => Mode::Trajectory,
            Command::Ensemble => Mode::Ensemble,
            Command::Sweep => Mode::Sweep,
            Command::Validate => Mode::Validate,
        }
    }
}

fn parse_tier(s: &str) -> Result<ModelTier, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Lib(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::Unsupported(_)
        | Error::StepTooLarge { .. } => EXIT_CONFIG,
        _ => EXIT_INTEGRATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<(RunConfig, Option<String>), Error> {
    let (cfg, preset) = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
            (RunConfig::from_toml_str(&text)?, None)
        }
        (None, Some(name)) => (presets::load(name)?, Some(name.clone())),
        (None, None) if matches!(cli.command, Command::Validate) => {
            (presets::load("tunneling")?, Some("tunneling".to_string()))
        }
        (None, None) => return Err(Error::config("--config", "pass --config <path> or --preset <name>")),
    };
    let mut cfg = cfg.with_mode(cli.command.mode());
    if let Some(tier) = cli.tier {
        cfg = cfg.with_tier(tier);
    }
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg = cfg.with_output_directory(out);
    }
    cfg.validate()?;
    Ok((cfg, preset))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (cfg, preset) = load_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be >= 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    let started = Instant::now();
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    let mut extra = serde_json::Map::new();
    let mut failed_validation = false;

    match cli.command {
        Command::Trajectory => {
            let params = cfg.params()?;
            let traj = dynamics::integrate(
                cfg.tier(),
                &params,
                &cfg.potential()?,
                cfg.launch.x_launch,
                cfg.launch_velocity(),
                &cfg.integrator(),
            )?;
            extra.insert("alpha".into(), json!(params.alpha()));
            extra.insert("samples".into(), json!(traj.samples.len()));
            extra.insert("energy_drift".into(), json!(traj.energy_drift()));
            outputs.push(("trajectory.csv".into(), traj.to_csv_string().into_bytes()));
        }
        Command::Ensemble => {
            let setup = cfg.setup()?;
            let source = cfg.alpha_source();
            let summary = run_ensemble(&setup, cfg.experiment.n, source)?;
            println!(
                "{} members ({}): R = {}, T = {}, trapped = {}, undecided = {}, failed = {}",
                summary.n,
                summary.tier,
                summary.reflection_coeff,
                summary.transmission_coeff,
                summary.trapping_coeff,
                summary.undecided_coeff,
                summary.failures
            );
            extra.insert("summary".into(), serde_json::to_value(&summary).expect("summary serializes"));
            outputs.push(("ensemble.csv".into(), summary.to_csv_string().into_bytes()));
            if cfg.wants(Format::Trajectories) {
                let trajs = ensemble_trajectories(&setup, &summary.alphas);
                let mut buf = Vec::new();
                write_trajectories_csv(&summary.alphas, &trajs, &mut buf)?;
                outputs.push(("trajectories.csv".into(), buf));
            }
        }
        Command::Sweep => {
            let setup = cfg.setup()?;
            let taus = cfg.sweep_taus();
            let table = sweep_barrier_width(
                &setup,
                &cfg.experiment.d_values,
                cfg.experiment.n,
                cfg.alpha_source(),
                &taus,
            )?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            println!("{} rows ({} widths x {} measurement times)", table.rows.len(), cfg.experiment.d_values.len(), taus.len());
            extra.insert("rows".into(), serde_json::to_value(&table.rows).expect("rows serialize"));
            outputs.push(("sweep.csv".into(), buf));
        }
        Command::Validate => {
            let report = validate::run(&cfg);
            print!("{}", report.summary());
            failed_validation = !report.passed;
            outputs.push(("validation.json".into(), report.to_json().into_bytes()));
        }
    }

    let manifest = manifest(&cfg, cli.command.mode(), preset, started, &outputs, extra);
    write_outputs(&cfg, &outputs, &manifest)?;
    if failed_validation {
        return Err(Failure::Validation);
    }
    Ok(())
}

/// Everything needed to repeat the run: the effective configuration, its
/// hash, the seed and the library version.
fn manifest(
    cfg: &RunConfig,
    mode: Mode,
    preset: Option<String>,
    started: Instant,
    outputs: &[(String, Vec<u8>)],
    extra: serde_json::Map<String, Value>,
) -> Value {
    let mut m = json!({
        "command": mode.as_str(),
        "version": softbody::VERSION,
        "preset": preset,
        "config_hash": cfg.hash(),
        "config": cfg.to_toml_string(),
        "tier": cfg.tier(),
        "seed": cfg.alpha_source().seed(),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "outputs": outputs.iter().map(|(name, _)| name).collect::<Vec<_>>(),
    });
    m.as_object_mut().expect("object").extend(extra);
    m
}

fn write_outputs(cfg: &RunConfig, outputs: &[(String, Vec<u8>)], manifest: &Value) -> Result<(), Error> {
    let dir: &Path = &cfg.output.directory;
    fs::create_dir_all(dir)?;
    for (name, bytes) in outputs {
        let is_csv = name.ends_with(".csv");
        if is_csv && !cfg.wants(Format::Csv) && name != "trajectories.csv" {
            continue;
        }
        fs::write(dir.join(name), bytes)?;
    }
    if cfg.wants(Format::Json) {
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), text + "\n")?;
    }
    Ok(())
}
