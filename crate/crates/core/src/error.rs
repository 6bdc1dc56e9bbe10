use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("step too large: dt * max frequency = {product:.4} exceeds {limit}")]
    StepTooLarge { product: f64, limit: f64 },

    #[error("integration diverged (non-finite state) at t = {t}")]
    Divergence { t: f64 },

    /// The run finished but its energy audit exceeded the configured budget.
    /// The full trajectory is kept so the caller can inspect it.
    #[error("relative energy drift {drift:.3e} exceeds budget {budget:.1e} at t = {t}")]
    EnergyBudget {
        t: f64,
        drift: f64,
        budget: f64,
        trajectory: Box<Trajectory>,
    },

    /// Ω² = ω0² + U''/M became non-positive; the WKB amplitude is undefined.
    /// Carries the trajectory recorded up to the offending step.
    #[error("WKB validity lost at t = {t}: Omega^2 = {omega_sq:.6e} <= 0")]
    WkbValidity {
        t: f64,
        omega_sq: f64,
        trajectory: Box<Trajectory>,
    },

    #[error("degenerate oscillator state at t = {t} (rho = 0)")]
    Degenerate { t: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ensemble failed: {failed} of {n} members did not complete")]
    Ensemble { failed: usize, n: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
