//! Soft bodies: pairs (or clouds) of harmonically coupled point masses moving
//! through a one-dimensional external potential.
//!
//! An observer who only tracks the centre of mass sees a particle whose
//! scattering off a barrier depends on a hidden internal phase. Averaging over
//! that phase turns deterministic trajectories into tunnelling, above-barrier
//! reflection, trapping on a barrier top and width-dependent "interference" in
//! the transmission statistics.
//!
//! The crate is organised bottom-up:
//!
//! * [`potentials`]: analytic barriers with closed-form derivatives;
//! * [`body`]: parameters, coordinates and energy bookkeeping;
//! * [`tdho`]: the time-dependent oscillator toolkit for the internal mode;
//! * [`dynamics`]: integrators for the four model tiers;
//! * [`experiments`]: hidden-phase ensembles, classification and sweeps;
//! * [`config`] and [`presets`]: run configurations used by the CLI;
//! * [`validate`]: the invariant suite behind `softbody validate`.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod config;
pub mod dynamics;
mod error;
pub mod experiments;
mod integrate;
pub mod potentials;
pub mod presets;
pub mod series;
pub mod tdho;
pub mod validate;

pub use body::{CMState, MonadState, SoftBodyParams};
pub use dynamics::{IntegratorConfig, ModelTier, Trajectory};
pub use error::{Error, Result};
pub use integrate::Scheme;
pub use potentials::{Potential, PotentialSpec};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// Book chapters and the README are compiled and run as doc-tests.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/body.md")]
    mod body {}
    #[doc = include_str!("../../../book/src/oscillator.md")]
    mod oscillator {}
    #[doc = include_str!("../../../book/src/tiers.md")]
    mod tiers {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/presets.md")]
    mod presets {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
}
