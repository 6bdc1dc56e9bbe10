//! Shipped run configurations.
//!
//! Each preset records the parameter search that produced it and the
//! coefficients measured when it was frozen.

use crate::config::RunConfig;
use crate::{Error, Result};

pub const NAMES: [&str; 4] = [
    "tunneling",
    "above-barrier-reflection",
    "trapping-emission",
    "interference",
];

/// TOML text of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "tunneling" => include_str!("../presets/tunneling.toml"),
        "above-barrier-reflection" => include_str!("../presets/above-barrier-reflection.toml"),
        "trapping-emission" => include_str!("../presets/trapping-emission.toml"),
        "interference" => include_str!("../presets/interference.toml"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Result<RunConfig> {
    let text = source(name).ok_or_else(|| {
        Error::config("preset", format!("unknown preset `{name}`; expected one of {}", NAMES.join(", ")))
    })?;
    RunConfig::from_toml_str(text)
}
