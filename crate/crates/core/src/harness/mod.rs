//! Configuration, initial data, experiment pipelines and run manifests.

pub mod config;
pub mod initial;
pub mod manifest;
pub mod run;

pub use config::{apply_env, emit_config, parse_config, parse_config_with_env, ExperimentKind, RunConfig, ENV_PREFIX};
pub use initial::{initial_condition, load_state, sound_speed};
pub use manifest::{Check, FileEntry, RunManifest, MANIFEST_FILE};
pub use run::{report_indices, resolve_out_dir, run};

use std::path::Path;

use crate::error::{Result, SceError};

/// Loads a configuration from a TOML file or from the config echo of a run manifest.
pub fn load_config<I>(path: &Path, vars: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let text = std::fs::read_to_string(path).map_err(|e| SceError::Io(format!("{}: {e}", path.display())))?;
    let toml_text = if path.extension().is_some_and(|e| e == "json") {
        RunManifest::load(path)?.config
    } else {
        text
    };
    parse_config_with_env(&toml_text, vars)
}
