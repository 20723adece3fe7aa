//! Run manifests: a JSON record of the resolved parameter set next to
//! every file output, sufficient to replay the run bit-identically.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{CliError, Command};

#[derive(Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Command,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Wall time of the recorded run; informational, not replayed.
    pub wall_time_seconds: f64,
}

/// `stats.json` → `stats.manifest.json`, same directory.
pub fn path_for(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}

pub fn write(out: &Path, command: &Command, seed: Option<u64>, wall: Duration) -> Result<(), CliError> {
    let manifest = RunManifest {
        subcommand: command.name().to_string(),
        config: command.clone(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: wall.as_secs_f64(),
    };
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    fs::write(path_for(out), body)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<RunManifest, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: RunManifest = serde_json::from_str(&body).map_err(|e| {
        CliError::Input(format!("{} is not a run manifest: {e}", path.display()))
    })?;
    Ok(manifest)
}
