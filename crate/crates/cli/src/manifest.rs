use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::commands::CliError;

/// Everything needed to rerun a command. Written next to its outputs as
/// `<stem>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_echo: serde_json::Value, seed: Option<u64>, outputs: &[&Path]) -> Self {
        Self {
            command: command.to_string(),
            config_echo,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }

    /// Writes the manifest beside `primary` and returns its path.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf, CliError> {
        let path = sibling(primary, "manifest.json");
        crate::commands::write_text(&path, &to_json(self))?;
        Ok(path)
    }
}

/// `dir/stem.<suffix>` for `dir/stem.ext`.
pub fn sibling(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    primary.with_file_name(format!("{stem}.{suffix}"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    text
}
