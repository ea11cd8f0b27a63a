use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Record of one run, written as JSON next to its primary output.
///
/// `args` is the argument list the run was invoked with; replaying it with
/// the same build reproduces every output file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Every parameter after defaults were applied.
    pub params: Map<String, Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub elapsed_ms: u128,
}

impl RunManifest {
    /// `<output>.manifest.json`
    pub fn path_for(primary_output: &Path) -> PathBuf {
        let mut name = primary_output.as_os_str().to_os_string();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: invalid manifest: {e}", path.display())))
    }
}
