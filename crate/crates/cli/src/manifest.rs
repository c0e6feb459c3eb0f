use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// Writes `manifest.json`: tool versions, the command, its configuration,
/// and whatever results the command reports (estimates, wall times, files).
pub fn write(dir: &Path, command: &str, config: Value, results: Value) -> Result<()> {
    let manifest = json!({
        "tool": "ssnmf",
        "versions": {
            "cli": env!("CARGO_PKG_VERSION"),
            "core": ssnmf::VERSION,
        },
        "command": command,
        "config": config,
        "results": results,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
