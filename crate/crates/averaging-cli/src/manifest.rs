//! Per-run output directories and reproducibility manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use averaging::{Error, Result};
use serde_json::{json, Value};

use crate::OutputArgs;

/// Resolves the run directory: `--out-dir` wins; otherwise
/// `<out-root>/<id>_<unix-seconds>` where the root comes from `--out-root`,
/// the `AVERAGING_OUT_ROOT` env var, or `runs`.
pub fn run_dir(output: &OutputArgs, default_id: &str) -> Result<PathBuf> {
    let dir = if let Some(d) = &output.out_dir {
        d.clone()
    } else {
        let root = output
            .out_root
            .clone()
            .or_else(|| std::env::var_os("AVERAGING_OUT_ROOT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        let id = output.id.as_deref().unwrap_or(default_id);
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        root.join(format!("{id}_{stamp}"))
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Writes `manifest.json` with everything needed to reproduce the run.
pub fn write(
    dir: &Path,
    command: &str,
    seed: Option<u64>,
    params: Value,
    outputs: &[&str],
    wall_ms: u128,
) -> Result<()> {
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "params": params,
        "outputs": outputs,
        "wall_time_ms": wall_ms,
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidConfig(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Parses a comma-separated list of snapshot times.
pub fn parse_times(spec: Option<&str>, horizon: f64) -> Result<Vec<f64>> {
    match spec {
        None => Ok(vec![horizon]),
        Some(s) => s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad snapshot time `{tok}`")))
            })
            .collect(),
    }
}
