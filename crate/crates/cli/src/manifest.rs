use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const FILE_NAME: &str = "manifest.json";

/// Record of one run, written into its output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command line after the program name, without `--out`.
    pub args: Vec<String>,
    /// Directory the command was started from; relative inputs resolve
    /// against it on a rerun.
    pub cwd: PathBuf,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Output files relative to the run directory.
    pub artifacts: Vec<String>,
    pub wall_clock_secs: f64,
    pub version: String,
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> Result<(), String> {
        let text = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
        fs::write(dir.join(FILE_NAME), text + "\n").map_err(|e| format!("writing manifest: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let path = if path.is_dir() { path.join(FILE_NAME) } else { path.to_path_buf() };
        let text = fs::read_to_string(&path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    }
}

/// Drop `--out DIR` / `--out=DIR` from an argument list.
pub fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_flag_is_removed() {
        let args: Vec<String> =
            ["simulate", "--out", "x", "--seed", "3", "--out=y"].iter().map(|s| s.to_string()).collect();
        assert_eq!(strip_out(&args), vec!["simulate", "--seed", "3"]);
    }
}
