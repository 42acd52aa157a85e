//! Run manifests: enough to re-run a command and check its output bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the subcommand name, with `--output` removed.
    pub args: Vec<String>,
    /// Parsed parameter set.
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    /// File name → hex SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Drops `--output PATH` / `--output=PATH` / `-o PATH` from an argument list.
pub fn strip_output(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--output" || a == "-o" {
            it.next();
        } else if !a.starts_with("--output=") {
            out.push(a.clone());
        }
    }
    out
}
