//! Run manifests: what was run, with which settings, and what came out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hylleraas::precision::PrecisionPolicy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// File path, or `<stdout>`.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

impl OutputDigest {
    pub fn of(path: &str, content: &[u8]) -> Self {
        let hash = Sha256::digest(content);
        Self {
            path: path.to_string(),
            sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
            bytes: content.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub command: String,
    /// Effective settings after merging flags, config file and defaults.
    pub config: BTreeMap<String, String>,
    pub precision: PrecisionPolicy,
    pub library_version: String,
    pub cli_version: String,
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<OutputDigest>,
    pub exit_code: i32,
}

/// Where the manifest goes when `--manifest` is not given: next to the
/// primary output file, else in the working directory.
pub fn default_path(command: &str, primary_output: Option<&Path>) -> PathBuf {
    match primary_output {
        Some(p) => {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("{command}.manifest.json")),
    }
}
