//! The run manifest: enough to reproduce a run and to check its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub millis: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Resolved arguments of the last invocation, environment overrides
    /// included. Re-running them reproduces the outputs.
    pub command: Vec<String>,
    pub input_hashes: BTreeMap<String, String>,
    pub config_hash: Option<String>,
    pub seed: u64,
    pub phases: Vec<PhaseTiming>,
    pub outputs: Vec<OutputFile>,
    /// Peak resident set size of the process, when the platform reports it.
    pub peak_rss_kib: Option<u64>,
}

impl RunManifest {
    /// The manifest of earlier phases in `dir`, or a fresh one.
    pub fn load_or_new(dir: &Path) -> Self {
        fs::read(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_else(|| RunManifest { tool_version: env!("CARGO_PKG_VERSION").into(), ..Default::default() })
    }

    pub fn record_phase(&mut self, phase: &str, millis: u64) {
        self.phases.retain(|p| p.phase != phase);
        self.phases.push(PhaseTiming { phase: phase.into(), millis });
    }

    /// Lists every file below `dir`, then writes the manifest there.
    pub fn finish(mut self, dir: &Path) -> anyhow::Result<()> {
        self.tool_version = env!("CARGO_PKG_VERSION").into();
        self.outputs = list_outputs(dir)?;
        self.peak_rss_kib = peak_rss_kib();
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n").with_context(|| format!("write {}", dir.display()))?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<(String, u64)> {
    let mut file = fs::File::open(path).with_context(|| format!("open {}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn list_outputs(dir: &Path) -> anyhow::Result<Vec<OutputFile>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).with_context(|| format!("list {}", d.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().replace('\\', "/");
            if rel == MANIFEST_FILE {
                continue;
            }
            let (sha256, bytes) = sha256_file(&path)?;
            out.push(OutputFile { path: rel, bytes, sha256 });
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// `VmHWM` of the current process on Linux.
fn peak_rss_kib() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}
