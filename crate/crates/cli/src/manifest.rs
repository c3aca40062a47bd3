use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn of(path: &Path) -> io::Result<Self> {
        let mut hasher = Sha256::new();
        let mut file = File::open(path)?;
        let mut buf = vec![0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let read = io::Read::read(&mut file, &mut buf)?;
            if read == 0 {
                break;
            }
            hasher.update(&buf[..read]);
            bytes += read as u64;
        }
        Ok(Self {
            path: path.display().to_string(),
            sha256: hex::encode(hasher.finalize()),
            bytes,
        })
    }
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub argv: Vec<String>,
    pub parameters: Map<String, Value>,
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub duration_secs: f64,
}

/// Inputs, outputs and resolved parameters collected while a command runs.
#[derive(Debug, Default)]
pub struct RunLog {
    pub parameters: Map<String, Value>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunLog {
    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), v);
    }

    /// Merges the fields of a serializable struct into the parameters.
    pub fn params_from(&mut self, value: impl Serialize) {
        if let Ok(Value::Object(map)) = serde_json::to_value(value) {
            self.parameters.extend(map);
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: PathBuf) -> PathBuf {
        self.outputs.push(path.clone());
        path
    }
}

fn artifacts(paths: &[PathBuf]) -> Vec<Artifact> {
    paths.iter().filter_map(|p| Artifact::of(p).ok()).collect()
}

pub struct ManifestContext<'a> {
    pub command: &'a str,
    pub argv: Vec<String>,
    pub deterministic: bool,
    pub duration: Duration,
}

pub fn write_manifest(
    dir: &Path,
    ctx: ManifestContext<'_>,
    log: &RunLog,
    error: Option<String>,
) -> Result<PathBuf> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: ctx.command.to_string(),
        status: if error.is_none() { "ok" } else { "failed" },
        error,
        argv: ctx.argv,
        parameters: log.parameters.clone(),
        seed: log.seed,
        deterministic: ctx.deterministic,
        inputs: artifacts(&log.inputs),
        outputs: artifacts(&log.outputs),
        duration_secs: ctx.duration.as_secs_f64(),
    };
    let path = dir.join(format!("{}.manifest.json", ctx.command));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    io::Write::write_all(&mut w, b"\n")?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}
