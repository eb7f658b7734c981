//! Run orchestration: staging directory, manifest, atomic publish, and the
//! integrity-checked report.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments;
use crate::output::StreamUse;

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "lrplab-manifest/1";

pub const SEED_DERIVATION: &str = "stream id = first 8 bytes (LE) of SHA-256(\"lrplab/stream/v1\" || len(label) || label || coordinates as u64 LE); generator = ChaCha8 keyed by SHA-256(\"lrplab/rng/v1\" || master seed || stream id || substream id)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngAccounting {
    pub master_seed: u64,
    pub derivation: String,
    pub streams: Vec<StreamUse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub complete: bool,
    pub kind: String,
    pub code_version: String,
    pub started: String,
    pub finished: Option<String>,
    /// Full resolved config, as TOML.
    pub config: String,
    pub files: Vec<FileEntry>,
    pub rng: RngAccounting,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .with_context(|| format!("integrity error: no readable manifest at {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("integrity error: malformed manifest {}", path.display()))
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        fs::write(dir.join(MANIFEST), bytes)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn staging_dir(out: &Path) -> Result<PathBuf> {
    let name = out
        .file_name()
        .with_context(|| format!("output path {} has no final component", out.display()))?;
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(parent.join(format!(
        ".{}.staging-{}",
        name.to_string_lossy(),
        std::process::id()
    )))
}

fn is_empty_dir(path: &Path) -> Result<bool> {
    Ok(fs::read_dir(path)?.next().is_none())
}

/// Executes the experiment and publishes its directory. Data files go to a
/// staging directory that holds an incomplete manifest until every file is
/// written; the directory is then renamed into place. On error the staging
/// directory is removed.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let out = &cfg.out;
    if out.exists() && !(out.is_dir() && is_empty_dir(out)?) {
        bail!("output directory {} exists and is not empty", out.display());
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let staging = staging_dir(out)?;
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    let result = run_in(cfg, &staging).and_then(|manifest| {
        if out.exists() {
            fs::remove_dir(out)?;
        }
        fs::rename(&staging, out)
            .with_context(|| format!("publishing {}", out.display()))?;
        Ok(manifest)
    });
    if result.is_err() && staging.exists() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

fn run_in(cfg: &ExperimentConfig, staging: &Path) -> Result<RunManifest> {
    let mut manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        complete: false,
        kind: cfg.kind.name().into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        started: now(),
        finished: None,
        config: cfg.to_toml(),
        files: Vec::new(),
        rng: RngAccounting {
            master_seed: cfg.seed,
            derivation: SEED_DERIVATION.into(),
            streams: Vec::new(),
        },
    };
    manifest.write(staging)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("building the worker pool")?;
    let outputs = pool.install(|| experiments::run(cfg))?;
    for (name, bytes) in &outputs.files {
        fs::write(staging.join(name), bytes).with_context(|| format!("writing {name}"))?;
        manifest.files.push(FileEntry {
            name: name.clone(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
    }
    manifest.rng.streams = outputs.streams;
    manifest.finished = Some(now());
    manifest.complete = true;
    manifest.write(staging)?;
    Ok(manifest)
}

/// Verifies that the manifest is complete and every listed file matches
/// its checksum.
pub fn verify(dir: &Path) -> Result<RunManifest> {
    let manifest = RunManifest::read(dir)?;
    if manifest.format != MANIFEST_FORMAT {
        bail!("integrity error: unknown manifest format `{}`", manifest.format);
    }
    if !manifest.complete {
        bail!("integrity error: run in {} is marked incomplete", dir.display());
    }
    for f in &manifest.files {
        let bytes = fs::read(dir.join(&f.name))
            .with_context(|| format!("integrity error: missing output {}", f.name))?;
        if sha256_hex(&bytes) != f.sha256 {
            bail!("integrity error: checksum mismatch for {}", f.name);
        }
    }
    Ok(manifest)
}
