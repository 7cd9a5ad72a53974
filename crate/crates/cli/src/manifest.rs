//! Provenance record written into every output directory.
//!
//! A directory holds the outputs of exactly one command; re-running the
//! same command replaces them, a different command is refused.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use homwave::model::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, label: String) -> Result<Self> {
        let mut file =
            fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 20];
        let mut bytes = 0u64;
        loop {
            let n = file.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            bytes += n as u64;
        }
        Ok(FileDigest {
            path: label,
            bytes,
            sha256: hex::encode(hasher.finalize()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    /// Subcommand name, e.g. `simulate`.
    pub command: String,
    /// Full argument vector.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub config: Option<RunConfig>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub wall_clock_s: f64,
}

/// Collects outputs while a command runs, then writes the manifest.
pub struct ManifestBuilder {
    dir: PathBuf,
    started: Instant,
    manifest: RunManifest,
}

impl ManifestBuilder {
    /// Prepares `dir`, refusing one that holds another command's outputs.
    pub fn begin(dir: &Path, command: &str, config: Option<&RunConfig>) -> Result<Self> {
        let existing = dir.join(MANIFEST_NAME);
        if existing.exists() {
            let text = fs::read_to_string(&existing)?;
            let prior: RunManifest = serde_json::from_str(&text)
                .with_context(|| format!("unreadable manifest {}", existing.display()))?;
            if prior.command != command {
                bail!(homwave::Error::Config {
                    field: "out".into(),
                    reason: format!(
                        "{} already holds outputs of `{}`; choose another directory",
                        dir.display(),
                        prior.command
                    ),
                });
            }
        }
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(ManifestBuilder {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            manifest: RunManifest {
                artifact: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                argv: std::env::args().collect(),
                seed: config.map(|c| c.experiment.rng_seed),
                config: config.cloned(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                wall_clock_s: 0.0,
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path of output `name` inside the directory.
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let d = FileDigest::of(path, path.display().to_string())?;
        self.manifest.inputs.push(d);
        Ok(())
    }

    /// Records an already written output.
    pub fn output(&mut self, name: &str) -> Result<&FileDigest> {
        let d = FileDigest::of(&self.dir.join(name), name.to_string())?;
        self.manifest.outputs.retain(|o| o.path != name);
        self.manifest.outputs.push(d);
        Ok(self.manifest.outputs.last().expect("just pushed"))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.output(name)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        let path = self.dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.manifest)
    }
}
