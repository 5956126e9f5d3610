//! Artifact directories and their `manifest.json`.
//!
//! The manifest holds everything needed to rerun an experiment: the
//! verbatim configuration with its hash, the hashes of every input file and
//! of the mesh, the seed, the SI parameters and unit conversions, the stage
//! log, and a hash per output file. It holds no timestamps or absolute paths,
//! so reruns of the same configuration produce identical manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use topomode::dynamics::ModelParams;

use crate::config::{Conversion, Resolved};
use crate::error::{CliError, Result};
use crate::setup::sha256_hex;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileHash {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiParameters {
    pub f0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub nu: f64,
    pub rho0: f64,
    pub h0: f64,
    pub l: f64,
}

impl From<ModelParams> for SiParameters {
    fn from(p: ModelParams) -> Self {
        Self {
            f0: p.f0,
            beta: p.beta,
            sigma: p.sigma,
            nu: p.nu,
            rho0: p.rho0,
            h0: p.h0,
            l: p.l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub kind: crate::config::ExperimentKind,
    pub seed: u64,
    pub paper_scale: bool,
    pub dry_run: bool,
    pub config_sha256: String,
    pub config: String,
    pub inputs: Vec<FileHash>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_sha256: Option<String>,
    pub parameters: SiParameters,
    pub conversions: Vec<Conversion>,
    pub stages: Vec<StageRecord>,
    /// Set when a stage failed; the outputs listed are then incomplete.
    pub partial: bool,
    pub outputs: Vec<FileHash>,
}

impl Manifest {
    pub fn new(config_text: &str, resolved: &Resolved, inputs: Vec<FileHash>, dry_run: bool) -> Self {
        Self {
            tool: "topomode".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kind: resolved.kind,
            seed: resolved.seed,
            paper_scale: resolved.paper_scale,
            dry_run,
            config_sha256: sha256_hex(config_text.as_bytes()),
            config: config_text.into(),
            inputs,
            mesh_sha256: None,
            parameters: resolved.params.into(),
            conversions: resolved.conversions.clone(),
            stages: Vec::new(),
            partial: false,
            outputs: Vec::new(),
        }
    }
}

/// Output directory that remembers the files written into it.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` through `f`; a second write of the same name replaces
    /// the first.
    pub fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, |w| writeln!(w, "{text}"))
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn hashes(&self) -> Result<Vec<FileHash>> {
        let mut names = self.files.clone();
        names.sort();
        names
            .into_iter()
            .map(|file| {
                let bytes = std::fs::read(self.dir.join(&file))?;
                Ok(FileHash {
                    sha256: sha256_hex(&bytes),
                    file,
                })
            })
            .collect()
    }

    /// Hashes every output and writes the manifest. Call once, after all
    /// other files.
    pub fn finish(&self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.outputs = self.hashes()?;
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.dir.join(MANIFEST), format!("{text}\n"))?;
        Ok(manifest)
    }
}

/// Runs one named stage, logging its outcome in `manifest`. On failure the
/// error is wrapped with the stage name.
pub fn stage<T>(manifest: &mut Manifest, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log::info!("stage {name}");
    match f() {
        Ok(v) => {
            manifest.stages.push(StageRecord {
                name: name.into(),
                status: StageStatus::Completed,
                error: None,
            });
            Ok(v)
        }
        Err(e) => {
            manifest.stages.push(StageRecord {
                name: name.into(),
                status: StageStatus::Failed,
                error: Some(e.to_string()),
            });
            manifest.partial = true;
            Err(CliError::Stage {
                stage: name.into(),
                source: Box::new(e),
            })
        }
    }
}

pub fn hash_inputs(paths: &[&Path]) -> Result<Vec<FileHash>> {
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| CliError::Input {
                path: p.to_path_buf(),
                source: e,
            })?;
            Ok(FileHash {
                file: p
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}
