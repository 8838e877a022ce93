//! Writing experiment tables and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::record::ExperimentRecord;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub file: String,
    pub experiment: String,
    pub rows: usize,
    pub columns: Vec<&'static str>,
}

/// Run summary written next to the CSV files. Contains no timestamps or
/// host details, so reruns reproduce it byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub unreachable_target: bool,
    pub files: Vec<FileEntry>,
    pub config: ScenarioConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        Self {
            tool: "pa-sim",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            unreachable_target: false,
            files: Vec::new(),
            config: config.clone(),
        }
    }
}

pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path, manifest: Manifest) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
        })
    }

    pub fn write(&mut self, file: &str, rec: &ExperimentRecord) -> io::Result<PathBuf> {
        let path = self.root.join(file);
        let mut out = BufWriter::new(File::create(&path)?);
        rec.write_csv(&mut out)?;
        out.flush()?;
        self.manifest.files.push(FileEntry {
            file: file.to_string(),
            experiment: rec.experiment_id.clone(),
            rows: rec.rows.len(),
            columns: rec.columns.clone(),
        });
        Ok(path)
    }

    pub fn mark_unreachable(&mut self) {
        self.manifest.unreachable_target = true;
    }

    pub fn finish(self) -> io::Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
