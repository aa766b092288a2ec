//! Saved templates: one JSON object per line, appended on save and indexed in
//! memory on open.
//!
//! ```text
//! {"id":"5f0c…","label":"football","created":1760600000,"seed":7,"candidate":{…}}
//! ```
//!
//! `candidate` is the full candidate snapshot, so a template re-renders to the
//! same bytes without re-running synthesis.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statviz_core::synth::Candidate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("template store {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("template store {path}, line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedTemplate {
    pub id: String,
    pub label: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub seed: u64,
    pub candidate: Candidate,
}

#[derive(Debug)]
pub struct TemplateStore {
    path: PathBuf,
    templates: Vec<SavedTemplate>,
}

impl TemplateStore {
    /// Opens the store, creating nothing until the first save.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let io = |source| StoreError::Io { path: path.display().to_string(), source };
        let mut templates = Vec::new();
        match File::open(path) {
            Ok(f) => {
                for (i, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.map_err(io)?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let t = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                    templates.push(t);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(io(e)),
        }
        Ok(TemplateStore { path: path.to_path_buf(), templates })
    }

    pub fn save(&mut self, template: SavedTemplate) -> Result<&SavedTemplate, StoreError> {
        let io = |source| StoreError::Io { path: self.path.display().to_string(), source };
        let mut line = serde_json::to_string(&template).expect("templates serialize");
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        f.write_all(line.as_bytes()).map_err(io)?;
        f.sync_data().map_err(io)?;
        self.templates.push(template);
        Ok(self.templates.last().unwrap())
    }

    pub fn get(&self, id: &str) -> Option<&SavedTemplate> {
        self.templates.iter().find(|t| t.id == id)
    }

    /// In save order.
    pub fn list(&self) -> &[SavedTemplate] {
        &self.templates
    }
}
