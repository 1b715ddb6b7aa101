//! Atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Collects files under one output directory. Each write goes to a
/// temporary file in the same directory and is renamed into place.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        let io = |source| CliError::Io { path: path.clone(), source };
        let mut tmp = tempfile::Builder::new().prefix(".fadrc-").tempfile_in(&self.root).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Stable file-name fragment for a number: `1.2` → `1.2`, `-0.5` → `m0.5`.
pub fn tag(v: f64) -> String {
    v.to_string().replace('-', "m")
}
