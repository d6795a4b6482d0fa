use std::path::{Path, PathBuf};

use dif_core::checkpoint::sha256_hex;
use dif_core::{DifError, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Config echo plus content hashes of everything read and written.
/// Deliberately free of timestamps so identical runs produce identical files.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub command: String,
    pub version: &'static str,
    pub args: Value,
    pub config: Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub summary: Value,
}

fn hash_file(path: &Path) -> Result<FileHash> {
    let bytes = std::fs::read(path).map_err(|e| DifError::io(path, e))?;
    Ok(FileHash {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

impl Provenance {
    pub fn new(command: &str, args: Value, config: Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            args,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(hash_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(hash_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| DifError::io(path, e))
    }
}

/// `out.ext` -> `out.ext.provenance.json`; a directory gets `provenance.json` inside.
pub fn path_for(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("provenance.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".provenance.json");
        PathBuf::from(s)
    }
}
