use std::io::Write;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance block written as `#` lines at the top of every output.
///
/// Wall-clock runtime is reported on stderr only, so that identical inputs
/// give identical output bytes.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub capacity_flags: Vec<String>,
    pub extra: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, config: Value, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand,
            config,
            seed,
            capacity_flags: Vec::new(),
            extra: Vec::new(),
        }
    }

    pub fn flag(&mut self, f: impl Into<String>) {
        self.capacity_flags.push(f.into());
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.extra.push((key.to_string(), value.to_string()));
    }

    pub fn config_json(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.config_json().as_bytes()))
    }

    pub fn header(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# tool: polythresh {}\n", env!("CARGO_PKG_VERSION")));
        s.push_str(&format!("# subcommand: {}\n", self.subcommand));
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s.push_str(&format!("# config_sha256: {}\n", self.digest()));
        s.push_str(&format!("# config: {}\n", self.config_json()));
        let flags = if self.capacity_flags.is_empty() {
            "none".to_string()
        } else {
            self.capacity_flags.join(";")
        };
        s.push_str(&format!("# capacity_flags: {flags}\n"));
        for (k, v) in &self.extra {
            s.push_str(&format!("# {k}: {v}\n"));
        }
        s
    }
}

/// Writes `contents` to `path` via a temporary file in the same directory
/// and an atomic rename, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(contents.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
