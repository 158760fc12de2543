//! Artifact files and run manifests.

use anyhow::{Context, Result};
use benedicks::fmt_num;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
struct ArtifactEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    label: &'a str,
    config_hash: &'a str,
    version: &'a str,
    seed: u64,
    outcome: &'a str,
    artifacts: &'a [ArtifactEntry],
}

/// Collects the files of one subcommand run and writes the manifest last.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<ArtifactEntry>,
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(ArtifactEntry {
            file: name.to_string(),
            sha256: digest(bytes),
        });
        Ok(())
    }

    /// Numeric CSV with a mandatory header; every value has 17 significant digits.
    pub fn csv<I>(&mut self, name: &str, header: &[String], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let mut out = header.join(",");
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(fmt_num).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        self.bytes(name, out.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn with_writer(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.bytes(name, &buf)
    }

    pub fn finish(self, subcommand: &str, label: &str, config_hash: &str, seed: u64, outcome: &str) -> Result<()> {
        let m = Manifest {
            subcommand,
            label,
            config_hash,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            outcome,
            artifacts: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn strs(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// `prefix1, …, prefixd`.
pub fn coord_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}
