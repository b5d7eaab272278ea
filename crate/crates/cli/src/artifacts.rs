//! Output sink for one run: a directory holding manifest.json, CSV tables,
//! and JSON summaries. Everything is written deterministically — sorted JSON
//! keys, shortest round-trip float formatting, LF line endings — so a rerun
//! with the same configuration reproduces the bytes exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::Failure;

pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Artifacts { dir: dir.to_path_buf() })
    }

    /// The run manifest: command name, the fully resolved configuration
    /// (seeds and tolerances included), and the package version. No
    /// timestamps — the manifest is part of the reproducible byte stream.
    pub fn manifest(&self, command: &str, config: &BTreeMap<String, Value>) -> Result<(), Failure> {
        self.json(
            "manifest.json",
            &serde_json::json!({
                "command": command,
                "config": config,
                "version": env!("CARGO_PKG_VERSION"),
            }),
        )
    }

    pub fn json(&self, name: &str, value: &Value) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).expect("artifact serialization");
        self.write(name, &(text + "\n"))
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let fail = |e: csv::Error| Failure::Io(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row).map_err(fail)?;
        }
        w.flush()
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
    }

    pub fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// Shortest round-trip decimal form, shared by every CSV column.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
