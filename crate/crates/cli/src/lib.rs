//! Scenario runner for the `hypimcf` command.

pub mod pipeline;
pub mod scenario;
pub mod summary;

use std::fs;
use std::io;
use std::path::Path;

use pipeline::{Artifacts, LEVELSET_DIR, SUMMARY_FILE};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenarios.md")]
mod guide {}

/// Writes every artifact under `dir`, replacing level sets left by earlier runs.
/// `summary.json` is written last.
pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let levels = dir.join(LEVELSET_DIR);
    if levels.is_dir() {
        fs::remove_dir_all(&levels)?;
    }
    for (rel, body) in &artifacts.files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, body)?;
    }
    fs::write(dir.join(SUMMARY_FILE), artifacts.summary_json())
}
