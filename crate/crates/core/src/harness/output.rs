//! Atomic artifact writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::experiments::RunOutput;

/// Creates `dir` and proves it writable, so a bad path fails before any computation.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".dampwave-probe");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = parent.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes every artifact under `dir`; returns the paths written.
pub fn emit(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    prepare_dir(dir)?;
    out.artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            write_atomic(&path, &a.bytes)?;
            Ok(path)
        })
        .collect()
}
