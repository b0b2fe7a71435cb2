use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// A file to be written once every artifact of a run has been computed.
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(path: PathBuf, text: String) -> Self {
        Self {
            path,
            bytes: text.into_bytes(),
        }
    }

    pub fn json<T: Serialize>(path: PathBuf, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        Self::text(path, text)
    }
}

/// `out` with its extension replaced by `suffix`, e.g. `run.csv` to
/// `run.summary.json`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_atomic(a: &Artifact) -> CliResult<()> {
    let dir = match a.path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::artifact(&a.path, e))?;
    tmp.write_all(&a.bytes).map_err(|e| CliError::artifact(&a.path, e))?;
    tmp.persist(&a.path).map_err(|e| CliError::artifact(&a.path, e.error))?;
    Ok(())
}

pub fn write_all(artifacts: &[Artifact]) -> CliResult<()> {
    artifacts.iter().try_for_each(write_atomic)
}
