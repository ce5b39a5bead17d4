use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use super::HarnessError;

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(io_error(&dir))?;
    tmp.write_all(bytes).map_err(io_error(path))?;
    tmp.as_file().sync_all().map_err(io_error(path))?;
    tmp.persist(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `n,p_n,q_n` rows.
pub fn coefficient_csv(rows: &[(i64, f64, f64)]) -> String {
    let mut out = String::from("n,p_n,q_n\n");
    for (n, p, q) in rows {
        out.push_str(&format!("{n},{p:e},{q:e}\n"));
    }
    out
}

/// `<prefix>_<suffix>.csv`
pub fn table_path(prefix: &Path, suffix: &str) -> PathBuf {
    sibling(prefix, &format!("_{suffix}.csv"))
}

/// `<prefix>.json`
pub fn report_path(prefix: &Path) -> PathBuf {
    sibling(prefix, ".json")
}

fn sibling(prefix: &Path, tail: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(tail);
    prefix.with_file_name(name)
}
