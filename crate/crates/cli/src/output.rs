use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing LF.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output values serialize");
    s.push('\n');
    s
}

/// Writes `value` to `path`, or to stdout when no path is given.
pub fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = to_json(value);
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
