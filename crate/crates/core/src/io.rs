//! Small filesystem helpers shared by the CSV/JSON/SVG writers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write a file atomically: write `<path>.tmp`, then rename it over `path`.
/// Creates missing parent directories. A crashed run leaves at worst a
/// `.tmp` file behind, never a truncated output.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_through_tmp_and_creates_parents() {
        let dir = std::env::temp_dir().join(format!("qlstm-io-{}", std::process::id()));
        let path = dir.join("nested/out.txt");
        atomic_write(&path, b"payload").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"payload");
        assert!(!path.with_extension("txt.tmp").exists());
        // overwrite keeps the latest content
        atomic_write(&path, b"v2").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"v2");
        fs::remove_dir_all(&dir).unwrap();
    }
}
