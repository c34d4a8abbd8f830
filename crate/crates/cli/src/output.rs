//! Result delivery. File output is staged to a temporary file in the target
//! directory and renamed into place, so a failing run never leaves a
//! truncated artifact behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

pub fn write(dest: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match dest {
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
        Some(path) => {
            let dir = match path.parent() {
                Some(parent) if !parent.as_os_str().is_empty() => parent,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| {
                CliError::Io(format!(
                    "cannot create temporary file in {}: {e}",
                    dir.display()
                ))
            })?;
            tmp.write_all(content.as_bytes())
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            tmp.persist(path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            Ok(())
        }
    }
}
