//! Configuration, record files, reports and plots.

pub mod config;
pub mod pipeline;
pub mod record_file;
pub mod svg;

use std::io::Write;
use std::path::Path;

use crate::error::{PoeError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_INSUFFICIENT_DATA: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Process exit status for an error.
pub fn exit_code(e: &PoeError) -> i32 {
    match e {
        PoeError::Json(_) | PoeError::Csv(_) | PoeError::Config(_) => EXIT_PARSE,
        PoeError::Io(_) => EXIT_IO,
        PoeError::InsufficientData(_) => EXIT_INSUFFICIENT_DATA,
        _ => EXIT_INVARIANT,
    }
}

/// Writes to a temporary file in the target directory, then renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| PoeError::Io(e.error))?;
    Ok(())
}
