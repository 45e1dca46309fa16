//! Output artefacts: CSV traces, JSON run reports and SVG plots. All files
//! are written to a temporary sibling first and renamed into place.

mod report;
mod svg;
mod trace;

pub use report::{config_hash, RunReport, CODE_VERSION};
pub use svg::{density_contour_svg, series_panels_svg, sweep_svg, Series};
pub use trace::{read_trace, write_trace, write_trace_to, TRACE_COLUMNS};

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` atomically via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
