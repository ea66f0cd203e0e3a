use std::io::{self, Write};
use std::path::Path;

use tempfile::NamedTempFile;
use udyn_core::report::{Format, Table};

/// Write to stdout, or to `path` via a sibling temp file renamed into place,
/// so a failed run never leaves a partial file.
pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> io::Result<()> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match table.write(format, &mut lock).and_then(|_| lock.flush()) {
                // A closed pipe (`| head`) is the reader's choice, not a failure.
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
        Some(path) => write_file_atomic(path, |w| table.write(format, w)),
    }
}

/// Atomically write arbitrary content produced by `fill` to `path`.
pub fn write_file_atomic<F>(path: &Path, fill: F) -> io::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
