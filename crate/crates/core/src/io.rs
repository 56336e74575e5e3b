//! Artifact writing: every output goes to a temp file in the target directory and is renamed into place.

use std::fs::File;
use std::io;
use std::path::Path;

use serde::Serialize;

pub fn atomic_write<F>(path: &Path, write: F) -> io::Result<()>
where
    F: FnOnce(&mut File) -> io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Serializes `rows` as a headed CSV.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> io::Result<()> {
    atomic_write(path, |f| {
        let mut w = csv::Writer::from_writer(io::BufWriter::new(f));
        for r in rows {
            w.serialize(r).map_err(io::Error::other)?;
        }
        w.flush()
    })
}

/// Writes a CSV with an explicit header; used when rows are not serde structs.
pub fn write_csv_records(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    atomic_write(path, |f| {
        let mut w = csv::Writer::from_writer(io::BufWriter::new(f));
        w.write_record(header).map_err(io::Error::other)?;
        for r in rows {
            w.write_record(r).map_err(io::Error::other)?;
        }
        w.flush()
    })
}
