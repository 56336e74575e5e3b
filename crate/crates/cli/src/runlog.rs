//! JSON-lines record of per-item outcomes, one file per command run.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use reefpam::io::atomic_write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub command: &'static str,
    pub item: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    command: &'static str,
    records: Vec<LogRecord>,
}

impl RunLog {
    pub fn new(command: &'static str) -> Self {
        RunLog {
            command,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, item: impl Into<String>, status: Status, detail: impl Into<String>) {
        let rec = LogRecord {
            command: self.command,
            item: item.into(),
            status,
            detail: detail.into(),
        };
        match status {
            Status::Ok => log::info!("{}: {}", rec.item, rec.detail),
            Status::Skipped => log::warn!("{}: skipped: {}", rec.item, rec.detail),
            Status::Error => log::error!("{}: {}", rec.item, rec.detail),
        }
        self.records.push(rec);
    }

    pub fn ok(&mut self, item: impl Into<String>, detail: impl Into<String>) {
        self.push(item, Status::Ok, detail);
    }

    pub fn skipped(&mut self, item: impl Into<String>, detail: impl Into<String>) {
        self.push(item, Status::Skipped, detail);
    }

    pub fn error(&mut self, item: impl Into<String>, detail: impl Into<String>) {
        self.push(item, Status::Error, detail);
    }

    /// Any item skipped or failed.
    pub fn is_partial(&self) -> bool {
        self.records.iter().any(|r| r.status != Status::Ok)
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}_log.jsonl", self.command))
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = self.path_in(dir);
        atomic_write(&path, |f| {
            let mut w = std::io::BufWriter::new(f);
            for r in &self.records {
                serde_json::to_writer(&mut w, r).map_err(std::io::Error::other)?;
                w.write_all(b"\n")?;
            }
            w.flush()
        })?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_json_object_per_line() {
        let d = tempfile::tempdir().unwrap();
        let mut log = RunLog::new("ingest");
        log.ok("a.wav", "60 s");
        log.skipped("b.wav", "no start time");
        assert!(log.is_partial());
        let p = log.write(d.path()).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["status"], "skipped");
        assert_eq!(lines[0]["command"], "ingest");
    }
}
