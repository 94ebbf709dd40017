use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const EFFECTIVE_CONFIG: &str = "effective_config.json";

/// Output directory of one command. Every file is written by exactly one
/// writer owned by the main thread.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Creates the directory and echoes the effective configuration.
    pub fn prepare(&self, cfg: &ExperimentConfig) -> Result<()> {
        fs::create_dir_all(&self.root).map_err(|source| CliError::Write {
            path: self.root.clone(),
            source,
        })?;
        self.write_json(EFFECTIVE_CONFIG, cfg)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Aborted(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|source| CliError::Write { path, source })
    }

    pub fn create(&self, name: &str) -> Result<File> {
        let path = self.path(name);
        File::create(&path).map_err(|source| CliError::Write { path, source })
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<CsvSink> {
        let mut sink = CsvSink {
            writer: csv::Writer::from_writer(self.create(name)?),
        };
        sink.write(header)?;
        Ok(sink)
    }
}

/// CSV file flushed after every record, so an interrupted run leaves only
/// complete lines behind.
pub struct CsvSink {
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn write<I, S>(&mut self, record: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(record)?;
        self.writer.flush().map_err(|e| CliError::Csv(e.into()))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| CliError::Csv(e.into()))
    }
}

/// Writes a file through a buffered handle.
pub fn write_bytes(
    out: &OutDir,
    name: &str,
    write: impl FnOnce(&mut dyn Write) -> drm_core::Result<()>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(out.create(name)?);
    write(&mut w)?;
    w.flush().map_err(|source| CliError::Write {
        path: out.path(name),
        source,
    })
}
