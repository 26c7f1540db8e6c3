//! Output files. Every CSV starts with a `#` provenance line and every JSON
//! document carries a `provenance` object.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Provenance {
            command: command.to_string(),
            config_sha256,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn comment(&self) -> String {
        format!(
            "# vixsv {} command={} config_sha256={} seed={}",
            self.version, self.command, self.config_sha256, self.seed
        )
    }
}

/// Writes files into one directory and remembers what it wrote.
pub struct ArtifactWriter {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// CSV with the given header and rows of preformatted fields.
    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "{}", self.provenance.comment())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// JSON document `{"provenance": ..., <body fields>}`.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let mut value = serde_json::to_value(body)?;
        let prov = serde_json::to_value(&self.provenance)?;
        match &mut value {
            serde_json::Value::Object(map) => {
                map.insert("provenance".to_string(), prov);
            }
            _ => return Err(Error::Invariant("JSON artifacts must be objects".into())),
        }
        let path = self.dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, &value)?;
        writeln!(out)?;
        out.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn finish(self) -> Vec<PathBuf> {
        self.written
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
