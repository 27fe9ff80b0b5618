use super::RunConfig;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Lossless float text: 17 significant digits, lowercase scientific.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Comma-separated table built in memory.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn floats(&mut self, vals: &[f64]) {
        let cells: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&cells);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Whitespace-separated columns for gnuplot.
pub fn dat(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut s = format!("# {header}\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(s, "{}", cells.join(" "));
    }
    s.into_bytes()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub medium_sha256: String,
    pub status: String,
    pub exit_code: i32,
    pub stages: Vec<StageTiming>,
    /// Certificate or trend name to verdict.
    pub certificates: BTreeMap<String, bool>,
    pub files: Vec<FileEntry>,
}

/// Output files and stage timings of one run.
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    stages: Vec<StageTiming>,
    clock: Instant,
}

impl Artifacts {
    pub fn new() -> Self {
        Artifacts {
            files: Vec::new(),
            stages: Vec::new(),
            clock: Instant::now(),
        }
    }

    /// Closes the current stage under `name`.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(StageTiming {
            stage: name.to_string(),
            seconds: (now - self.clock).as_secs_f64(),
        });
        self.clock = now;
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Parse(e.to_string()))?;
        text.push('\n');
        self.add(name, text.into_bytes());
        Ok(())
    }

    /// Writes every file and a manifest listing them with their hashes.
    pub fn finish(
        mut self,
        out: &Path,
        config: RunConfig,
        medium_sha256: String,
        status: (&str, i32),
        certificates: BTreeMap<String, bool>,
    ) -> Result<RunManifest> {
        std::fs::create_dir_all(out)?;
        let mut files = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            std::fs::write(out.join(name), bytes)?;
            files.push(FileEntry {
                name: name.clone(),
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len() as u64,
            });
        }
        self.stage("write");
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            medium_sha256,
            status: status.0.to_string(),
            exit_code: status.1,
            stages: self.stages,
            certificates,
            files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| crate::Error::Parse(e.to_string()))?;
        text.push('\n');
        std::fs::write(out.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

impl Default for Artifacts {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1.5e-300, -2.5e12, std::f64::consts::PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(!s.contains('E'));
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["x", "y"]);
        c.floats(&[1.0, 2.0]);
        assert_eq!(
            String::from_utf8(c.into_bytes()).unwrap(),
            "x,y\n1.0000000000000000e0,2.0000000000000000e0\n"
        );
    }
}
