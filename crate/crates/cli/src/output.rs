use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use kuradyn::config::ExperimentConfig;
use kuradyn::jump::{trial_stream, StreamPurpose};

use crate::Failure;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&root).map_err(|e| Failure::Io(format!("{}: {e}", root.display())))?;
        Ok(OutputDir { root })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_json(&self, rel: &str, value: &Value) -> Result<(), Failure> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Failure::Consistency(e.to_string()))?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<(), Failure> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }

    pub fn write_with(
        &self,
        rel: &str,
        f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let file =
            fs::File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

/// Stream table for the manifest: which generator fed which draw.
pub fn streams(seed: u64, trials: u64, purposes: &[StreamPurpose]) -> Value {
    let rows: Vec<Value> = (0..trials)
        .flat_map(|t| {
            purposes.iter().map(move |&p| {
                json!({
                    "trial": t,
                    "purpose": serde_json::to_value(p).unwrap_or(Value::Null),
                    "stream": trial_stream(t, p),
                    "seed": seed,
                })
            })
        })
        .collect();
    Value::Array(rows)
}

pub fn manifest(
    command: &str,
    config: &ExperimentConfig,
    streams: Value,
    jobs: Option<usize>,
) -> Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "toolkit": "kuradyn",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": config.seed,
        "graph_seed": config.graph.seed,
        "config": config.to_toml(),
        "streams": streams,
        "jobs": jobs,
        "timestamp": timestamp,
    })
}
