//! Report writer: every file carries the config hash and is recorded for the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{hex, PipelineConfig};
use crate::CliError;

pub struct Outputs {
    dir: PathBuf,
    hash: String,
    written: Vec<(String, String)>,
    inputs: Vec<(String, String)>,
}

fn write_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

/// SHA-256 of a file, or of every file (sorted by name) in a directory.
pub fn digest_path(path: &Path) -> Result<String, CliError> {
    let read_err = |e: std::io::Error| CliError::Input(format!("cannot read {}: {e}", path.display()));
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(path).map_err(read_err)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        names.sort();
        for p in names.iter().filter(|p| p.is_file()) {
            h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
            h.update(fs::read(p).map_err(read_err)?);
        }
    } else {
        h.update(fs::read(path).map_err(read_err)?);
    }
    Ok(hex(&h.finalize()))
}

impl Outputs {
    pub fn create(dir: &Path, cfg: &PipelineConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), hash: cfg.hash(), written: Vec::new(), inputs: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Text for an SVG `<desc>` element.
    pub fn desc(&self, what: &str) -> String {
        format!("config_hash={}; {what}", self.hash)
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| write_err(&path, e))?;
        self.record(name, bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.written.push((name.to_string(), hex(&Sha256::digest(bytes))));
    }

    /// Registers a file written by someone else (e.g. the mask writer).
    pub fn adopt(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.path(name);
        let bytes = fs::read(&path).map_err(|e| write_err(&path, e))?;
        self.record(name, &bytes);
        Ok(())
    }

    /// Records an input; files inside the output directory are listed by
    /// their relative name so manifests do not depend on where `--out` is.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let d = digest_path(path)?;
        let shown = path.strip_prefix(&self.dir).unwrap_or(path);
        self.inputs.push((shown.display().to_string(), d));
        Ok(())
    }

    /// CSV body prefixed by a `# config_hash=` comment line.
    pub fn csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("# config_hash={}\n{body}", self.hash);
        self.put(name, text.as_bytes())
    }

    /// Plain-text report with the same header line as the CSVs.
    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        self.csv(name, body)
    }

    /// Pretty JSON of `value` with a top-level `config_hash` key.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).expect("report serialises");
        match &mut v {
            Value::Object(m) => {
                m.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            other => v = json!({ "config_hash": self.hash, "value": other.take() }),
        }
        let mut text = serde_json::to_string_pretty(&v).expect("report serialises");
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn svg(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        self.put(name, body.as_bytes())
    }

    /// `manifest_<command>.json`: config, input and output digests, tool
    /// version and a timestamp (the only run-dependent field).
    pub fn finish(self, command: &str, cfg: &PipelineConfig) -> Result<PathBuf, CliError> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let digests = |v: &[(String, String)], key: &str| -> Vec<Value> {
            v.iter().map(|(n, d)| json!({ key: n, "sha256": d })).collect()
        };
        let manifest = json!({
            "tool": "porescope",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_hash": self.hash,
            "config": cfg,
            "inputs": digests(&self.inputs, "path"),
            "outputs": digests(&self.written, "file"),
            "created_unix_s": created,
        });
        let name = format!("manifest_{command}.json");
        let path = self.path(&name);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text).map_err(|e| write_err(&path, e))?;
        Ok(path)
    }
}
