//! Run manifests and crash-safe result files.
//!
//! The manifest is written first and lists every result file. Each result
//! is written under a temporary name and renamed into place, so an
//! interrupted run never leaves a result the manifest does not mention.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Map<String, Value>,
    pub inputs: Vec<InputRecord>,
    pub seed: u64,
    pub out_dir: String,
    pub version: String,
    pub results: Vec<String>,
}

pub struct Run {
    command: &'static str,
    seed: u64,
    out_dir: PathBuf,
    arguments: Map<String, Value>,
    inputs: Vec<InputRecord>,
    results: Vec<(String, String)>,
}

impl Run {
    pub fn new(command: &'static str, seed: u64, out_dir: &Path) -> Self {
        Self {
            command,
            seed,
            out_dir: out_dir.to_path_buf(),
            arguments: Map::new(),
            inputs: Vec::new(),
            results: Vec::new(),
        }
    }

    pub fn argument(&mut self, key: &str, value: impl Into<Value>) {
        self.arguments.insert(key.into(), value.into());
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputRecord { path: path.display().to_string(), sha256 });
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is not UTF-8", path.display())))
    }

    pub fn result(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        let name = name.into();
        assert!(!self.results.iter().any(|(n, _)| *n == name), "duplicate result file {name}");
        self.results.push((name, contents.into()));
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", self.out_dir.display())))?;
        let manifest = RunManifest {
            command: self.command.into(),
            arguments: self.arguments,
            inputs: self.inputs,
            seed: self.seed,
            out_dir: self.out_dir.display().to_string(),
            version: env!("CARGO_PKG_VERSION").into(),
            results: self.results.iter().map(|(n, _)| n.clone()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(&self.out_dir, "manifest.json", &text)?;
        let mut written = Vec::with_capacity(self.results.len());
        for (name, contents) in &self.results {
            written.push(write_atomic(&self.out_dir, name, contents)?);
        }
        Ok(written)
    }
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let io = |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", target.display()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, &target).map_err(io)?;
    Ok(target)
}

/// `key,value` rows for a JSON summary, nested keys joined with dots.
pub fn flatten_csv(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(&join(k), v, out)),
            Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| walk(&join(&i.to_string()), v, out)),
            Value::String(s) => out.push((prefix.into(), s.clone())),
            Value::Null => out.push((prefix.into(), String::new())),
            other => out.push((prefix.into(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
