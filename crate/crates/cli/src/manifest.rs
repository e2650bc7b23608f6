//! Run manifests written next to every output.
//!
//! Inputs are identified by content hash. The `digest` covers everything
//! except `paths` and `timings_ms`, so two runs on the same inputs agree on
//! it wherever they live and however long they took.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rava_core::annotation::to_canonical_json;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn content_hash(path: &Path) -> String {
    if path.is_dir() {
        let mut entries: Vec<(String, String)> = std::fs::read_dir(path)
            .into_iter()
            .flatten()
            .flatten()
            .filter(|e| e.path().is_file())
            .map(|e| {
                let bytes = std::fs::read(e.path()).unwrap_or_default();
                (e.file_name().to_string_lossy().into_owned(), sha256_hex(&bytes))
            })
            .collect();
        entries.sort();
        let listing: String = entries.iter().map(|(n, h)| format!("{h}  {n}\n")).collect();
        sha256_hex(listing.as_bytes())
    } else {
        // Unreadable inputs fail later with a proper error; hash nothing here.
        sha256_hex(&std::fs::read(path).unwrap_or_default())
    }
}

#[derive(Debug, Serialize)]
struct Hashed<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    inputs: &'a BTreeMap<String, String>,
    config: &'a Value,
    outputs: &'a BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct Written<'a> {
    #[serde(flatten)]
    hashed: Hashed<'a>,
    digest: String,
    paths: &'a BTreeMap<String, String>,
    timings_ms: &'a BTreeMap<String, u64>,
}

#[derive(Debug)]
pub struct RunManifest {
    command: String,
    inputs: BTreeMap<String, String>,
    paths: BTreeMap<String, String>,
    config: Value,
    outputs: BTreeMap<String, String>,
    timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            inputs: BTreeMap::new(),
            paths: BTreeMap::new(),
            config: Value::Object(Default::default()),
            outputs: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Records an input file or directory by content hash. A directory
    /// hashes its sorted (file name, file hash) pairs, one level deep.
    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), content_hash(path));
        self.paths.insert(name.into(), path.display().to_string());
    }

    pub fn config(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("config serializes");
        if let Value::Object(map) = &mut self.config {
            map.insert(name.into(), v);
        }
    }

    /// Records an output file by its name relative to the manifest and the
    /// hash of its bytes.
    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.insert(name.into(), sha256_hex(bytes));
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timing(stage, t0);
        out
    }

    pub fn timing(&mut self, stage: &str, since: Instant) {
        self.timings_ms
            .insert(stage.into(), since.elapsed().as_millis() as u64);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let hashed = Hashed {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            inputs: &self.inputs,
            config: &self.config,
            outputs: &self.outputs,
        };
        let digest = sha256_hex(&to_canonical_json(&hashed));
        to_canonical_json(&Written {
            hashed,
            digest,
            paths: &self.paths,
            timings_ms: &self.timings_ms,
        })
    }
}
