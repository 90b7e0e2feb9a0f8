//! Run manifest: resolved configuration, seed, timestamps and output checksums.
//!
//! Stored as `manifest.txt` in the output directory:
//!
//! ```text
//! # hhg run manifest
//! version = 0.1.0
//! master_seed = 7
//! config_sha256 = ...
//! started = 1760000000
//! finished = 1760000042
//! [outputs]
//! records.bin = <sha256>
//! [config]
//! <rendered configuration>
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    pub config_sha256: String,
    pub started: u64,
    pub finished: u64,
    /// File name (relative to the output directory) to sha256.
    pub outputs: BTreeMap<String, String>,
    pub config: String,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::from("# hhg run manifest\n");
        s += &format!("version = {}\n", self.version);
        s += &format!("master_seed = {}\n", self.master_seed);
        s += &format!("config_sha256 = {}\n", self.config_sha256);
        s += &format!("started = {}\n", self.started);
        s += &format!("finished = {}\n", self.finished);
        s += "[outputs]\n";
        for (name, sum) in &self.outputs {
            s += &format!("{name} = {sum}\n");
        }
        s += "[config]\n";
        s += &self.config;
        s
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut m = Manifest::default();
        let mut section = "";
        let mut config = String::new();
        for line in text.lines() {
            if section == "config" {
                config.push_str(line);
                config.push('\n');
                continue;
            }
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[outputs]" => section = "outputs",
                "[config]" => section = "config",
                _ => {
                    let (k, v) = line.split_once('=')?;
                    let (k, v) = (k.trim(), v.trim());
                    match (section, k) {
                        ("outputs", _) => {
                            m.outputs.insert(k.to_string(), v.to_string());
                        }
                        (_, "version") => m.version = v.to_string(),
                        (_, "master_seed") => m.master_seed = v.parse().ok()?,
                        (_, "config_sha256") => m.config_sha256 = v.to_string(),
                        (_, "started") => m.started = v.parse().ok()?,
                        (_, "finished") => m.finished = v.parse().ok()?,
                        _ => return None,
                    }
                }
            }
        }
        m.config = config;
        Some(m)
    }

    /// Existing manifest in `dir`, if present and readable.
    pub fn load(dir: &Path) -> Option<Self> {
        Self::parse(&fs::read_to_string(dir.join(FILE_NAME)).ok()?)
    }

    pub fn store(&self, dir: &Path) -> io::Result<()> {
        fs::write(dir.join(FILE_NAME), self.render())
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
