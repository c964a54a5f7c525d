//! `manifest.txt`: one line per artifact with its SHA-256 and size.
//!
//! The first line carries a generation timestamp and is the only line that
//! differs between reruns of the same config.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.txt";
pub const TIMESTAMP_PREFIX: &str = "# generated-unix-seconds: ";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the manifest for `files` (names relative to `dir`).
pub fn write_manifest(dir: &Path, files: &[String]) -> std::io::Result<()> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut out = format!("{TIMESTAMP_PREFIX}{stamp}\n");
    for name in files {
        let bytes = fs::read(dir.join(name))?;
        out.push_str(&format!("{}  {:>10}  {}\n", sha256_hex(&bytes), bytes.len(), name));
    }
    fs::write(dir.join(MANIFEST_NAME), out)
}

/// `(hash, name)` entries of a manifest, skipping comment lines.
pub fn read_manifest(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| {
            let mut parts = l.split_whitespace();
            let hash = parts.next()?;
            let _size = parts.next()?;
            Some((hash.to_string(), parts.next()?.to_string()))
        })
        .collect()
}
