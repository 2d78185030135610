//! Run directories, CSV text, content hashes and atomic writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nlpm_core::grid::Field;
use sha2::{Digest, Sha256};

/// Marker written first into every run directory.
pub const MARKER: &str = ".nlpm-run";
pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of a float slice by its exact bit patterns.
pub fn hash_f64s(xs: &[f64]) -> String {
    let mut h = Sha256::new();
    for x in xs {
        h.update(x.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Shortest text that parses back to the same float.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        "nan".into()
    }
}

pub fn field_csv(f: &Field, tag: &str) -> String {
    let mut s = format!("x,{tag}\n");
    for (i, v) in f.values.iter().enumerate() {
        s.push_str(&num(f.grid.x(i)));
        s.push(',');
        s.push_str(&num(*v));
        s.push('\n');
    }
    s
}

/// CSV with the given header and rows of already formatted cells.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// A run directory that records the hash of every file written into it.
pub struct RunDir {
    pub root: PathBuf,
    pub files: BTreeMap<String, String>,
}

impl RunDir {
    /// Creates `root`, clearing it first if it holds an earlier run.
    /// Refuses to clear a non-empty directory that is not a run.
    pub fn create(root: &Path) -> Result<Self> {
        if root.exists() {
            let is_run = root.join(MARKER).exists() || root.join(MANIFEST).exists();
            let empty = fs::read_dir(root)?.next().is_none();
            if !is_run && !empty {
                bail!("{} exists and is not a run directory; refusing to overwrite it", root.display());
            }
            // manifest first, so an interrupted clear still reads as incomplete
            let _ = fs::remove_file(root.join(MANIFEST));
            fs::remove_dir_all(root)?;
        }
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        fs::write(root.join(MARKER), b"")?;
        Ok(Self { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_manifest(&self, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(MANIFEST), bytes)
    }
}

/// Reads a manifest; a directory without one is an incomplete run.
pub fn read_manifest(dir: &Path) -> Result<serde_json::Value> {
    let p = dir.join(MANIFEST);
    if !p.exists() {
        bail!("{} has no {MANIFEST}: the run is incomplete or was interrupted", dir.display());
    }
    let text = fs::read_to_string(&p)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn run_dir_refuses_foreign_directories() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("precious.txt"), "keep").unwrap();
        assert!(RunDir::create(tmp.path()).is_err());
        assert!(tmp.path().join("precious.txt").exists());
    }

    #[test]
    fn run_dir_replaces_an_earlier_run() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("run");
        let mut d = RunDir::create(&root).unwrap();
        d.write("a/old.csv", b"1").unwrap();
        d.write_manifest(b"{}").unwrap();
        let d = RunDir::create(&root).unwrap();
        assert!(!root.join("a/old.csv").exists());
        assert!(d.files.is_empty());
        assert!(read_manifest(&root).is_err());
    }
}
