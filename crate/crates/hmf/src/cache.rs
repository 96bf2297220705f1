//! Expansion cache keyed by construction parameters. Entries are canonical
//! JSON files with a .sha256 sidecar; writes go through a temp file and an
//! atomic rename so a directory can be shared between processes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forms::Expansion;

/// Construction parameters identifying a cached expansion. `label` is set
/// for eigenforms, whose weight alone does not pin the form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub kind: String,
    pub d: i64,
    pub weight: i64,
    pub label: Option<String>,
    pub bound: i64,
}

impl CacheKey {
    pub fn eis(d: i64, weight: i64, bound: i64) -> CacheKey {
        CacheKey {
            kind: "eis".into(),
            d,
            weight,
            label: None,
            bound,
        }
    }

    pub fn eigenform(d: i64, weight: i64, label: &str, bound: i64) -> CacheKey {
        CacheKey {
            kind: "eigenform".into(),
            d,
            weight,
            label: Some(label.into()),
            bound,
        }
    }

    fn prefix(&self) -> String {
        match &self.label {
            Some(label) => format!("{}_d{}_k{}_{}_b", self.kind, self.d, self.weight, label),
            None => format!("{}_d{}_k{}_b", self.kind, self.d, self.weight),
        }
    }

    fn file_name(&self) -> String {
        format!("{}{}.json", self.prefix(), self.bound)
    }
}

pub struct Cache {
    dir: PathBuf,
}

fn digest_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Cache {
    pub fn at(dir: &Path) -> Result<Cache> {
        fs::create_dir_all(dir)?;
        Ok(Cache {
            dir: dir.to_path_buf(),
        })
    }

    /// Cache under --cache-dir when given, else under HMF_CACHE, else none.
    pub fn from_flag_or_env(flag: Option<&Path>) -> Result<Option<Cache>> {
        if let Some(dir) = flag {
            return Ok(Some(Cache::at(dir)?));
        }
        match std::env::var_os("HMF_CACHE") {
            Some(dir) => Ok(Some(Cache::at(Path::new(&dir))?)),
            None => Ok(None),
        }
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.persist(self.dir.join(name))
            .map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn put(&self, key: &CacheKey, exp: &Expansion) -> Result<()> {
        let bytes = exp.to_json();
        let name = key.file_name();
        self.write_atomic(&name, bytes.as_bytes())?;
        self.write_atomic(&format!("{name}.sha256"), digest_hex(bytes.as_bytes()).as_bytes())
    }

    /// Best stored entry for the key: exact parameter match with any bound
    /// at least the requested one, truncated down to it. A present entry
    /// whose digest or content does not check out is a corruption error;
    /// callers drop the entry and recompute.
    pub fn get(&self, key: &CacheKey) -> Result<Option<Expansion>> {
        let prefix = key.prefix();
        let mut best: Option<(i64, PathBuf)> = None;
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let Some(stem) = name.strip_suffix(".json") else {
                continue;
            };
            let Some(bound) = stem.strip_prefix(&prefix).and_then(|b| b.parse::<i64>().ok())
            else {
                continue;
            };
            if bound >= key.bound && best.as_ref().map_or(true, |(b, _)| bound > *b) {
                best = Some((bound, path));
            }
        }
        let Some((stored_bound, path)) = best else {
            return Ok(None);
        };
        let corrupt = || Error::CacheCorruption(path.display().to_string());
        let bytes = fs::read(&path)?;
        let sidecar = fs::read_to_string(path.with_extension("json.sha256"))
            .map_err(|_| corrupt())?;
        if digest_hex(&bytes) != sidecar.trim() {
            return Err(corrupt());
        }
        let text = String::from_utf8(bytes).map_err(|_| corrupt())?;
        let exp = Expansion::from_json(&text).map_err(|_| corrupt())?;
        if exp.ctx.d != key.d || exp.weight != key.weight || exp.bound != stored_bound {
            return Err(corrupt());
        }
        Ok(Some(exp.truncate(key.bound)?))
    }
}
