//! Content-addressed response cache.
//!
//! Entries live in memory and, when a directory is configured, as one JSON
//! file per key. Disk writes go through a temp file and a rename so readers
//! never observe a partial entry.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::template::TemplateId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub response: String,
    pub timestamp: u64,
}

pub fn cache_key(template: TemplateId, prompt: &str, model_id: &str, temperature: f64) -> String {
    let mut h = Sha256::new();
    for part in [
        template.as_str().as_bytes(),
        prompt.as_bytes(),
        model_id.as_bytes(),
        temperature.to_bits().to_le_bytes().as_slice(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    mem: RwLock<HashMap<String, CacheEntry>>,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir: Some(dir),
            ..Self::default()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn get(&self, key: &str) -> io::Result<Option<CacheEntry>> {
        if let Some(hit) = self.mem.read().expect("cache lock").get(key) {
            return Ok(Some(hit.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{key}.json"));
        match fs::read_to_string(&path) {
            Ok(text) => {
                let entry: CacheEntry = serde_json::from_str(&text)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                self.mem
                    .write()
                    .expect("cache lock")
                    .insert(key.to_string(), entry.clone());
                Ok(Some(entry))
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn put(&self, key: &str, response: &str) -> io::Result<CacheEntry> {
        let entry = CacheEntry {
            key: key.to_string(),
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let _guard = self.write_lock.lock().expect("cache write lock");
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.json"));
            let tmp = dir.join(format!(".{key}.tmp"));
            fs::write(&tmp, serde_json::to_vec(&entry)?)?;
            fs::rename(&tmp, &path)?;
        }
        self.mem
            .write()
            .expect("cache lock")
            .insert(key.to_string(), entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.mem.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
