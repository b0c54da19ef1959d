use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key_hash: String,
    pub schema_id: String,
    pub prompt_version: String,
    pub payload: Value,
    pub timestamp: i64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Key over (schema, prompt content hash, model, prompt version).
pub fn cache_key(schema_id: &str, prompt: &str, model: &str, prompt_version: &str) -> String {
    let prompt_hash = sha256_hex(prompt.as_bytes());
    sha256_hex(format!("{schema_id}\0{prompt_hash}\0{model}\0{prompt_version}").as_bytes())
}

/// Append-only store of validated responses, one JSON record per line.
/// Lookups take a shared lock; appends are serialized.
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheEntry>>,
    writer: Mutex<Option<File>>,
}

impl ResponseCache {
    pub const FILE_NAME: &'static str = "responses.jsonl";

    pub fn in_memory() -> Self {
        ResponseCache { path: None, entries: RwLock::new(HashMap::new()), writer: Mutex::new(None) }
    }

    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(Self::FILE_NAME);
        let mut entries = HashMap::new();
        if path.exists() {
            for (idx, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(e) => {
                        entries.insert(e.key_hash.clone(), e);
                    }
                    // A torn final line from an interrupted run.
                    Err(err) => log::warn!("{}:{}: skipping cache line: {err}", path.display(), idx + 1),
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        let len = file.metadata()?.len();
        if len > 0 {
            let bytes = fs::read(&path)?;
            if bytes.last() != Some(&b'\n') {
                file.write_all(b"\n")?;
            }
        }
        Ok(ResponseCache { path: Some(path), entries: RwLock::new(entries), writer: Mutex::new(Some(file)) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key_hash: &str) -> Option<Value> {
        self.entries.read().unwrap().get(key_hash).map(|e| e.payload.clone())
    }

    pub fn put(&self, entry: CacheEntry) -> io::Result<()> {
        let mut writer = self.writer.lock().unwrap();
        if self.entries.read().unwrap().contains_key(&entry.key_hash) {
            return Ok(());
        }
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_vec(&entry)?;
            line.push(b'\n');
            file.write_all(&line)?;
            file.flush()?;
        }
        self.entries.write().unwrap().insert(entry.key_hash.clone(), entry);
        Ok(())
    }
}
