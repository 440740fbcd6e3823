//! Content-addressed response cache.
//!
//! Keys are SHA-256 over (backend id, model, messages, decoding params). Only
//! raw response text is stored; scores are always re-parsed. With a directory
//! configured, each entry is one `<key>.json` file holding
//! `{request, response, timestamp}`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DecodingParams, JudgeError, JudgeRequest, Message};

pub fn cache_key(backend_id: &str, model: &str, messages: &[Message], params: &DecodingParams) -> String {
    let payload = serde_json::to_vec(&(backend_id, model, messages, params)).expect("request serializes");
    hex::encode(Sha256::digest(&payload))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedRequest {
    pub backend_id: String,
    pub model: String,
    pub messages: Vec<Message>,
    pub params: DecodingParams,
    /// Tag of the request that first populated the entry.
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: CachedRequest,
    pub response: String,
    pub timestamp: String,
}

/// In-memory map optionally backed by a directory. Reads run concurrently;
/// writes are serialized.
pub struct ResponseCache {
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, String>>,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            memory: RwLock::new(HashMap::new()),
            write_lock: Mutex::new(()),
        }
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> Result<Self, JudgeError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| JudgeError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: Some(dir),
            ..Self::in_memory()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn entry_path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Result<Option<String>, JudgeError> {
        if let Some(hit) = self.memory.read().expect("cache lock poisoned").get(key) {
            return Ok(Some(hit.clone()));
        }
        let Some(path) = self.entry_path(key) else {
            return Ok(None);
        };
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(JudgeError::Cache(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry = serde_json::from_slice(&bytes)
            .map_err(|e| JudgeError::Cache(format!("{}: {e}", path.display())))?;
        self.memory
            .write()
            .expect("cache lock poisoned")
            .insert(key.to_string(), entry.response.clone());
        Ok(Some(entry.response))
    }

    pub fn put(
        &self,
        key: &str,
        model: &str,
        request: &JudgeRequest,
        backend_id: &str,
        response: &str,
    ) -> Result<(), JudgeError> {
        let _w = self.write_lock.lock().expect("cache lock poisoned");
        if let Some(path) = self.entry_path(key) {
            let entry = CacheEntry {
                request: CachedRequest {
                    backend_id: backend_id.to_string(),
                    model: model.to_string(),
                    messages: request.messages.clone(),
                    params: request.params.clone(),
                    tag: request.tag.clone(),
                },
                response: response.to_string(),
                timestamp: chrono::Utc::now().to_rfc3339(),
            };
            let tmp = path.with_extension("json.tmp");
            let body = serde_json::to_vec_pretty(&entry).expect("cache entry serializes");
            fs::write(&tmp, body)
                .and_then(|_| fs::rename(&tmp, &path))
                .map_err(|e| JudgeError::Cache(format!("{}: {e}", path.display())))?;
        }
        self.memory
            .write()
            .expect("cache lock poisoned")
            .insert(key.to_string(), response.to_string());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.memory.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
