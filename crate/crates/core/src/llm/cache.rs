use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LlmError, LlmParams};
use crate::prompting::Prompt;

const KEY_DOMAIN: &[u8] = b"tsat-response-v1";

/// Hex SHA-256 over model name, temperature, trial index and prompt bytes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn new(model: &str, temperature: f64, prompt: &[u8], trial_index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(KEY_DOMAIN);
        h.update((model.len() as u64).to_le_bytes());
        h.update(model.as_bytes());
        h.update(temperature.to_bits().to_le_bytes());
        h.update(trial_index.to_le_bytes());
        h.update(prompt);
        Self(hex::encode(h.finalize()))
    }

    pub fn for_prompt(prompt: &Prompt, params: &LlmParams, trial_index: u64) -> Self {
        Self::new(&params.model, params.temperature, &prompt.bytes(), trial_index)
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    model: String,
    temperature: f64,
    trial_index: u64,
    response: String,
}

/// One JSON file per key under a directory. Entries that cannot be read
/// or do not match their key are treated as absent.
#[derive(Clone, Debug)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LlmError::Cache {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.0))
    }

    pub fn get(&self, key: &CacheKey) -> Option<String> {
        let path = self.path(key);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice::<Entry>(&bytes) {
            Ok(e) if e.key == key.0 => Some(e.response),
            _ => {
                log::warn!("ignoring unreadable cache entry {}", path.display());
                None
            }
        }
    }

    /// Writes to a temporary file in the cache directory and renames it
    /// over the final path, so readers never see a partial entry.
    pub fn put(&self, key: &CacheKey, params: &LlmParams, trial_index: u64, response: &str) -> Result<(), LlmError> {
        let entry = Entry {
            key: key.0.clone(),
            model: params.model.clone(),
            temperature: params.temperature,
            trial_index,
            response: response.to_string(),
        };
        let path = self.path(key);
        let io = |source| LlmError::Cache {
            path: path.clone(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(&serde_json::to_vec_pretty(&entry).expect("entry serializes"))
            .map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_field() {
        let base = CacheKey::new("m", 0.7, b"p", 1);
        assert_eq!(base, CacheKey::new("m", 0.7, b"p", 1));
        assert_ne!(base, CacheKey::new("n", 0.7, b"p", 1));
        assert_ne!(base, CacheKey::new("m", 0.5, b"p", 1));
        assert_ne!(base, CacheKey::new("m", 0.7, b"q", 1));
        assert_ne!(base, CacheKey::new("m", 0.7, b"p", 2));
        assert_eq!(base.0.len(), 64);
    }

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let params = LlmParams::default();
        let key = CacheKey::new("m", 0.7, b"p", 1);
        assert_eq!(cache.get(&key), None);
        cache.put(&key, &params, 1, "hello\n```x```").unwrap();
        assert_eq!(cache.get(&key).as_deref(), Some("hello\n```x```"));
        fs::write(cache.path(&key), b"{ not json").unwrap();
        assert_eq!(cache.get(&key), None);
        // An entry stored under the wrong name is not trusted.
        let other = CacheKey::new("m", 0.7, b"p", 2);
        cache.put(&other, &params, 2, "x").unwrap();
        fs::copy(cache.path(&other), cache.path(&key)).unwrap();
        assert_eq!(cache.get(&key), None);
    }
}
