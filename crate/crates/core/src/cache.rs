//! Content-addressed response cache, optionally persisted to disk.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

pub const CACHE_DIR_ENV: &str = "KEA_CACHE_DIR";

/// Responses keyed by the SHA-256 of `namespace` and query text. Access to
/// one key is serialized so concurrent misses for the same query run the
/// producer once.
#[derive(Debug, Default)]
pub struct ResponseCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, String>>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    writes: AtomicU64,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn on_disk(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir: Some(dir),
            ..Self::default()
        })
    }

    /// Disk cache at `$KEA_CACHE_DIR`, if set.
    pub fn from_env() -> std::io::Result<Option<Self>> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::on_disk(PathBuf::from(dir)).map(Some),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(namespace: &str, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(namespace.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn file(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.cache")))
    }

    fn lock_for(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("cache lock table poisoned");
        locks.entry(key.to_owned()).or_default().clone()
    }

    fn lookup(&self, key: &str) -> Option<String> {
        if let Some(v) = self.memory.lock().expect("cache poisoned").get(key) {
            return Some(v.clone());
        }
        let path = self.file(key)?;
        let value = fs::read_to_string(path).ok()?;
        self.memory
            .lock()
            .expect("cache poisoned")
            .insert(key.to_owned(), value.clone());
        Some(value)
    }

    fn store(&self, key: &str, value: &str) {
        self.memory
            .lock()
            .expect("cache poisoned")
            .insert(key.to_owned(), value.to_owned());
        self.writes.fetch_add(1, Ordering::Relaxed);
        if let Some(path) = self.file(key) {
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            let result = fs::write(&tmp, value).and_then(|_| fs::rename(&tmp, &path));
            if let Err(e) = result {
                log::warn!("cache write to {} failed: {e}", path.display());
                let _ = fs::remove_file(&tmp);
            }
        }
    }

    pub fn get(&self, namespace: &str, text: &str) -> Option<String> {
        let key = Self::key(namespace, text);
        let lock = self.lock_for(&key);
        let _guard = lock.lock().expect("cache key lock poisoned");
        self.lookup(&key)
    }

    pub fn put(&self, namespace: &str, text: &str, value: &str) {
        let key = Self::key(namespace, text);
        let lock = self.lock_for(&key);
        let _guard = lock.lock().expect("cache key lock poisoned");
        self.store(&key, value);
    }

    /// Returns the cached value or runs `produce` under the key lock and
    /// stores its success.
    pub fn get_or_try_insert<E>(
        &self,
        namespace: &str,
        text: &str,
        produce: impl FnOnce() -> Result<String, E>,
    ) -> Result<String, E> {
        let key = Self::key(namespace, text);
        let lock = self.lock_for(&key);
        let _guard = lock.lock().expect("cache key lock poisoned");
        if let Some(v) = self.lookup(&key) {
            return Ok(v);
        }
        let value = produce()?;
        self.store(&key, &value);
        Ok(value)
    }

    /// Number of stores performed by this handle.
    pub fn writes(&self) -> u64 {
        self.writes.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn memory_round_trip() {
        let c = ResponseCache::in_memory();
        assert_eq!(c.get("ns", "q"), None);
        c.put("ns", "q", "v");
        assert_eq!(c.get("ns", "q").as_deref(), Some("v"));
        assert_eq!(c.get("other", "q"), None);
    }

    #[test]
    fn disk_persists_across_handles() {
        let dir = tempfile::tempdir().unwrap();
        ResponseCache::on_disk(dir.path()).unwrap().put("ns", "q", "stored");
        let again = ResponseCache::on_disk(dir.path()).unwrap();
        assert_eq!(again.get("ns", "q").as_deref(), Some("stored"));
    }

    #[test]
    fn failures_are_not_cached() {
        let c = ResponseCache::in_memory();
        let r: Result<String, &str> = c.get_or_try_insert("ns", "q", || Err("boom"));
        assert!(r.is_err());
        let r: Result<String, &str> = c.get_or_try_insert("ns", "q", || Ok("ok".into()));
        assert_eq!(r.unwrap(), "ok");
    }

    #[test]
    fn concurrent_misses_produce_once() {
        let c = ResponseCache::in_memory();
        let calls = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let v: Result<String, ()> = c.get_or_try_insert("ns", "same", || {
                        calls.fetch_add(1, Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(5));
                        Ok("v".into())
                    });
                    assert_eq!(v.unwrap(), "v");
                });
            }
        });
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }
}
