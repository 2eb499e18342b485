//! Content-addressed on-disk response cache: one file per key under a
//! two-hex-prefix fan-out, holding the request echo and the response text.
//! Writes go through a temp file plus rename so concurrent readers never see
//! a partial entry.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, CacheKey, GenerationRequest, GenerationResponse};

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    request: GenerationRequest,
    backend_id: String,
    text: String,
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    root: PathBuf,
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DiskCache { root: root.into() }
    }

    fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.root.join(&key.0[..2]).join(format!("{}.json", key.0))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<String>, BackendError> {
        let path = self.path_for(key);
        match fs::read_to_string(&path) {
            Ok(raw) => {
                let entry: CacheEntry = serde_json::from_str(&raw)
                    .map_err(|e| BackendError::CacheIo(format!("{}: {e}", path.display())))?;
                Ok(Some(entry.text))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(BackendError::CacheIo(format!("{}: {e}", path.display()))),
        }
    }

    pub fn put(
        &self,
        key: &CacheKey,
        backend_id: &str,
        request: &GenerationRequest,
        text: &str,
    ) -> Result<(), BackendError> {
        let path = self.path_for(key);
        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir).map_err(|e| BackendError::CacheIo(e.to_string()))?;
        let entry = CacheEntry {
            request: request.clone(),
            backend_id: backend_id.to_string(),
            text: text.to_string(),
        };
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec_pretty(&entry).expect("serializable entry"))
            .map_err(|e| BackendError::CacheIo(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| BackendError::CacheIo(e.to_string()))?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

/// Wraps any backend with the disk cache: identical requests after a warm
/// cache return the stored text byte-for-byte without touching the inner
/// backend.
pub struct CachedBackend<B> {
    inner: B,
    cache: DiskCache,
}

impl<B: Backend> CachedBackend<B> {
    pub fn new(inner: B, cache: DiskCache) -> Self {
        CachedBackend { inner, cache }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: Backend> Backend for CachedBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let key = CacheKey::for_request(self.inner.id(), request);
        if let Some(text) = self.cache.get(&key)? {
            return Ok(GenerationResponse { text, cached: true, latency_ms: 0, attempt_count: 0 });
        }
        let response = self.inner.generate(request)?;
        self.cache.put(&key, self.inner.id(), request, &response.text)?;
        Ok(response)
    }

    fn call_count(&self) -> u64 {
        self.inner.call_count()
    }
}
