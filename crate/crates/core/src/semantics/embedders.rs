//! Offline embedders: a hashed bag-of-features embedder and a lookup table.

use std::collections::HashMap;
use std::sync::Arc;

use super::Embedder;
use crate::provider::ProviderError;

pub const HASH_EMBEDDER_ID: &str = "hash64";
pub const HASH_EMBEDDER_DIM: usize = 64;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Deterministic 64-dimensional embedder. Each lowercase word contributes
/// one word feature plus one feature per character trigram; features are
/// hashed into buckets with FNV-1a. Texts without any alphanumeric word hash
/// as a single feature so the vector is never zero.
#[derive(Debug, Clone, Default)]
pub struct HashEmbedder;

impl HashEmbedder {
    pub fn new() -> Self {
        Self
    }

    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; HASH_EMBEDDER_DIM];
        let mut bump = |feature: &[u8]| {
            v[(fnv1a(feature) % HASH_EMBEDDER_DIM as u64) as usize] += 1.0;
        };
        let lower = text.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            bump(text.as_bytes());
        }
        for word in words {
            bump(format!("w:{word}").as_bytes());
            let chars: Vec<char> = word.chars().collect();
            for tri in chars.windows(3) {
                let gram: String = tri.iter().collect();
                bump(format!("g:{gram}").as_bytes());
            }
        }
        v
    }
}

impl Embedder for HashEmbedder {
    fn id(&self) -> &str {
        HASH_EMBEDDER_ID
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}

/// Fixed text → vector table with optional aliases and fallback embedder.
#[derive(Clone)]
pub struct TableEmbedder {
    id: String,
    vectors: HashMap<String, Vec<f64>>,
    aliases: HashMap<String, String>,
    fallback: Option<Arc<dyn Embedder>>,
}

impl TableEmbedder {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            vectors: HashMap::new(),
            aliases: HashMap::new(),
            fallback: None,
        }
    }

    /// A table that defers unknown texts to the hash embedder.
    pub fn over_hash(id: impl Into<String>) -> Self {
        Self::new(id).with_fallback(Arc::new(HashEmbedder::new()))
    }

    pub fn with_fallback(mut self, fallback: Arc<dyn Embedder>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn with_vector(mut self, text: impl Into<String>, vector: Vec<f64>) -> Self {
        self.vectors.insert(text.into(), vector);
        self
    }

    /// Embeds `text` exactly as `target` would be embedded.
    pub fn with_alias(mut self, text: impl Into<String>, target: impl Into<String>) -> Self {
        self.aliases.insert(text.into(), target.into());
        self
    }

    fn lookup(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let text = self.aliases.get(text).map(String::as_str).unwrap_or(text);
        if let Some(v) = self.vectors.get(text) {
            return Ok(v.clone());
        }
        match &self.fallback {
            Some(f) => Ok(f.embed_batch(&[text])?.remove(0)),
            None => Err(ProviderError::FixtureMissing(format!("embedding for {text:?}"))),
        }
    }
}

impl Embedder for TableEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts.iter().map(|t| self.lookup(t)).collect()
    }
}
