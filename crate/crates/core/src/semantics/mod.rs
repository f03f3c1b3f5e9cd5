//! Embeddings, cosine similarity, relation selection and label clustering.
//!
//! Every embedding-dependent operation goes through an [`EmbeddingService`],
//! which batches provider calls, caches vectors per `(provider id, text)` and
//! enforces a constant dimension.

mod cluster;
mod embedders;
mod select;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{KgError, Triple};
use crate::provider::ProviderError;

pub use cluster::{cluster_labels, cosine_distance, relabel_graphs, LabelClustering, DEFAULT_CLUSTER_DISTANCE};
pub use embedders::{HashEmbedder, TableEmbedder, HASH_EMBEDDER_DIM, HASH_EMBEDDER_ID};
pub use select::{select_relations, Selection};

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("cannot embed an empty text")]
    EmptyText,
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("provider returned {found} vectors for {expected} texts")]
    CountMismatch { expected: usize, found: usize },
    #[error("embedding contains non-finite values")]
    NonFinite,
    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,
    #[error("label clustering needs at least one label")]
    NoLabels,
    #[error("label {0:?} is missing from the clustering")]
    MissingLabel(String),
    #[error(transparent)]
    Graph(#[from] KgError),
}

/// A dense, finite, non-empty embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SemanticsError> {
        if values.is_empty() {
            return Err(SemanticsError::DimensionMismatch { expected: 1, found: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SemanticsError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, SemanticsError> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = SemanticsError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Cosine similarity clamped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn new(value: f64) -> Self {
        Self(value.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<SimilarityScore, SemanticsError> {
    if a.dim() != b.dim() {
        return Err(SemanticsError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(SemanticsError::ZeroVector);
    }
    let dot: f64 = a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum();
    Ok(SimilarityScore::new(dot / (na * nb)))
}

/// `"head relation tail"`, labels verbatim.
pub fn triple_sentence(t: &Triple) -> String {
    format!("{} {} {}", t.head(), t.relation(), t.tail())
}

/// A raw embedding backend. Implementations must be safe for concurrent
/// batched calls.
pub trait Embedder: Send + Sync {
    /// Stable identifier; part of the cache key.
    fn id(&self) -> &str;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        (**self).embed_batch(texts)
    }
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        (**self).embed_batch(texts)
    }
}

/// Batching, caching front end over an [`Embedder`].
pub struct EmbeddingService {
    provider: Arc<dyn Embedder>,
    batch_size: usize,
    cache: Mutex<HashMap<(String, String), EmbeddingVector>>,
    dim: Mutex<Option<usize>>,
}

impl EmbeddingService {
    pub fn new(provider: Arc<dyn Embedder>) -> Self {
        Self::with_batch_size(provider, DEFAULT_BATCH_SIZE)
    }

    pub fn with_batch_size(provider: Arc<dyn Embedder>, batch_size: usize) -> Self {
        Self {
            provider,
            batch_size: batch_size.max(1),
            cache: Mutex::new(HashMap::new()),
            dim: Mutex::new(None),
        }
    }

    /// The offline `hash64` embedder behind a service.
    pub fn hash64() -> Self {
        Self::new(Arc::new(HashEmbedder::new()))
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    fn check_dim(&self, found: usize) -> Result<(), SemanticsError> {
        let mut dim = self.dim.lock().unwrap_or_else(|e| e.into_inner());
        match *dim {
            Some(expected) if expected != found => Err(SemanticsError::DimensionMismatch { expected, found }),
            Some(_) => Ok(()),
            None => {
                *dim = Some(found);
                Ok(())
            }
        }
    }

    /// One vector per text, in order. Cache misses are deduplicated and sent
    /// to the provider in batches of at most `batch_size`.
    pub fn embed_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<EmbeddingVector>, SemanticsError> {
        if texts.iter().any(|t| t.as_ref().trim().is_empty()) {
            return Err(SemanticsError::EmptyText);
        }
        let id = self.provider.id().to_owned();
        let mut missing: Vec<&str> = Vec::new();
        {
            let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            for text in texts {
                let text = text.as_ref();
                if !cache.contains_key(&(id.clone(), text.to_owned())) && !missing.contains(&text) {
                    missing.push(text);
                }
            }
        }
        for chunk in missing.chunks(self.batch_size) {
            let raw = self.provider.embed_batch(chunk)?;
            if raw.len() != chunk.len() {
                return Err(SemanticsError::CountMismatch {
                    expected: chunk.len(),
                    found: raw.len(),
                });
            }
            let mut fresh = Vec::with_capacity(chunk.len());
            for (text, values) in chunk.iter().zip(raw) {
                self.check_dim(values.len())?;
                fresh.push(((id.clone(), (*text).to_owned()), EmbeddingVector::new(values)?));
            }
            self.cache.lock().unwrap_or_else(|e| e.into_inner()).extend(fresh);
        }
        let cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        Ok(texts
            .iter()
            .map(|t| cache[&(id.clone(), t.as_ref().to_owned())].clone())
            .collect())
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector, SemanticsError> {
        Ok(self.embed_texts(&[text])?.remove(0))
    }
}

/// Free-function form of [`EmbeddingService::embed_texts`].
pub fn embed_texts<S: AsRef<str>>(
    texts: &[S],
    service: &EmbeddingService,
) -> Result<Vec<EmbeddingVector>, SemanticsError> {
    service.embed_texts(texts)
}
