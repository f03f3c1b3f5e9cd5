use std::sync::Arc;
use std::time::Duration;

use super::{SparqlEndpoint, WikipediaClient};
use crate::cache::ResponseCache;
use crate::provider::ProviderError;

/// Serves SPARQL responses from a cache keyed by endpoint id and query
/// text. Only successful responses are stored.
pub struct CachingEndpoint<E> {
    inner: E,
    cache: Arc<ResponseCache>,
    namespace: String,
}

impl<E: SparqlEndpoint> CachingEndpoint<E> {
    pub fn new(inner: E, cache: Arc<ResponseCache>) -> Self {
        let namespace = format!("sparql:{}", inner.id());
        Self {
            inner,
            cache,
            namespace,
        }
    }
}

impl<E: SparqlEndpoint> SparqlEndpoint for CachingEndpoint<E> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn query(&self, query: &str, timeout: Duration) -> Result<String, ProviderError> {
        self.cache
            .get_or_try_insert(&self.namespace, query, || self.inner.query(query, timeout))
    }
}

pub struct CachingWikipedia<W> {
    inner: W,
    cache: Arc<ResponseCache>,
}

impl<W: WikipediaClient> CachingWikipedia<W> {
    pub fn new(inner: W, cache: Arc<ResponseCache>) -> Self {
        Self { inner, cache }
    }
}

impl<W: WikipediaClient> WikipediaClient for CachingWikipedia<W> {
    fn summary(&self, title: &str) -> Result<Option<String>, ProviderError> {
        let raw = self.cache.get_or_try_insert("wikipedia", title, || {
            let summary = self.inner.summary(title)?;
            serde_json::to_string(&summary).map_err(|e| ProviderError::InvalidResponse(e.to_string()))
        })?;
        serde_json::from_str(&raw).map_err(|e| ProviderError::InvalidResponse(format!("cached summary: {e}")))
    }
}
