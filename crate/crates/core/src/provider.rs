//! Errors shared by every external service abstraction (LLM, embeddings,
//! SPARQL, Wikipedia, entity linking).

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("provider timed out: {0}")]
    Timeout(String),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
    #[error("no fixture registered for {0}")]
    FixtureMissing(String),
}

impl ProviderError {
    /// Grounding treats timeouts as per-query failures rather than a dead
    /// endpoint.
    pub fn is_timeout(&self) -> bool {
        matches!(self, ProviderError::Timeout(_))
    }
}
