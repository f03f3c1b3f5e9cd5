//! Text to knowledge-graph extraction through an LLM.
//!
//! [`build_extraction_prompt`] renders the fixed construction prompt,
//! [`extract_graph_pair`] sends it through an [`LlmClient`], locates the JSON
//! object in the reply and converts both triple lists with
//! [`KnowledgeGraph::build`]. Unparseable replies are retried with the parse
//! error fed back to the model.

mod mock;
mod parse;
mod prompt;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kg::KnowledgeGraph;
use crate::provider::ProviderError;
use crate::sync::Semaphore;

pub use mock::{LlmFixtureFile, MockFallback, MockLlmClient, Responder};
pub use parse::{find_json_object, parse_response};
pub use prompt::{build_extraction_prompt, extraction_system_prompt};

pub const DEFAULT_RETRY_LIMIT: usize = 2;
pub const DEFAULT_REQUEST_CAP: usize = 4;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("first text must not be empty")]
    EmptyText,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("could not parse LLM response after {retries_used} retries: {reason}")]
    ParseFailed {
        retries_used: usize,
        reason: String,
        raw_response: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// A chat-completion request. Temperature is always zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmRequest {
    system_prompt: String,
    user_payload: String,
    temperature: f64,
    model_id: String,
    follow_ups: Vec<ChatMessage>,
}

impl LlmRequest {
    pub fn new(system_prompt: impl Into<String>, user_payload: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_payload: user_payload.into(),
            temperature: 0.0,
            model_id: model_id.into(),
            follow_ups: Vec::new(),
        }
    }

    pub fn system_prompt(&self) -> &str {
        &self.system_prompt
    }

    pub fn user_payload(&self) -> &str {
        &self.user_payload
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Messages appended after the initial user payload (retry feedback).
    pub fn follow_ups(&self) -> &[ChatMessage] {
        &self.follow_ups
    }

    pub fn push_follow_up(&mut self, message: ChatMessage) {
        self.follow_ups.push(message);
    }

    /// Full conversation: system, user, then any follow-ups.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut messages = vec![
            ChatMessage::new(Role::System, self.system_prompt.clone()),
            ChatMessage::new(Role::User, self.user_payload.clone()),
        ];
        messages.extend(self.follow_ups.iter().cloned());
        messages
    }

    /// Hex SHA-256 of the user payload, used to key fixtures.
    pub fn fingerprint(&self) -> String {
        payload_fingerprint(&self.user_payload)
    }
}

pub fn payload_fingerprint(payload: &str) -> String {
    hex::encode(Sha256::digest(payload.as_bytes()))
}

/// A chat-completion backend. Implementations must tolerate concurrent calls.
pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Arc<T> {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Wraps a client so that at most `cap` requests are in flight at once.
pub struct RequestCap<C> {
    inner: C,
    permits: Semaphore,
}

impl<C: LlmClient> RequestCap<C> {
    pub fn new(inner: C, cap: usize) -> Self {
        Self {
            inner,
            permits: Semaphore::new(cap),
        }
    }
}

impl<C: LlmClient> LlmClient for RequestCap<C> {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let _permit = self.permits.acquire();
        self.inner.complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    pub model_id: String,
    pub retry_limit: usize,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self {
            model_id: String::new(),
            retry_limit: DEFAULT_RETRY_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionResult {
    pub graph1: KnowledgeGraph,
    pub graph2: KnowledgeGraph,
    pub raw_response: String,
    pub retries_used: usize,
    pub warnings: Vec<String>,
}

/// Extracts one graph per text from a single LLM response. With an empty
/// `text2` the call runs in single-text mode and `graph2` is empty.
pub fn extract_graph_pair(
    text1: &str,
    text2: &str,
    client: &dyn LlmClient,
    options: &ExtractionOptions,
) -> Result<ExtractionResult, ExtractionError> {
    let single_text = text2.trim().is_empty();
    let mut request = build_extraction_prompt(text1, text2, &options.model_id)?;
    let mut retries_used = 0;
    loop {
        let raw_response = client.complete(&request)?;
        match parse_response(&raw_response, single_text) {
            Ok((graph1, graph2, warnings)) => {
                for w in &warnings {
                    log::warn!("extraction: {w}");
                }
                return Ok(ExtractionResult {
                    graph1,
                    graph2,
                    raw_response,
                    retries_used,
                    warnings,
                });
            }
            Err(reason) if retries_used >= options.retry_limit => {
                return Err(ExtractionError::ParseFailed {
                    retries_used,
                    reason,
                    raw_response,
                });
            }
            Err(reason) => {
                retries_used += 1;
                log::debug!("extraction parse failed ({reason}), retry {retries_used}");
                request.push_follow_up(ChatMessage::new(Role::Assistant, raw_response));
                request.push_follow_up(ChatMessage::new(
                    Role::User,
                    format!(
                        "Your previous response could not be parsed: {reason}. \
                         Respond with only the JSON object containing \
                         \"knowledge_graph1\" and \"knowledge_graph2\"."
                    ),
                ));
            }
        }
    }
}

/// Single-text extraction, returning only the first graph.
pub fn extract_graph(
    text: &str,
    client: &dyn LlmClient,
    options: &ExtractionOptions,
) -> Result<ExtractionResult, ExtractionError> {
    extract_graph_pair(text, "", client, options)
}
