//! OpenAI-compatible embeddings endpoint.

use std::time::Duration;

use kea_core::provider::ProviderError;
use kea_core::semantics::Embedder;
use serde_json::{json, Value};

use crate::http::{agent, env_or, map_error, parse_json, read_body};

pub const DEFAULT_EMBEDDINGS_URL: &str = "https://api.openai.com/v1/embeddings";
pub const DEFAULT_EMBEDDINGS_MODEL: &str = "text-embedding-3-small";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingsConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl EmbeddingsConfig {
    /// `KEA_EMB_ENDPOINT`, `KEA_EMB_MODEL`, `KEA_EMB_KEY`.
    pub fn from_env() -> Self {
        Self {
            endpoint: env_or("KEA_EMB_ENDPOINT", DEFAULT_EMBEDDINGS_URL),
            model: env_or("KEA_EMB_MODEL", DEFAULT_EMBEDDINGS_MODEL),
            api_key: std::env::var("KEA_EMB_KEY").ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(60),
        }
    }
}

pub struct EmbeddingsClient {
    config: EmbeddingsConfig,
    id: String,
    agent: ureq::Agent,
}

impl EmbeddingsClient {
    pub fn new(config: EmbeddingsConfig) -> Self {
        let id = format!("http:{}", config.model);
        let agent = agent(config.timeout);
        Self { config, id, agent }
    }
}

/// Vectors from a `data: [{index, embedding}]` response, in input order.
pub fn parse_embeddings(url: &str, response: &Value, expected: usize) -> Result<Vec<Vec<f64>>, ProviderError> {
    let invalid = |m: &str| ProviderError::InvalidResponse(format!("{url}: {m}"));
    let data = response
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("no data array"))?;
    let mut rows: Vec<(usize, Vec<f64>)> = data
        .iter()
        .enumerate()
        .map(|(pos, item)| {
            let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let vector = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| invalid("item without embedding"))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| invalid("non-numeric component")))
                .collect::<Result<Vec<f64>, _>>()?;
            Ok((index, vector))
        })
        .collect::<Result<_, ProviderError>>()?;
    rows.sort_by_key(|(i, _)| *i);
    if rows.len() != expected || rows.iter().enumerate().any(|(i, (j, _))| i != *j) {
        return Err(invalid(&format!(
            "expected {expected} embeddings with indices 0..{expected}"
        )));
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}

impl Embedder for EmbeddingsClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let url = &self.config.endpoint;
        let mut builder = self.agent.post(url);
        if let Some(key) = &self.config.api_key {
            builder = builder.header("Authorization", format!("Bearer {key}"));
        }
        let response = builder
            .send_json(json!({"model": self.config.model, "input": texts}))
            .map_err(|e| map_error(url, e))?;
        let body = read_body(url, response)?;
        parse_embeddings(url, &parse_json(url, &body)?, texts.len())
    }
}
