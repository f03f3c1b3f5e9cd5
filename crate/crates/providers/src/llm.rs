//! OpenAI-compatible chat completions.

use std::time::Duration;

use kea_core::extraction::{LlmClient, LlmRequest, Role};
use kea_core::provider::ProviderError;
use serde_json::{json, Value};

use crate::http::{agent, env_or, map_error, parse_json, read_body};

pub const DEFAULT_CHAT_URL: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_CHAT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl ChatConfig {
    /// `KEA_LLM_ENDPOINT`, `KEA_LLM_MODEL`, `KEA_LLM_KEY`.
    pub fn from_env() -> Self {
        Self {
            endpoint: env_or("KEA_LLM_ENDPOINT", DEFAULT_CHAT_URL),
            model: env_or("KEA_LLM_MODEL", DEFAULT_CHAT_MODEL),
            api_key: std::env::var("KEA_LLM_KEY").ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(120),
        }
    }
}

pub struct ChatClient {
    config: ChatConfig,
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> Self {
        let agent = agent(config.timeout);
        Self { config, agent }
    }

    pub fn model(&self) -> &str {
        &self.config.model
    }
}

pub fn chat_body(request: &LlmRequest, default_model: &str) -> Value {
    let model = if request.model_id().is_empty() {
        default_model
    } else {
        request.model_id()
    };
    let messages: Vec<Value> = request
        .messages()
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            json!({"role": role, "content": m.content})
        })
        .collect();
    json!({"model": model, "temperature": request.temperature(), "messages": messages})
}

pub fn chat_content(url: &str, response: &Value) -> Result<String, ProviderError> {
    response
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| ProviderError::InvalidResponse(format!("{url}: no choices[0].message.content")))
}

impl LlmClient for ChatClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let url = &self.config.endpoint;
        let mut builder = self.agent.post(url);
        if let Some(key) = &self.config.api_key {
            builder = builder.header("Authorization", format!("Bearer {key}"));
        }
        let response = builder
            .send_json(chat_body(request, &self.config.model))
            .map_err(|e| map_error(url, e))?;
        let body = read_body(url, response)?;
        chat_content(url, &parse_json(url, &body)?)
    }
}
