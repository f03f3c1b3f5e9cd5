//! Deterministic fixture-backed LLM client for offline runs.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{payload_fingerprint, LlmClient, LlmRequest};
use crate::provider::ProviderError;

pub type Responder = Arc<dyn Fn(&LlmRequest) -> String + Send + Sync>;

/// What a [`MockLlmClient`] does with a payload it has no fixture for.
#[derive(Clone)]
pub enum MockFallback {
    /// Fail with [`ProviderError::FixtureMissing`].
    Strict,
    Fixed(String),
    Respond(Responder),
}

/// On-disk fixture format: keys are payload fingerprints (64 hex chars) or
/// raw payload text.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LlmFixtureFile {
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    #[serde(default)]
    pub fallback: Option<String>,
}

#[derive(Clone)]
pub struct MockLlmClient {
    responses: HashMap<String, Vec<String>>,
    fallback: MockFallback,
    served: Arc<Mutex<HashMap<String, usize>>>,
    calls: Arc<Mutex<Vec<LlmRequest>>>,
}

fn is_fingerprint(key: &str) -> bool {
    key.len() == 64 && key.bytes().all(|b| b.is_ascii_hexdigit())
}

impl MockLlmClient {
    pub fn new(fallback: MockFallback) -> Self {
        Self {
            responses: HashMap::new(),
            fallback,
            served: Arc::default(),
            calls: Arc::default(),
        }
    }

    pub fn strict() -> Self {
        Self::new(MockFallback::Strict)
    }

    pub fn lenient(fallback: impl Into<String>) -> Self {
        Self::new(MockFallback::Fixed(fallback.into()))
    }

    pub fn responding<F>(f: F) -> Self
    where
        F: Fn(&LlmRequest) -> String + Send + Sync + 'static,
    {
        Self::new(MockFallback::Respond(Arc::new(f)))
    }

    /// Builds a client from a fingerprint → response map.
    pub fn from_fixture_map(map: HashMap<String, String>, fallback: MockFallback) -> Self {
        let mut client = Self::new(fallback);
        for (fingerprint, response) in map {
            client.responses.insert(fingerprint, vec![response]);
        }
        client
    }

    pub fn from_fixture_file(file: &LlmFixtureFile) -> Self {
        let fallback = match &file.fallback {
            Some(text) => MockFallback::Fixed(text.clone()),
            None => MockFallback::Strict,
        };
        let mut client = Self::new(fallback);
        for (key, response) in &file.responses {
            let fingerprint = if is_fingerprint(key) {
                key.to_ascii_lowercase()
            } else {
                payload_fingerprint(key)
            };
            client.responses.insert(fingerprint, vec![response.clone()]);
        }
        client
    }

    /// Registers a canned reply for an exact user payload.
    pub fn with_response(self, payload: impl AsRef<str>, response: impl Into<String>) -> Self {
        self.with_responses(payload, [response.into()])
    }

    /// Registers a sequence of replies; the last one repeats once exhausted.
    pub fn with_responses<I, S>(mut self, payload: impl AsRef<str>, responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let list: Vec<String> = responses.into_iter().map(Into::into).collect();
        assert!(!list.is_empty(), "at least one response required");
        self.responses.insert(payload_fingerprint(payload.as_ref()), list);
        self
    }

    /// Every request received so far, in order.
    pub fn calls(&self) -> Vec<LlmRequest> {
        self.calls.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl LlmClient for MockLlmClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        self.calls
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(request.clone());
        let fingerprint = request.fingerprint();
        if let Some(list) = self.responses.get(&fingerprint) {
            let mut served = self.served.lock().unwrap_or_else(|e| e.into_inner());
            let count = served.entry(fingerprint).or_insert(0);
            let reply = list[(*count).min(list.len() - 1)].clone();
            *count += 1;
            return Ok(reply);
        }
        match &self.fallback {
            MockFallback::Strict => Err(ProviderError::FixtureMissing(format!("LLM payload {fingerprint}"))),
            MockFallback::Fixed(text) => Ok(text.clone()),
            MockFallback::Respond(f) => Ok(f(request)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(payload: &str) -> LlmRequest {
        LlmRequest::new("sys", payload, "m")
    }

    #[test]
    fn registered_payload_gets_canned_response() {
        let client = MockLlmClient::strict().with_response("hello", "world");
        assert_eq!(client.complete(&request("hello")).unwrap(), "world");
    }

    #[test]
    fn strict_unknown_payload_errors() {
        let client = MockLlmClient::strict();
        assert!(matches!(
            client.complete(&request("nope")),
            Err(ProviderError::FixtureMissing(_))
        ));
    }

    #[test]
    fn lenient_unknown_payload_uses_fallback() {
        let client = MockLlmClient::lenient("fallback");
        assert_eq!(client.complete(&request("nope")).unwrap(), "fallback");
    }

    #[test]
    fn fixture_file_accepts_fingerprint_or_payload_keys() {
        let mut file = LlmFixtureFile::default();
        file.responses.insert("plain payload".into(), "one".into());
        file.responses.insert(payload_fingerprint("other"), "two".into());
        let client = MockLlmClient::from_fixture_file(&file);
        assert_eq!(client.complete(&request("plain payload")).unwrap(), "one");
        assert_eq!(client.complete(&request("other")).unwrap(), "two");
        assert!(client.complete(&request("missing")).is_err());
    }
}
