use std::time::Duration;

use kea_core::provider::ProviderError;
use ureq::Agent;

pub const USER_AGENT: &str = concat!(
    "kea/",
    env!("CARGO_PKG_VERSION"),
    " (hallucination detection research tool)"
);

pub fn agent(timeout: Duration) -> Agent {
    Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .user_agent(USER_AGENT)
        .build()
        .into()
}

pub fn map_error(url: &str, e: ureq::Error) -> ProviderError {
    match e {
        ureq::Error::Timeout(t) => ProviderError::Timeout(format!("{url}: {t}")),
        ureq::Error::StatusCode(status) => ProviderError::Http {
            status,
            body: String::new(),
        },
        ureq::Error::HostNotFound | ureq::Error::ConnectionFailed | ureq::Error::Io(_) => {
            ProviderError::Unreachable(format!("{url}: {e}"))
        }
        other => ProviderError::InvalidResponse(format!("{url}: {other}")),
    }
}

/// Reads the body of a response, turning non-2xx statuses into errors.
pub fn read_body(url: &str, mut response: ureq::http::Response<ureq::Body>) -> Result<String, ProviderError> {
    let status = response.status().as_u16();
    let body = response.body_mut().read_to_string().map_err(|e| map_error(url, e))?;
    if (200..300).contains(&status) {
        Ok(body)
    } else {
        Err(ProviderError::Http { status, body })
    }
}

pub fn parse_json(url: &str, body: &str) -> Result<serde_json::Value, ProviderError> {
    serde_json::from_str(body).map_err(|e| ProviderError::InvalidResponse(format!("{url}: {e}")))
}

pub fn env_or(name: &str, default: &str) -> String {
    std::env::var(name)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .unwrap_or_else(|| default.to_owned())
}
