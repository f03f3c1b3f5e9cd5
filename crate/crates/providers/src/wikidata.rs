//! Wikidata SPARQL, Wikidata entity search and Wikipedia REST summaries.

use std::time::Duration;

use kea_core::grounding::{sparql::WIKIDATA_SPARQL_URL, EntityLink, EntityLinker, SparqlEndpoint, WikipediaClient};
use kea_core::provider::ProviderError;
use serde_json::Value;

use crate::http::{agent, map_error, parse_json, read_body};

pub const WIKIDATA_API_URL: &str = "https://www.wikidata.org/w/api.php";
pub const WIKIPEDIA_SUMMARY_URL: &str = "https://en.wikipedia.org/api/rest_v1/page/summary";

pub struct HttpSparqlEndpoint {
    url: String,
    agent: ureq::Agent,
}

impl HttpSparqlEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            agent: agent(Duration::from_secs(60)),
        }
    }

    pub fn wikidata() -> Self {
        Self::new(WIKIDATA_SPARQL_URL)
    }
}

impl SparqlEndpoint for HttpSparqlEndpoint {
    fn id(&self) -> &str {
        &self.url
    }

    fn query(&self, query: &str, timeout: Duration) -> Result<String, ProviderError> {
        let response = self
            .agent
            .get(&self.url)
            .query("query", query)
            .query("format", "json")
            .header("Accept", "application/sparql-results+json")
            .config()
            .timeout_global(Some(timeout))
            .build()
            .call()
            .map_err(|e| map_error(&self.url, e))?;
        read_body(&self.url, response)
    }
}

/// Top `wbsearchentities` hit. Its confidence is the reciprocal of its rank.
pub struct WikidataSearchLinker {
    url: String,
    agent: ureq::Agent,
}

impl WikidataSearchLinker {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            url: url.into(),
            agent: agent(timeout),
        }
    }

    pub fn wikidata() -> Self {
        Self::new(WIKIDATA_API_URL, Duration::from_secs(10))
    }
}

pub fn parse_search(surface: &str, response: &Value) -> Result<Option<EntityLink>, ProviderError> {
    let hits = response
        .get("search")
        .and_then(Value::as_array)
        .ok_or_else(|| ProviderError::InvalidResponse("wbsearchentities: no search array".into()))?;
    for (rank, hit) in hits.iter().enumerate() {
        let Some(id) = hit.get("id").and_then(Value::as_str) else {
            continue;
        };
        let label = hit.get("label").and_then(Value::as_str).unwrap_or(surface);
        if let Ok(link) = EntityLink::new(surface, id, label, 1.0 / (rank + 1) as f64) {
            return Ok(Some(link));
        }
    }
    Ok(None)
}

impl EntityLinker for WikidataSearchLinker {
    fn link(&self, surface: &str) -> Result<Option<EntityLink>, ProviderError> {
        let response = self
            .agent
            .get(&self.url)
            .query("action", "wbsearchentities")
            .query("search", surface)
            .query("language", "en")
            .query("type", "item")
            .query("limit", "5")
            .query("format", "json")
            .call()
            .map_err(|e| map_error(&self.url, e))?;
        let body = read_body(&self.url, response)?;
        parse_search(surface, &parse_json(&self.url, &body)?)
    }
}

pub struct WikipediaRestClient {
    base: String,
    agent: ureq::Agent,
}

impl WikipediaRestClient {
    pub fn new(base: impl Into<String>, timeout: Duration) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_owned(),
            agent: agent(timeout),
        }
    }

    pub fn english() -> Self {
        Self::new(WIKIPEDIA_SUMMARY_URL, Duration::from_secs(10))
    }
}

impl WikipediaClient for WikipediaRestClient {
    fn summary(&self, title: &str) -> Result<Option<String>, ProviderError> {
        let url = format!("{}/{}", self.base, title);
        let response = self.agent.get(&url).call().map_err(|e| map_error(&url, e))?;
        if response.status().as_u16() == 404 {
            return Ok(None);
        }
        let body = read_body(&url, response)?;
        Ok(parse_json(&url, &body)?
            .get("extract")
            .and_then(Value::as_str)
            .filter(|s| !s.trim().is_empty())
            .map(str::to_owned))
    }
}
