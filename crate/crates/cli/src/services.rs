//! Provider construction from settings: mock or HTTP LLM, hash or HTTP
//! embeddings, fixture or live Wikidata.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use kea_core::cache::ResponseCache;
use kea_core::extraction::{
    ExtractionOptions, LlmClient, LlmFixtureFile, MockLlmClient, RequestCap, DEFAULT_REQUEST_CAP,
};
use kea_core::grounding::{
    CachingEndpoint, CachingWikipedia, EntityLinker, GroundingOptions, SparqlEndpoint, WikidataFixture, WikipediaClient,
};
use kea_core::pipeline::{DetectionConfig, GroundingSources};
use kea_core::semantics::{EmbeddingService, DEFAULT_BATCH_SIZE};
use kea_providers::{
    ChatClient, ChatConfig, EmbeddingsClient, EmbeddingsConfig, HttpSparqlEndpoint, WikidataSearchLinker,
    WikipediaRestClient,
};

use crate::args::EmbedderChoice;
use crate::settings::ProviderSettings;
use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn llm_client(providers: &ProviderSettings) -> Result<Box<dyn LlmClient>, CliError> {
    if let Some(path) = &providers.llm_fixtures {
        let file: LlmFixtureFile =
            serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return Ok(Box::new(MockLlmClient::from_fixture_file(&file)));
    }
    let cap = providers.request_cap.unwrap_or(DEFAULT_REQUEST_CAP).max(1);
    Ok(Box::new(RequestCap::new(ChatClient::new(ChatConfig::from_env()), cap)))
}

pub fn embeddings(providers: &ProviderSettings) -> EmbeddingService {
    let batch = providers.embedding_batch_size.unwrap_or(DEFAULT_BATCH_SIZE);
    match providers.embedder.unwrap_or(EmbedderChoice::Hash64) {
        EmbedderChoice::Hash64 => EmbeddingService::hash64(),
        EmbedderChoice::Http => {
            EmbeddingService::with_batch_size(Arc::new(EmbeddingsClient::new(EmbeddingsConfig::from_env())), batch)
        }
    }
}

pub struct Grounding {
    linker: Box<dyn EntityLinker>,
    endpoint: Box<dyn SparqlEndpoint>,
    wiki: Box<dyn WikipediaClient>,
    options: GroundingOptions,
}

impl Grounding {
    pub fn build(providers: &ProviderSettings, cfg: &DetectionConfig) -> Result<Self, CliError> {
        let mut options = GroundingOptions {
            extraction: ExtractionOptions {
                model_id: cfg.model_id.clone(),
                retry_limit: cfg.retry_limit,
            },
            ..GroundingOptions::default()
        };
        if let Some(secs) = providers.query_timeout_secs {
            if !(secs.is_finite() && secs > 0.0) {
                return Err(CliError::Usage(format!(
                    "query_timeout_secs must be positive, got {secs}"
                )));
            }
            options.query_timeout = Duration::from_secs_f64(secs);
        }
        if let Some(n) = providers.sparql_concurrency {
            options.sparql_concurrency = n.max(1);
        }
        if let Some(path) = &providers.wikidata_fixture {
            let fixture = WikidataFixture::from_json(&read_text(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let fixture = Arc::new(fixture);
            return Ok(Self {
                linker: Box::new(fixture.clone()),
                endpoint: Box::new(fixture.clone()),
                wiki: Box::new(fixture),
                options,
            });
        }
        let cache = match &providers.cache_dir {
            Some(dir) => ResponseCache::on_disk(dir),
            None => ResponseCache::from_env().map(|c| c.unwrap_or_else(ResponseCache::in_memory)),
        }
        .map_err(|e| CliError::Usage(format!("cache directory: {e}")))?;
        let cache = Arc::new(cache);
        let endpoint = match &providers.sparql_endpoint {
            Some(url) => HttpSparqlEndpoint::new(url.clone()),
            None => HttpSparqlEndpoint::wikidata(),
        };
        Ok(Self {
            linker: Box::new(WikidataSearchLinker::wikidata()),
            endpoint: Box::new(CachingEndpoint::new(endpoint, cache.clone())),
            wiki: Box::new(CachingWikipedia::new(WikipediaRestClient::english(), cache)),
            options,
        })
    }

    pub fn sources(&self) -> GroundingSources<'_> {
        GroundingSources {
            linker: self.linker.as_ref(),
            endpoint: self.endpoint.as_ref(),
            wiki: self.wiki.as_ref(),
            options: &self.options,
        }
    }
}
