//! Open-domain ground truth from Wikidata and Wikipedia.

mod caching;
mod fixture;
pub mod sparql;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{extract_graph, ExtractionError, ExtractionOptions, LlmClient};
use crate::kg::{KnowledgeGraph, Triple};
use crate::provider::ProviderError;
use crate::sync::bounded_map;

pub use caching::{CachingEndpoint, CachingWikipedia};
pub use fixture::{FixtureItem, WikidataFixture};

pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_SPARQL_CONCURRENCY: usize = 2;

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("invalid Wikidata item id {0:?}")]
    InvalidItemId(String),
    #[error("link confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("entity linker failed: {0}")]
    Linker(ProviderError),
    #[error("SPARQL endpoint failed: {0}")]
    Endpoint(ProviderError),
    #[error("description extraction failed: {0}")]
    Extraction(ProviderError),
}

pub fn is_item_id(id: &str) -> bool {
    id.len() > 1 && id.starts_with('Q') && id[1..].bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityLink {
    /// Node label as it appears in the claim graph.
    pub surface: String,
    pub item_id: String,
    /// English Wikidata label of the item.
    pub label: String,
    pub confidence: f64,
}

impl EntityLink {
    pub fn new(
        surface: impl Into<String>,
        item_id: impl Into<String>,
        label: impl Into<String>,
        confidence: f64,
    ) -> Result<Self, GroundingError> {
        let item_id = item_id.into();
        if !is_item_id(&item_id) {
            return Err(GroundingError::InvalidItemId(item_id));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GroundingError::InvalidConfidence(confidence));
        }
        Ok(Self {
            surface: surface.into(),
            item_id,
            label: label.into(),
            confidence,
        })
    }
}

pub trait EntityLinker: Send + Sync {
    /// Best item for `surface`, or `None` when nothing matches.
    fn link(&self, surface: &str) -> Result<Option<EntityLink>, ProviderError>;
}

pub trait SparqlEndpoint: Send + Sync {
    fn id(&self) -> &str;
    /// Runs `query` and returns the raw SPARQL-JSON body.
    fn query(&self, query: &str, timeout: Duration) -> Result<String, ProviderError>;
}

pub trait WikipediaClient: Send + Sync {
    /// Lead text of the article, or `None` when there is no such page.
    fn summary(&self, title: &str) -> Result<Option<String>, ProviderError>;
}

macro_rules! forward_impls {
    ($trait:ident { $($body:tt)* }) => {
        impl<T: $trait + ?Sized> $trait for &T { $($body)* }
        impl<T: $trait + ?Sized> $trait for Arc<T> { $($body)* }
        impl<T: $trait + ?Sized> $trait for Box<T> { $($body)* }
    };
}

forward_impls!(EntityLinker {
    fn link(&self, surface: &str) -> Result<Option<EntityLink>, ProviderError> {
        (**self).link(surface)
    }
});
forward_impls!(SparqlEndpoint {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn query(&self, query: &str, timeout: Duration) -> Result<String, ProviderError> {
        (**self).query(query, timeout)
    }
});
forward_impls!(WikipediaClient {
    fn summary(&self, title: &str) -> Result<Option<String>, ProviderError> {
        (**self).summary(title)
    }
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingOptions {
    #[serde(with = "secs")]
    pub query_timeout: Duration,
    pub sparql_concurrency: usize,
    pub extraction: ExtractionOptions,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for GroundingOptions {
    fn default() -> Self {
        Self {
            query_timeout: DEFAULT_QUERY_TIMEOUT,
            sparql_concurrency: DEFAULT_SPARQL_CONCURRENCY,
            extraction: ExtractionOptions::default(),
        }
    }
}

/// Links every distinct node label of `claim`. Unlinkable labels and
/// labels whose lookup timed out are omitted; the latter with a warning.
pub fn link_entities(
    claim: &KnowledgeGraph,
    linker: &dyn EntityLinker,
) -> Result<(Vec<EntityLink>, Vec<String>), GroundingError> {
    let mut links = Vec::new();
    let mut warnings = Vec::new();
    for label in claim.nodes() {
        match linker.link(label) {
            Ok(Some(mut link)) => {
                if !is_item_id(&link.item_id) {
                    warnings.push(format!("linker returned invalid id {:?} for {label:?}", link.item_id));
                    continue;
                }
                link.surface = label.to_owned();
                link.confidence = link.confidence.clamp(0.0, 1.0);
                links.push(link);
            }
            Ok(None) => warnings.push(format!("no Wikidata item for {label:?}")),
            Err(e) if e.is_timeout() => warnings.push(format!("linking {label:?} timed out: {e}")),
            Err(e) => return Err(GroundingError::Linker(e)),
        }
    }
    links.sort_by(|a, b| a.surface.cmp(&b.surface));
    Ok((links, warnings))
}

fn distinct_items(links: &[EntityLink]) -> Vec<&EntityLink> {
    let mut seen = BTreeSet::new();
    links.iter().filter(|l| seen.insert(l.item_id.as_str())).collect()
}

/// Direct statements between every ordered pair of linked items. Timed out
/// or malformed pairs are skipped with a warning; an unreachable endpoint
/// aborts.
pub fn fetch_relation_triples(
    links: &[EntityLink],
    endpoint: &dyn SparqlEndpoint,
    options: &GroundingOptions,
) -> Result<(KnowledgeGraph, Vec<String>), GroundingError> {
    let items = distinct_items(links);
    if items.len() < 2 {
        return Ok((KnowledgeGraph::empty(), Vec::new()));
    }
    let pairs: Vec<(&EntityLink, &EntityLink)> = items
        .iter()
        .flat_map(|&a| {
            items
                .iter()
                .filter(move |&&b| b.item_id != a.item_id)
                .map(move |&b| (a, b))
        })
        .collect();
    let outcomes = bounded_map(&pairs, options.sparql_concurrency.max(1), |_, &(a, b)| {
        let body = endpoint.query(&sparql::pair_query(&a.item_id, &b.item_id), options.query_timeout)?;
        sparql::parse_results(&body)
    });
    let mut triples = Vec::new();
    let mut warnings = Vec::new();
    for (&(a, b), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Ok(rows) => {
                for row in rows {
                    let head = row.get("item1Label").unwrap_or(&a.label);
                    let tail = row.get("item2Label").unwrap_or(&b.label);
                    let Some(relation) = row.get("propLabel") else {
                        warnings.push(format!("{} -> {}: row without property label", a.item_id, b.item_id));
                        continue;
                    };
                    match Triple::new(head.as_str(), relation.as_str(), tail.as_str()) {
                        Ok(t) => triples.push(t),
                        Err(e) => warnings.push(format!("{} -> {}: {e}", a.item_id, b.item_id)),
                    }
                }
            }
            Err(ProviderError::Unreachable(msg)) => {
                return Err(GroundingError::Endpoint(ProviderError::Unreachable(msg)))
            }
            Err(e) => warnings.push(format!("{} -> {} skipped: {e}", a.item_id, b.item_id)),
        }
    }
    Ok((KnowledgeGraph::from_triples(triples), warnings))
}

/// Wikidata description followed by the Wikipedia lead paragraph, keyed by
/// claim surface label. Every failure here is a warning.
pub fn fetch_descriptions(
    links: &[EntityLink],
    endpoint: &dyn SparqlEndpoint,
    wiki: &dyn WikipediaClient,
    options: &GroundingOptions,
) -> (BTreeMap<String, String>, Vec<String>) {
    let mut out = BTreeMap::new();
    let mut warnings = Vec::new();
    for link in links {
        let rows = match endpoint
            .query(&sparql::describe_query(&link.item_id), options.query_timeout)
            .and_then(|b| sparql::parse_results(&b))
        {
            Ok(rows) => rows,
            Err(e) => {
                warnings.push(format!("description of {} unavailable: {e}", link.item_id));
                continue;
            }
        };
        let mut parts = Vec::new();
        let description = rows.iter().find_map(|r| r.get("itemDescription"));
        if let Some(d) = description.filter(|d| !d.trim().is_empty()) {
            parts.push(d.trim().to_owned());
        }
        let title = rows
            .iter()
            .find_map(|r| r.get("article"))
            .and_then(|u| sparql::article_title(u));
        if let Some(title) = title {
            match wiki.summary(title) {
                Ok(Some(text)) => {
                    if let Some(p) = text.split("\n").map(str::trim).find(|p| !p.is_empty()) {
                        parts.push(p.to_owned());
                    }
                }
                Ok(None) => {}
                Err(e) => warnings.push(format!("Wikipedia summary of {title} unavailable: {e}")),
            }
        }
        if !parts.is_empty() {
            out.insert(link.surface.clone(), parts.join("\n\n"));
        }
    }
    (out, warnings)
}

pub struct GroundingDeps<'a> {
    pub linker: &'a dyn EntityLinker,
    pub endpoint: &'a dyn SparqlEndpoint,
    pub wiki: &'a dyn WikipediaClient,
    pub llm: &'a dyn LlmClient,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBundle {
    /// Merged ground-truth graph.
    pub triples: KnowledgeGraph,
    pub sparql_triples: KnowledgeGraph,
    pub description_triples: KnowledgeGraph,
    pub descriptions: BTreeMap<String, String>,
    pub links: Vec<EntityLink>,
    pub warnings: Vec<String>,
}

fn extraction_failure(e: ExtractionError) -> Result<String, GroundingError> {
    match e {
        ExtractionError::Provider(p @ ProviderError::Unreachable(_)) => Err(GroundingError::Extraction(p)),
        other => Ok(other.to_string()),
    }
}

/// Links, queries and enriches. Description extraction runs in single-text
/// mode, one LLM call per description.
pub fn build_ground_truth(
    claim: &KnowledgeGraph,
    deps: &GroundingDeps<'_>,
    options: &GroundingOptions,
) -> Result<GroundTruthBundle, GroundingError> {
    let (links, mut warnings) = link_entities(claim, deps.linker)?;
    if links.is_empty() {
        if !claim.is_empty() {
            warnings.push("no claim entity could be linked; ground truth is empty".into());
        }
        return Ok(GroundTruthBundle {
            links,
            warnings,
            ..GroundTruthBundle::default()
        });
    }
    let (sparql_triples, w) = fetch_relation_triples(&links, deps.endpoint, options)?;
    warnings.extend(w);
    let (descriptions, w) = fetch_descriptions(&links, deps.endpoint, deps.wiki, options);
    warnings.extend(w);

    let mut described = Vec::new();
    for (surface, text) in &descriptions {
        match extract_graph(text, deps.llm, &options.extraction) {
            Ok(result) => {
                warnings.extend(result.warnings.into_iter().map(|w| format!("{surface}: {w}")));
                described.extend(result.graph1.triples().iter().cloned());
            }
            Err(e) => {
                let reason = extraction_failure(e)?;
                warnings.push(format!("description of {surface} not extracted: {reason}"));
            }
        }
    }
    let description_triples = KnowledgeGraph::from_triples(described);
    let triples = sparql_triples.merged(&description_triples);
    Ok(GroundTruthBundle {
        triples,
        sparql_triples,
        description_triples,
        descriptions,
        links,
        warnings,
    })
}
