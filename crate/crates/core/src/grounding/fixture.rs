//! Offline Wikidata/Wikipedia stand-in answering the queries built in
//! [`super::sparql`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::sparql::{self, DESCRIBE_TAG, PAIR_TAG};
use super::{EntityLink, EntityLinker, SparqlEndpoint, WikipediaClient};
use crate::provider::ProviderError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureItem {
    pub label: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// English Wikipedia title, absent when the item has no article.
    #[serde(default)]
    pub article: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct WikidataFixture {
    #[serde(default)]
    pub items: BTreeMap<String, FixtureItem>,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
    /// `[item, property, item]` direct statements.
    #[serde(default)]
    pub statements: Vec<[String; 3]>,
    /// Article title to lead text.
    #[serde(default)]
    pub summaries: BTreeMap<String, String>,
    /// Ordered item pairs whose query times out.
    #[serde(default)]
    pub timeouts: BTreeSet<(String, String)>,
    #[serde(default)]
    pub unreachable: bool,
    #[serde(skip)]
    queries: AtomicUsize,
}

impl WikidataFixture {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Hand-authored entries for Albert Einstein, Ulm, Germany and
    /// Princeton.
    pub fn bundled() -> Self {
        Self::from_json(include_str!("../../resources/wikidata_fixture.json")).expect("bundled fixture parses")
    }

    pub fn unreachable() -> Self {
        Self {
            unreachable: true,
            ..Self::default()
        }
    }

    pub fn with_timeout(mut self, item1: &str, item2: &str) -> Self {
        self.timeouts.insert((item1.to_owned(), item2.to_owned()));
        self
    }

    /// SPARQL queries answered so far.
    pub fn query_count(&self) -> usize {
        self.queries.load(Ordering::SeqCst)
    }

    fn check_reachable(&self) -> Result<(), ProviderError> {
        if self.unreachable {
            Err(ProviderError::Unreachable("fixture endpoint marked unreachable".into()))
        } else {
            Ok(())
        }
    }

    fn label_of(&self, item: &str) -> String {
        self.items
            .get(item)
            .map(|i| i.label.clone())
            .unwrap_or_else(|| item.to_owned())
    }

    fn answer_pair(&self, a: &str, b: &str) -> Result<String, ProviderError> {
        if self.timeouts.contains(&(a.to_owned(), b.to_owned())) {
            return Err(ProviderError::Timeout(format!("pair {a} {b}")));
        }
        let rows: Vec<Vec<(&str, String)>> = self
            .statements
            .iter()
            .filter(|[s, _, o]| s == a && o == b)
            .map(|[_, p, _]| {
                vec![
                    ("p", format!("http://www.wikidata.org/prop/direct/{p}")),
                    (
                        "propLabel",
                        self.properties.get(p).cloned().unwrap_or_else(|| p.clone()),
                    ),
                    ("item1Label", self.label_of(a)),
                    ("item2Label", self.label_of(b)),
                ]
            })
            .collect();
        Ok(sparql::results_json(
            &["p", "propLabel", "item1Label", "item2Label"],
            &rows,
        ))
    }

    fn answer_describe(&self, item: &str) -> String {
        let mut row = Vec::new();
        if let Some(it) = self.items.get(item) {
            row.push(("itemLabel", it.label.clone()));
            if let Some(d) = &it.description {
                row.push(("itemDescription", d.clone()));
            }
            if let Some(a) = &it.article {
                row.push(("article", format!("https://en.wikipedia.org/wiki/{a}")));
            }
        } else {
            row.push(("itemLabel", item.to_owned()));
        }
        sparql::results_json(&["itemLabel", "itemDescription", "article"], &[row])
    }
}

impl EntityLinker for WikidataFixture {
    fn link(&self, surface: &str) -> Result<Option<EntityLink>, ProviderError> {
        self.check_reachable()?;
        let needle = surface.trim().to_lowercase();
        let hit = self
            .items
            .iter()
            .find(|(_, it)| it.label.to_lowercase() == needle || it.aliases.iter().any(|a| a.to_lowercase() == needle));
        Ok(hit.map(|(id, it)| EntityLink {
            surface: surface.to_owned(),
            item_id: id.clone(),
            label: it.label.clone(),
            confidence: 1.0,
        }))
    }
}

impl SparqlEndpoint for WikidataFixture {
    fn id(&self) -> &str {
        "fixture"
    }

    fn query(&self, query: &str, _timeout: Duration) -> Result<String, ProviderError> {
        self.check_reachable()?;
        self.queries.fetch_add(1, Ordering::SeqCst);
        let first = query.lines().next().unwrap_or_default();
        let mut parts = first.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(PAIR_TAG), Some(a), Some(b)) => self.answer_pair(a, b),
            (Some(DESCRIBE_TAG), Some(item), None) => Ok(self.answer_describe(item)),
            _ => Err(ProviderError::FixtureMissing(format!("query {first:?}"))),
        }
    }
}

impl WikipediaClient for WikidataFixture {
    fn summary(&self, title: &str) -> Result<Option<String>, ProviderError> {
        self.check_reachable()?;
        Ok(self.summaries.get(title).cloned())
    }
}
