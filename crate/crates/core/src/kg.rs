//! Knowledge-graph data model.
//!
//! A [`KnowledgeGraph`] is an ordered, duplicate-free list of
//! `(head, relation, tail)` [`Triple`]s. Labels are stored verbatim (only
//! surrounding whitespace is trimmed); any semantic normalization happens in
//! [`crate::semantics`].
//!
//! The canonical document format is a JSON object
//! `{"triples": [[head, relation, tail], ...]}` with triples sorted
//! lexicographically, so serialized graphs diff cleanly.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KgError {
    #[error("triple has an empty {slot} label")]
    EmptySlot { slot: Slot },
    #[error("malformed graph document at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("triple {index} has {found} elements, expected 3")]
    Arity { index: usize, found: usize },
    #[error("triple {index}: element {position} is not a string")]
    NotAString { index: usize, position: usize },
    #[error("triple {index} has an empty {slot} label")]
    EmptySlotAt { index: usize, slot: Slot },
}

/// One of the three positions of a triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    Head,
    Relation,
    Tail,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::Head, Slot::Relation, Slot::Tail];
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Head => "head",
            Slot::Relation => "relation",
            Slot::Tail => "tail",
        })
    }
}

/// A single `(head, relation, tail)` fact with non-empty, trimmed labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[String; 3]", into = "[String; 3]")]
pub struct Triple {
    head: String,
    relation: String,
    tail: String,
}

impl Triple {
    pub fn new(head: impl AsRef<str>, relation: impl AsRef<str>, tail: impl AsRef<str>) -> Result<Self, KgError> {
        let clean = |s: &str, slot: Slot| {
            let t = s.trim();
            if t.is_empty() {
                Err(KgError::EmptySlot { slot })
            } else {
                Ok(t.to_owned())
            }
        };
        Ok(Self {
            head: clean(head.as_ref(), Slot::Head)?,
            relation: clean(relation.as_ref(), Slot::Relation)?,
            tail: clean(tail.as_ref(), Slot::Tail)?,
        })
    }

    pub fn head(&self) -> &str {
        &self.head
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn tail(&self) -> &str {
        &self.tail
    }

    pub fn slot(&self, slot: Slot) -> &str {
        match slot {
            Slot::Head => &self.head,
            Slot::Relation => &self.relation,
            Slot::Tail => &self.tail,
        }
    }

    /// Rebuilds the triple with every label passed through `f`.
    pub fn map_labels<F>(&self, mut f: F) -> Result<Self, KgError>
    where
        F: FnMut(&str) -> String,
    {
        Triple::new(f(&self.head), f(&self.relation), f(&self.tail))
    }
}

impl TryFrom<[String; 3]> for Triple {
    type Error = KgError;

    fn try_from([h, r, t]: [String; 3]) -> Result<Self, Self::Error> {
        Triple::new(h, r, t)
    }
}

impl From<Triple> for [String; 3] {
    fn from(t: Triple) -> Self {
        [t.head, t.relation, t.tail]
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?}, {:?})", self.head, self.relation, self.tail)
    }
}

/// A triple that [`KnowledgeGraph::build`] refused to keep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildWarning {
    pub index: usize,
    pub message: String,
}

impl fmt::Display for BuildWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "skipped triple {}: {}", self.index, self.message)
    }
}

/// Deduplicated triples in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
}

impl KnowledgeGraph {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a graph from raw text tuples. Labels are trimmed; tuples with
    /// an empty slot are skipped and reported; exact duplicates are dropped
    /// keeping the first occurrence.
    pub fn build<I, S>(raw: I) -> (Self, Vec<BuildWarning>)
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let mut warnings = Vec::new();
        let mut triples = Vec::new();
        for (index, (h, r, t)) in raw.into_iter().enumerate() {
            match Triple::new(h, r, t) {
                Ok(triple) => triples.push(triple),
                Err(e) => warnings.push(BuildWarning {
                    index,
                    message: e.to_string(),
                }),
            }
        }
        (Self::from_triples(triples), warnings)
    }

    /// Collects already-validated triples, dropping duplicates.
    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let mut seen = HashSet::new();
        let triples = triples.into_iter().filter(|t| seen.insert(t.clone())).collect();
        Self { triples }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    /// Distinct head and tail labels.
    pub fn nodes(&self) -> BTreeSet<&str> {
        self.triples.iter().flat_map(|t| [t.head(), t.tail()]).collect()
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.triples.iter().map(Triple::relation).collect()
    }

    /// Every node and relation label.
    pub fn labels(&self) -> BTreeSet<&str> {
        self.triples
            .iter()
            .flat_map(|t| [t.head(), t.relation(), t.tail()])
            .collect()
    }

    pub fn edges(&self) -> BTreeSet<(&str, &str, &str)> {
        self.triples
            .iter()
            .map(|t| (t.head(), t.relation(), t.tail()))
            .collect()
    }

    /// Triples in lexicographic `(head, relation, tail)` order.
    pub fn canonical_triples(&self) -> Vec<&Triple> {
        let mut sorted: Vec<&Triple> = self.triples.iter().collect();
        sorted.sort();
        sorted
    }

    /// Set equality, ignoring triple order.
    pub fn same_triples(&self, other: &KnowledgeGraph) -> bool {
        self.len() == other.len() && self.triples.iter().all(|t| other.contains(t))
    }

    /// Concatenates two graphs, keeping first occurrences.
    pub fn merged(&self, other: &KnowledgeGraph) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(self.triples.iter().chain(other.triples.iter()).cloned())
    }
}

impl FromIterator<Triple> for KnowledgeGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Self::from_triples(iter)
    }
}

/// Where the ground-truth side of a [`GraphPair`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ProvidedContext,
    Wikidata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphPair {
    pub claim: KnowledgeGraph,
    pub truth: KnowledgeGraph,
    pub provenance: Provenance,
}

impl GraphPair {
    pub fn new(claim: KnowledgeGraph, truth: KnowledgeGraph, provenance: Provenance) -> Self {
        Self {
            claim,
            truth,
            provenance,
        }
    }
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    triples: Vec<[&'a str; 3]>,
}

#[derive(Deserialize)]
struct DocumentIn {
    triples: Vec<Vec<serde_json::Value>>,
}

/// Renders the canonical, order-independent document for `g`.
pub fn serialize_graph(g: &KnowledgeGraph) -> String {
    let doc = DocumentOut {
        triples: g
            .canonical_triples()
            .into_iter()
            .map(|t| [t.head(), t.relation(), t.tail()])
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("string triples always serialize")
}

/// Parses a canonical graph document. Duplicate triples collapse silently;
/// malformed structure and empty labels are errors.
pub fn parse_graph(doc: &str) -> Result<KnowledgeGraph, KgError> {
    let parsed: DocumentIn = serde_json::from_str(doc).map_err(|e| KgError::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut triples = Vec::with_capacity(parsed.triples.len());
    for (index, raw) in parsed.triples.into_iter().enumerate() {
        if raw.len() != 3 {
            return Err(KgError::Arity {
                index,
                found: raw.len(),
            });
        }
        let mut labels = Vec::with_capacity(3);
        for (position, value) in raw.iter().enumerate() {
            match value.as_str() {
                Some(s) => labels.push(s),
                None => return Err(KgError::NotAString { index, position }),
            }
        }
        let triple = Triple::new(labels[0], labels[1], labels[2]).map_err(|e| match e {
            KgError::EmptySlot { slot } => KgError::EmptySlotAt { index, slot },
            other => other,
        })?;
        triples.push(triple);
    }
    Ok(KnowledgeGraph::from_triples(triples))
}
