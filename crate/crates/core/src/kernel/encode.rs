//! Encoding of knowledge graphs as labeled graphs for WL refinement.
//!
//! Each triple `(h, r, t)` contributes entity nodes `h` and `t` (shared
//! across triples) and a fresh relation node labeled `r`, joined by edges
//! `h - r` and `r - t`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::kg::{GraphPair, KnowledgeGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Entity,
    Relation,
}

/// Shared `(kind, label) → id` dictionary. Ids are assigned in first
/// encounter order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDictionary {
    ids: BTreeMap<NodeKind, BTreeMap<String, u32>>,
    next: u32,
}

impl LabelDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, kind: NodeKind, label: &str) -> u32 {
        let by_kind = self.ids.entry(kind).or_default();
        if let Some(&id) = by_kind.get(label) {
            return id;
        }
        let id = self.next;
        by_kind.insert(label.to_owned(), id);
        self.next += 1;
        id
    }

    pub fn get(&self, kind: NodeKind, label: &str) -> Option<u32> {
        self.ids.get(&kind).and_then(|m| m.get(label)).copied()
    }

    pub fn len(&self) -> usize {
        self.next as usize
    }

    pub fn is_empty(&self) -> bool {
        self.next == 0
    }
}

/// A labeled graph over node indices `0..node_labels.len()`. Edges are
/// stored in triple orientation; the undirected view deduplicates them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedGraph {
    pub node_labels: Vec<u32>,
    pub edges: Vec<(usize, usize)>,
}

impl EncodedGraph {
    pub fn new(node_labels: Vec<u32>, edges: Vec<(usize, usize)>) -> Self {
        Self { node_labels, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_labels.is_empty()
    }

    /// Distinct unordered edges without self-loops.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        set.into_iter().collect()
    }

    /// Relabels nodes according to `perm`, where node `i` moves to
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> EncodedGraph {
        let mut labels = vec![0; self.node_labels.len()];
        for (i, &p) in perm.iter().enumerate() {
            labels[p] = self.node_labels[i];
        }
        let edges = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        EncodedGraph::new(labels, edges)
    }
}

pub fn encode_graph(graph: &KnowledgeGraph, dictionary: &mut LabelDictionary) -> EncodedGraph {
    let mut entity_nodes: HashMap<&str, usize> = HashMap::new();
    let mut node_labels = Vec::with_capacity(graph.len() * 3);
    let mut edges = Vec::with_capacity(graph.len() * 2);
    for triple in graph.triples() {
        let head = *entity_nodes.entry(triple.head()).or_insert_with(|| {
            node_labels.push(dictionary.intern(NodeKind::Entity, triple.head()));
            node_labels.len() - 1
        });
        node_labels.push(dictionary.intern(NodeKind::Relation, triple.relation()));
        let relation = node_labels.len() - 1;
        let tail = *entity_nodes.entry(triple.tail()).or_insert_with(|| {
            node_labels.push(dictionary.intern(NodeKind::Entity, triple.tail()));
            node_labels.len() - 1
        });
        edges.push((head, relation));
        edges.push((relation, tail));
    }
    EncodedGraph::new(node_labels, edges)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPair {
    pub claim: EncodedGraph,
    pub truth: EncodedGraph,
    pub dictionary: LabelDictionary,
}

/// Encodes both graphs of a pair over one shared label dictionary.
pub fn encode_pair(pair: &GraphPair) -> EncodedPair {
    let mut dictionary = LabelDictionary::new();
    let claim = encode_graph(&pair.claim, &mut dictionary);
    let truth = encode_graph(&pair.truth, &mut dictionary);
    EncodedPair {
        claim,
        truth,
        dictionary,
    }
}
