//! Average-linkage agglomerative clustering of labels on cosine distance,
//! and relabeling of graph pairs by cluster representative.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{cosine, EmbeddingService, EmbeddingVector, SemanticsError};
use crate::kg::{GraphPair, KnowledgeGraph};

pub const DEFAULT_CLUSTER_DISTANCE: f64 = 0.35;

/// Distances this close to zero are treated as exactly zero so that
/// identical embeddings merge even at threshold 0.
const ZERO_DISTANCE_EPS: f64 = 1e-12;

/// `1 - cosine`, floored at zero.
pub fn cosine_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SemanticsError> {
    let d = (1.0 - cosine(a, b)?.value()).max(0.0);
    Ok(if d < ZERO_DISTANCE_EPS { 0.0 } else { d })
}

/// Label → cluster assignment. Cluster ids are dense, ordered by
/// representative, and each representative is the lexicographically
/// smallest member of its cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelClustering {
    assignment: BTreeMap<String, usize>,
    representatives: Vec<String>,
}

impl LabelClustering {
    /// Builds a clustering from groups of labels.
    pub fn from_groups<I, G, S>(groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut sorted: Vec<BTreeSet<String>> = groups
            .into_iter()
            .map(|g| g.into_iter().map(Into::into).collect::<BTreeSet<_>>())
            .filter(|g| !g.is_empty())
            .collect();
        sorted.sort_by(|a, b| a.first().cmp(&b.first()));
        let mut assignment = BTreeMap::new();
        let mut representatives = Vec::with_capacity(sorted.len());
        for (id, group) in sorted.into_iter().enumerate() {
            representatives.push(group.first().cloned().expect("non-empty"));
            for label in group {
                assignment.insert(label, id);
            }
        }
        Self {
            assignment,
            representatives,
        }
    }

    /// Every label in its own cluster.
    pub fn identity<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_groups(labels.into_iter().map(|l| [l.into()]))
    }

    pub fn cluster_of(&self, label: &str) -> Option<usize> {
        self.assignment.get(label).copied()
    }

    pub fn representative(&self, cluster: usize) -> Option<&str> {
        self.representatives.get(cluster).map(String::as_str)
    }

    pub fn representative_of(&self, label: &str) -> Option<&str> {
        self.cluster_of(label).and_then(|c| self.representative(c))
    }

    pub fn cluster_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.assignment.keys().map(String::as_str)
    }

    /// Members of each cluster, indexed by cluster id.
    pub fn clusters(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.representatives.len()];
        for (label, &id) in &self.assignment {
            out[id].push(label.as_str());
        }
        out
    }
}

/// Agglomerative clustering with average linkage on cosine distance.
/// Clusters keep merging while the closest pair's average distance is at
/// most `distance_threshold`. Ties are broken towards the pair whose
/// smallest members come first in label order.
pub fn cluster_labels<S: AsRef<str>>(
    labels: &[S],
    service: &EmbeddingService,
    distance_threshold: f64,
) -> Result<LabelClustering, SemanticsError> {
    let labels: Vec<&str> = labels
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.is_empty() {
        return Err(SemanticsError::NoLabels);
    }
    let vectors = service.embed_texts(&labels)?;
    let n = labels.len();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cosine_distance(&vectors[i], &vectors[j])?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    // Slot i holds the cluster whose smallest member index is i.
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if members[i].is_none() {
                continue;
            }
            for j in (i + 1)..n {
                if members[j].is_none() {
                    continue;
                }
                if best.is_none_or(|(_, _, d)| dist[i][j] < d) {
                    best = Some((i, j, dist[i][j]));
                }
            }
        }
        let Some((i, j, d)) = best else { break };
        if d > distance_threshold {
            break;
        }
        let absorbed = members[j].take().expect("active cluster");
        let (ni, nj) = (
            members[i].as_ref().expect("active cluster").len() as f64,
            absorbed.len() as f64,
        );
        for k in 0..n {
            if k == i || members[k].is_none() {
                continue;
            }
            let merged = (ni * dist[i][k] + nj * dist[j][k]) / (ni + nj);
            dist[i][k] = merged;
            dist[k][i] = merged;
        }
        members[i].as_mut().expect("active cluster").extend(absorbed);
    }

    Ok(LabelClustering::from_groups(
        members
            .into_iter()
            .flatten()
            .map(|group| group.into_iter().map(|idx| labels[idx].to_owned())),
    ))
}

fn relabel(graph: &KnowledgeGraph, clustering: &LabelClustering) -> Result<KnowledgeGraph, SemanticsError> {
    let mut missing = None;
    let mut triples = Vec::with_capacity(graph.len());
    for t in graph.triples() {
        let mapped = t.map_labels(|label| match clustering.representative_of(label) {
            Some(rep) => rep.to_owned(),
            None => {
                missing.get_or_insert_with(|| label.to_owned());
                label.to_owned()
            }
        })?;
        triples.push(mapped);
    }
    match missing {
        Some(label) => Err(SemanticsError::MissingLabel(label)),
        None => Ok(KnowledgeGraph::from_triples(triples)),
    }
}

/// Replaces every label of both graphs by its cluster representative and
/// re-deduplicates.
pub fn relabel_graphs(pair: &GraphPair, clustering: &LabelClustering) -> Result<GraphPair, SemanticsError> {
    Ok(GraphPair::new(
        relabel(&pair.claim, clustering)?,
        relabel(&pair.truth, clustering)?,
        pair.provenance,
    ))
}
