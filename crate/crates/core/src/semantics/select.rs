//! Pruning of a ground-truth graph down to the triples relevant to a claim.

use serde::{Deserialize, Serialize};

use super::{cosine, triple_sentence, EmbeddingService, SemanticsError};
use crate::kg::{KnowledgeGraph, Triple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub graph: KnowledgeGraph,
    /// For each claim triple (in claim order), the truth triple chosen.
    pub matches: Vec<(Triple, Triple, f64)>,
    pub warnings: Vec<String>,
}

/// For every claim triple, keeps the truth triple whose sentence embedding
/// has the highest cosine with the claim triple's sentence. Ties go to the
/// first triple in canonical (sorted) truth order. The result is
/// deduplicated, so it never exceeds the claim or truth size.
pub fn select_relations(
    claim: &KnowledgeGraph,
    truth: &KnowledgeGraph,
    service: &EmbeddingService,
) -> Result<Selection, SemanticsError> {
    let mut warnings = Vec::new();
    if truth.is_empty() {
        warnings.push("ground-truth graph is empty; nothing to select".to_string());
        return Ok(Selection {
            graph: KnowledgeGraph::empty(),
            matches: Vec::new(),
            warnings,
        });
    }
    if claim.is_empty() {
        return Ok(Selection {
            graph: KnowledgeGraph::empty(),
            matches: Vec::new(),
            warnings,
        });
    }
    let candidates = truth.canonical_triples();
    let claim_sentences: Vec<String> = claim.triples().iter().map(triple_sentence).collect();
    let truth_sentences: Vec<String> = candidates.iter().map(|t| triple_sentence(t)).collect();
    let claim_vecs = service.embed_texts(&claim_sentences)?;
    let truth_vecs = service.embed_texts(&truth_sentences)?;

    let mut matches = Vec::with_capacity(claim.len());
    for (claim_triple, claim_vec) in claim.triples().iter().zip(&claim_vecs) {
        let mut best: Option<(usize, f64)> = None;
        for (i, truth_vec) in truth_vecs.iter().enumerate() {
            let score = cosine(claim_vec, truth_vec)?.value();
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        let (index, score) = best.expect("truth is non-empty");
        matches.push((claim_triple.clone(), candidates[index].clone(), score));
    }
    let graph = KnowledgeGraph::from_triples(matches.iter().map(|(_, t, _)| t.clone()));
    Ok(Selection {
        graph,
        matches,
        warnings,
    })
}
