//! Contrastive explanations: contradictory triple pairs, edit scripts and
//! LLM narration.

mod narrate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{KnowledgeGraph, Slot, Triple};
use crate::provider::ProviderError;
use crate::semantics::{cosine, EmbeddingService, EmbeddingVector, SemanticsError, SimilarityScore};

pub use narrate::{
    build_narration_request, narrate, ExplainPrompt, Explanation, EXPLAIN_PROMPT_ENV, FALLBACK_EXPLANATION,
};

pub const DEFAULT_AGREE_THRESHOLD: f64 = 0.75;
pub const DEFAULT_DISAGREE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("thresholds must satisfy 0 <= disagree ({disagree}) <= agree ({agree}) <= 1")]
    InvalidThresholds { agree: f64, disagree: f64 },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("narration provider failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("narration provider returned an empty response")]
    EmptyResponse,
    #[error("explanation prompt: {0}")]
    Prompt(String),
    #[error("edit removes {0} which is not present")]
    NotApplicable(Triple),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub agree: f64,
    pub disagree: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            agree: DEFAULT_AGREE_THRESHOLD,
            disagree: DEFAULT_DISAGREE_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn new(agree: f64, disagree: f64) -> Result<Self, ExplainError> {
        if !(0.0 <= disagree && disagree <= agree && agree <= 1.0) {
            return Err(ExplainError::InvalidThresholds { agree, disagree });
        }
        Ok(Self { agree, disagree })
    }

    fn validated(self) -> Result<Self, ExplainError> {
        Self::new(self.agree, self.disagree)
    }

    /// The slot that alone falls below `disagree` while the other two reach
    /// `agree`.
    pub fn differing_slot(&self, sims: &[SimilarityScore; 3]) -> Option<Slot> {
        let mut differing = None;
        for (slot, s) in Slot::ALL.into_iter().zip(sims) {
            if s.value() < self.disagree {
                if differing.is_some() {
                    return None;
                }
                differing = Some(slot);
            } else if s.value() < self.agree {
                return None;
            }
        }
        differing
    }

    fn fully_agrees(&self, sims: &[SimilarityScore; 3]) -> bool {
        sims.iter().all(|s| s.value() >= self.agree)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionPair {
    pub claim_triple: Triple,
    pub truth_triple: Triple,
    pub differing_slot: Slot,
    /// Head, relation and tail similarities.
    pub slot_similarities: [SimilarityScore; 3],
}

impl ContradictionPair {
    fn agreement(&self) -> f64 {
        Slot::ALL
            .into_iter()
            .zip(&self.slot_similarities)
            .filter(|(slot, _)| *slot != self.differing_slot)
            .map(|(_, s)| s.value())
            .sum()
    }
}

/// Pairs of claim and truth triples that agree on two slots and conflict on
/// the third. Claim triples with a fully agreeing truth triple are
/// supported and yield nothing; every other claim triple keeps only its
/// best pair.
pub fn find_contradictions(
    claim: &KnowledgeGraph,
    truth: &KnowledgeGraph,
    service: &EmbeddingService,
    thresholds: Thresholds,
) -> Result<Vec<ContradictionPair>, ExplainError> {
    let thresholds = thresholds.validated()?;
    if claim.is_empty() || truth.is_empty() {
        return Ok(Vec::new());
    }
    let labels: Vec<&str> = claim.labels().union(&truth.labels()).copied().collect();
    let vectors = service.embed_texts(&labels)?;
    let embedded: BTreeMap<&str, &EmbeddingVector> = labels.iter().copied().zip(&vectors).collect();
    let mut memo = BTreeMap::new();
    let mut sim = |a, b| slot_similarity(&mut memo, &embedded, a, b);

    let truth_order = truth.canonical_triples();
    let mut out = Vec::new();
    for c in claim.canonical_triples() {
        let mut best: Option<ContradictionPair> = None;
        let mut supported = false;
        for t in &truth_order {
            let sims = [
                sim(c.head(), t.head())?,
                sim(c.relation(), t.relation())?,
                sim(c.tail(), t.tail())?,
            ];
            if thresholds.fully_agrees(&sims) {
                supported = true;
                break;
            }
            if let Some(slot) = thresholds.differing_slot(&sims) {
                let pair = ContradictionPair {
                    claim_triple: c.clone(),
                    truth_triple: (*t).clone(),
                    differing_slot: slot,
                    slot_similarities: sims,
                };
                if best.as_ref().is_none_or(|b| pair.agreement() > b.agreement()) {
                    best = Some(pair);
                }
            }
        }
        if !supported {
            out.extend(best);
        }
    }
    Ok(out)
}

fn slot_similarity<'a>(
    memo: &mut BTreeMap<(&'a str, &'a str), SimilarityScore>,
    embedded: &BTreeMap<&'a str, &EmbeddingVector>,
    a: &'a str,
    b: &'a str,
) -> Result<SimilarityScore, ExplainError> {
    let key = if a <= b { (a, b) } else { (b, a) };
    if let Some(&s) = memo.get(&key) {
        return Ok(s);
    }
    let s = if a == b {
        SimilarityScore::new(1.0)
    } else {
        cosine(embedded[a], embedded[b])?
    };
    memo.insert(key, s);
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "triple")]
pub enum EditOp {
    RemoveEdge(Triple),
    AddEdge(Triple),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    /// Applies the script to a multiset of triples.
    pub fn apply(&self, triples: &[Triple]) -> Result<Vec<Triple>, ExplainError> {
        let mut current = triples.to_vec();
        for op in &self.ops {
            match op {
                EditOp::RemoveEdge(t) => {
                    let at = current
                        .iter()
                        .position(|x| x == t)
                        .ok_or_else(|| ExplainError::NotApplicable(t.clone()))?;
                    current.remove(at);
                }
                EditOp::AddEdge(t) => current.push(t.clone()),
            }
        }
        Ok(current)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

pub fn edit_script(pairs: &[ContradictionPair]) -> EditScript {
    EditScript {
        ops: pairs
            .iter()
            .flat_map(|p| {
                [
                    EditOp::RemoveEdge(p.claim_triple.clone()),
                    EditOp::AddEdge(p.truth_triple.clone()),
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests;
