use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContradictionPair, EditOp, EditScript, ExplainError};
use crate::extraction::{LlmClient, LlmRequest};
use crate::kg::Triple;

pub const EXPLAIN_PROMPT_ENV: &str = "KEA_EXPLAIN_PROMPT";

const CONTRADICTIONS: &str = "{{contradictions}}";
const EDIT_OPERATIONS: &str = "{{edit_operations}}";
const SYSTEM_PROMPT: &str =
    "You explain factual discrepancies between a claim and its ground truth, concisely and without speculation.";

pub const FALLBACK_EXPLANATION: &str = "No specific contradictory relations were isolated between the claim and \
the ground truth. The claim was flagged only because its knowledge graph has low structural similarity to the \
ground-truth knowledge graph.";

/// Narration prompt template. A first line beginning with `#` is a version
/// header and is not sent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplainPrompt {
    version: String,
    body: String,
}

impl ExplainPrompt {
    pub fn from_text(text: &str) -> Result<Self, ExplainError> {
        let (version, body) = match text.split_once('\n') {
            Some((first, rest)) if first.starts_with('#') => (first.trim_start_matches('#').trim(), rest),
            _ => ("unversioned", text),
        };
        for placeholder in [CONTRADICTIONS, EDIT_OPERATIONS] {
            if !body.contains(placeholder) {
                return Err(ExplainError::Prompt(format!("template lacks {placeholder}")));
            }
        }
        Ok(Self {
            version: version.to_owned(),
            body: body.trim().to_owned(),
        })
    }

    pub fn bundled() -> Self {
        Self::from_text(include_str!("../../resources/explain_prompt.txt")).expect("bundled prompt is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, ExplainError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExplainError::Prompt(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// `$KEA_EXPLAIN_PROMPT` when set, else the bundled template.
    pub fn load() -> Result<Self, ExplainError> {
        match std::env::var_os(EXPLAIN_PROMPT_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
            _ => Ok(Self::bundled()),
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn render(&self, pairs: &[ContradictionPair], script: &EditScript) -> String {
        let contradictions = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                format!(
                    "{}. claim: {} | ground truth: {} | differs in: {}",
                    i + 1,
                    show(&p.claim_triple),
                    show(&p.truth_triple),
                    p.differing_slot
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        let edits = script
            .ops
            .iter()
            .enumerate()
            .map(|(i, op)| match op {
                EditOp::RemoveEdge(t) => format!("{}. remove {}", i + 1, show(t)),
                EditOp::AddEdge(t) => format!("{}. add {}", i + 1, show(t)),
            })
            .collect::<Vec<_>>()
            .join("\n");
        self.body
            .replace(CONTRADICTIONS, &contradictions)
            .replace(EDIT_OPERATIONS, &edits)
    }
}

fn show(t: &Triple) -> String {
    format!("({}, {}, {})", t.head(), t.relation(), t.tail())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub text: String,
    pub pairs: Vec<ContradictionPair>,
    pub script: EditScript,
}

pub fn build_narration_request(
    pairs: &[ContradictionPair],
    script: &EditScript,
    prompt: &ExplainPrompt,
    model_id: &str,
) -> LlmRequest {
    LlmRequest::new(SYSTEM_PROMPT, prompt.render(pairs, script), model_id)
}

/// Asks the LLM for a contrastive narrative. With no pairs the fallback
/// text is returned and nothing is sent.
pub fn narrate(
    pairs: &[ContradictionPair],
    script: &EditScript,
    client: &dyn LlmClient,
    prompt: &ExplainPrompt,
    model_id: &str,
) -> Result<Explanation, ExplainError> {
    if pairs.is_empty() {
        return Ok(Explanation {
            text: FALLBACK_EXPLANATION.to_owned(),
            pairs: Vec::new(),
            script: script.clone(),
        });
    }
    let request = build_narration_request(pairs, script, prompt, model_id);
    let text = client.complete(&request)?;
    if text.trim().is_empty() {
        return Err(ExplainError::EmptyResponse);
    }
    Ok(Explanation {
        text,
        pairs: pairs.to_vec(),
        script: script.clone(),
    })
}
