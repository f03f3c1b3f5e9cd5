//! End-to-end detection: extraction, grounding or context graph, relation
//! selection, label clustering, kernel scoring, and optional explanation.

mod config;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explain::{edit_script, find_contradictions, narrate, ExplainError, ExplainPrompt, Explanation};
use crate::extraction::{extract_graph, extract_graph_pair, ExtractionError, ExtractionOptions, LlmClient};
use crate::grounding::{
    build_ground_truth, EntityLinker, GroundTruthBundle, GroundingDeps, GroundingError, GroundingOptions,
    SparqlEndpoint, WikipediaClient,
};
use crate::kernel::{encode_pair, wl_kernel_with, KernelResult, WlOptions};
use crate::kg::{GraphPair, KnowledgeGraph, Provenance};
use crate::semantics::{
    cluster_labels, relabel_graphs, select_relations, EmbeddingService, LabelClustering, SemanticsError,
};

pub use config::{DetectionConfig, DetectionMode, Profile};
pub use sweep::{sweep_thresholds, Confusion, ThresholdTally};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),
    #[error("{0} text is empty")]
    EmptyInput(&'static str),
    #[error("open-domain detection needs grounding sources")]
    MissingGrounding,
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
}

/// Wikidata-side services for open-domain runs.
#[derive(Clone, Copy)]
pub struct GroundingSources<'a> {
    pub linker: &'a dyn EntityLinker,
    pub endpoint: &'a dyn SparqlEndpoint,
    pub wiki: &'a dyn WikipediaClient,
    pub options: &'a GroundingOptions,
}

pub struct DetectionDeps<'a> {
    pub llm: &'a dyn LlmClient,
    pub embeddings: &'a EmbeddingService,
    pub grounding: Option<GroundingSources<'a>>,
    pub explain_prompt: &'a ExplainPrompt,
}

/// Every intermediate artifact of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrace {
    pub claim_graph: KnowledgeGraph,
    /// Ground truth before relation selection.
    pub truth_graph: KnowledgeGraph,
    pub selected_truth: KnowledgeGraph,
    pub clustering: Option<LabelClustering>,
    pub relabeled: GraphPair,
    pub kernel: Option<KernelResult>,
    pub wl: WlOptions,
    pub grounding: Option<GroundTruthBundle>,
    pub raw_extraction: String,
}

impl DetectionTrace {
    /// Score implied by the relabeled pair. An empty side scores 0.
    pub fn recompute_score(&self) -> f64 {
        if self.relabeled.claim.is_empty() || self.relabeled.truth.is_empty() {
            return 0.0;
        }
        let encoded = encode_pair(&self.relabeled);
        wl_kernel_with(&encoded.claim, &encoded.truth, &self.wl).normalized
    }

    /// Whether the stored clustering reproduces the stored relabeled pair.
    pub fn relabeling_is_consistent(&self) -> bool {
        let original = GraphPair::new(
            self.claim_graph.clone(),
            self.selected_truth.clone(),
            self.relabeled.provenance,
        );
        match &self.clustering {
            Some(c) => relabel_graphs(&original, c).is_ok_and(|p| p == self.relabeled),
            None => original == self.relabeled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub score: f64,
    pub threshold: f64,
    pub is_hallucination: bool,
    pub explanation: Option<Explanation>,
    pub warnings: Vec<String>,
    pub trace: DetectionTrace,
}

fn extraction_options(cfg: &DetectionConfig) -> ExtractionOptions {
    ExtractionOptions {
        model_id: cfg.model_id.clone(),
        retry_limit: cfg.retry_limit,
    }
}

/// Closed-domain: the truth graph is extracted from `context_text` in the
/// same LLM call as the claim graph.
pub fn detect_closed(
    output_text: &str,
    context_text: &str,
    cfg: &DetectionConfig,
    deps: &DetectionDeps<'_>,
) -> Result<DetectionVerdict, PipelineError> {
    cfg.validate()?;
    if output_text.trim().is_empty() {
        return Err(PipelineError::EmptyInput("output"));
    }
    if context_text.trim().is_empty() {
        return Err(PipelineError::EmptyInput("context"));
    }
    let extracted = extract_graph_pair(output_text, context_text, deps.llm, &extraction_options(cfg))?;
    score_pair(
        extracted.graph1,
        extracted.graph2,
        Provenance::ProvidedContext,
        None,
        extracted.raw_response,
        extracted.warnings,
        cfg,
        deps,
    )
}

/// Open-domain: the truth graph comes from Wikidata grounding of the claim.
pub fn detect_open(
    output_text: &str,
    cfg: &DetectionConfig,
    deps: &DetectionDeps<'_>,
) -> Result<DetectionVerdict, PipelineError> {
    cfg.validate()?;
    if output_text.trim().is_empty() {
        return Err(PipelineError::EmptyInput("output"));
    }
    let sources = deps.grounding.ok_or(PipelineError::MissingGrounding)?;
    let options = extraction_options(cfg);
    let extracted = extract_graph(output_text, deps.llm, &options)?;
    let mut warnings = extracted.warnings;
    let grounding_options = GroundingOptions {
        extraction: options,
        ..sources.options.clone()
    };
    let bundle = build_ground_truth(
        &extracted.graph1,
        &GroundingDeps {
            linker: sources.linker,
            endpoint: sources.endpoint,
            wiki: sources.wiki,
            llm: deps.llm,
        },
        &grounding_options,
    )?;
    warnings.extend(bundle.warnings.iter().cloned());
    score_pair(
        extracted.graph1,
        bundle.triples.clone(),
        Provenance::Wikidata,
        Some(bundle),
        extracted.raw_response,
        warnings,
        cfg,
        deps,
    )
}

/// Dispatches on `cfg.mode`. Closed-domain runs need `context_text`.
pub fn detect(
    output_text: &str,
    context_text: Option<&str>,
    cfg: &DetectionConfig,
    deps: &DetectionDeps<'_>,
) -> Result<DetectionVerdict, PipelineError> {
    match cfg.mode {
        DetectionMode::ClosedDomain => detect_closed(output_text, context_text.unwrap_or(""), cfg, deps),
        DetectionMode::OpenDomain => detect_open(output_text, cfg, deps),
    }
}

#[allow(clippy::too_many_arguments)]
fn score_pair(
    claim: KnowledgeGraph,
    truth: KnowledgeGraph,
    provenance: Provenance,
    grounding: Option<GroundTruthBundle>,
    raw_extraction: String,
    mut warnings: Vec<String>,
    cfg: &DetectionConfig,
    deps: &DetectionDeps<'_>,
) -> Result<DetectionVerdict, PipelineError> {
    let wl = cfg.wl_options();
    let degenerate = |warnings: Vec<String>, selected: KnowledgeGraph, grounding, claim: KnowledgeGraph, truth| {
        let relabeled = GraphPair::new(claim.clone(), selected.clone(), provenance);
        DetectionVerdict {
            score: 0.0,
            threshold: cfg.kernel_threshold,
            is_hallucination: cfg.is_hallucination(0.0),
            explanation: None,
            warnings,
            trace: DetectionTrace {
                claim_graph: claim,
                truth_graph: truth,
                selected_truth: selected,
                clustering: None,
                relabeled,
                kernel: None,
                wl,
                grounding,
                raw_extraction: raw_extraction.clone(),
            },
        }
    };
    if claim.is_empty() {
        warnings.push("degenerate input: claim graph is empty; scoring 0".into());
        return Ok(degenerate(warnings, KnowledgeGraph::empty(), grounding, claim, truth));
    }
    if truth.is_empty() {
        warnings.push(
            match provenance {
                Provenance::Wikidata => "ground truth is empty (entities unlinkable or unconnected); scoring 0",
                Provenance::ProvidedContext => "degenerate input: context graph is empty; scoring 0",
            }
            .into(),
        );
        return Ok(degenerate(warnings, KnowledgeGraph::empty(), grounding, claim, truth));
    }

    let selection = select_relations(&claim, &truth, deps.embeddings)?;
    warnings.extend(selection.warnings.iter().cloned());
    let selected = selection.graph;
    let labels: Vec<&str> = claim.labels().union(&selected.labels()).copied().collect();
    let clustering = cluster_labels(&labels, deps.embeddings, cfg.cluster_distance)?;
    let relabeled = relabel_graphs(
        &GraphPair::new(claim.clone(), selected.clone(), provenance),
        &clustering,
    )?;
    let encoded = encode_pair(&relabeled);
    let kernel = wl_kernel_with(&encoded.claim, &encoded.truth, &wl);
    let score = kernel.normalized;
    let is_hallucination = cfg.is_hallucination(score);

    let explanation = if is_hallucination && cfg.explain_on_detect {
        let pairs = find_contradictions(&claim, &truth, deps.embeddings, cfg.contradiction_thresholds())?;
        let script = edit_script(&pairs);
        Some(narrate(&pairs, &script, deps.llm, deps.explain_prompt, &cfg.model_id)?)
    } else {
        None
    };

    Ok(DetectionVerdict {
        score,
        threshold: cfg.kernel_threshold,
        is_hallucination,
        explanation,
        warnings,
        trace: DetectionTrace {
            claim_graph: claim,
            truth_graph: truth,
            selected_truth: selected,
            clustering: Some(clustering),
            relabeled,
            kernel: Some(kernel),
            wl,
            grounding,
            raw_extraction,
        },
    })
}
