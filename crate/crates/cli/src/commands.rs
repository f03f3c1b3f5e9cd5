use std::io::Write;
use std::path::Path;

use kea_core::bench::{
    evaluate_records, load_dataset, read_verdict_log, run_benchmark, subsample, write_outputs, BenchError,
    BenchOptions, DatasetFormat, FieldMap, LoadOptions,
};
use kea_core::explain::{edit_script, find_contradictions, narrate, ExplainError, ExplainPrompt};
use kea_core::extraction::{extract_graph_pair, ExtractionError, ExtractionOptions};
use kea_core::kernel::{encode_pair, pair_kernel, wl_features_shared, Directedness};
use kea_core::kg::{parse_graph, serialize_graph, GraphPair, KnowledgeGraph, Provenance};
use kea_core::pipeline::{
    detect, sweep_thresholds, DetectionDeps, DetectionMode, DetectionTrace, DetectionVerdict, PipelineError,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{BenchArgs, Cli, Command, DetectArgs, ExplainArgs, ExtractArgs, KernelArgs, SweepArgs};
use crate::services::{embeddings, llm_client, read_text, Grounding};
use crate::settings::Settings;
use crate::{CliError, EXIT_FLAGGED, EXIT_OK};

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Kernel(a) => kernel(a, cli, out),
        Command::Detect(a) => detect_cmd(a, &Settings::resolve(&cli.global)?, out, err),
        Command::Explain(a) => explain(a, &Settings::resolve(&cli.global)?, out),
        Command::Extract(a) => extract(a, &Settings::resolve(&cli.global)?, out, err),
        Command::Bench(a) => bench(a, &Settings::resolve(&cli.global)?, out, err),
        Command::Sweep(a) => sweep(a, &Settings::resolve(&cli.global)?, out),
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn pipeline_error(e: PipelineError) -> CliError {
    match e {
        PipelineError::InvalidConfig(_)
        | PipelineError::InvalidGrid(_)
        | PipelineError::EmptyInput(_)
        | PipelineError::MissingGrounding => CliError::Usage(e.to_string()),
        other => CliError::Provider(other.to_string()),
    }
}

fn extraction_error(e: ExtractionError) -> CliError {
    match e {
        ExtractionError::Provider(_) | ExtractionError::ParseFailed { .. } => CliError::Provider(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn explain_error(e: ExplainError) -> CliError {
    match e {
        ExplainError::InvalidThresholds { .. } | ExplainError::Prompt(_) => CliError::Usage(e.to_string()),
        other => CliError::Provider(other.to_string()),
    }
}

fn bench_error(e: BenchError) -> CliError {
    CliError::Usage(e.to_string())
}

fn read_graph(path: &Path) -> Result<KnowledgeGraph, CliError> {
    parse_graph(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn kernel(a: &KernelArgs, cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut options = kea_core::kernel::WlOptions::default();
    if let Some(h) = cli.global.iterations {
        options.iterations = h;
    }
    if a.directed {
        options.directedness = Directedness::Directed;
    }
    let pair = GraphPair::new(
        read_graph(&a.graph1)?,
        read_graph(&a.graph2)?,
        Provenance::ProvidedContext,
    );
    let result = pair_kernel(&pair, &options);
    let mut doc = json!({
        "normalized": result.normalized,
        "raw": result.raw,
        "self_g": result.self_g,
        "self_h": result.self_h,
        "iterations": options.iterations,
        "directedness": options.directedness,
    });
    if a.features {
        let encoded = encode_pair(&pair);
        let features = wl_features_shared(&[&encoded.claim, &encoded.truth], &options);
        doc["features"] = json!({ "graph1": features[0], "graph2": features[1] });
    }
    print_json(out, &doc)?;
    Ok(EXIT_OK)
}

fn detect_cmd(a: &DetectArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let mut cfg = settings.detection.clone();
    if a.open {
        cfg.mode = DetectionMode::OpenDomain;
    } else if a.context_file.is_some() {
        cfg.mode = DetectionMode::ClosedDomain;
    } else if cfg.mode == DetectionMode::ClosedDomain {
        return Err(CliError::Usage(
            "closed-domain detection needs --context-file (or pass --open)".into(),
        ));
    }
    if a.explain {
        cfg.explain_on_detect = true;
    }
    let output = read_text(&a.output_file)?;
    let context = a.context_file.as_deref().map(read_text).transpose()?;
    let llm = llm_client(&settings.providers)?;
    let embeddings = embeddings(&settings.providers);
    let prompt = ExplainPrompt::load().map_err(explain_error)?;
    let grounding = match cfg.mode {
        DetectionMode::OpenDomain => Some(Grounding::build(&settings.providers, &cfg)?),
        DetectionMode::ClosedDomain => None,
    };
    let deps = DetectionDeps {
        llm: llm.as_ref(),
        embeddings: &embeddings,
        grounding: grounding.as_ref().map(Grounding::sources),
        explain_prompt: &prompt,
    };
    let verdict = detect(&output, context.as_deref(), &cfg, &deps).map_err(pipeline_error)?;
    for w in &verdict.warnings {
        writeln!(err, "warning: {w}")?;
    }
    print_json(out, &verdict)?;
    Ok(if a.fail_on_hallucination && verdict.is_hallucination {
        EXIT_FLAGGED
    } else {
        EXIT_OK
    })
}

fn load_trace(path: &Path) -> Result<DetectionTrace, CliError> {
    let text = read_text(path)?;
    if let Ok(v) = serde_json::from_str::<DetectionVerdict>(&text) {
        return Ok(v.trace);
    }
    serde_json::from_str::<DetectionTrace>(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a verdict or trace: {e}", path.display())))
}

fn explain(a: &ExplainArgs, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let trace = load_trace(&a.trace)?;
    let cfg = &settings.detection;
    let llm = llm_client(&settings.providers)?;
    let embeddings = embeddings(&settings.providers);
    let prompt = ExplainPrompt::load().map_err(explain_error)?;
    let pairs = find_contradictions(
        &trace.claim_graph,
        &trace.truth_graph,
        &embeddings,
        cfg.contradiction_thresholds(),
    )
    .map_err(explain_error)?;
    let script = edit_script(&pairs);
    let explanation = narrate(&pairs, &script, llm.as_ref(), &prompt, &cfg.model_id).map_err(explain_error)?;
    print_json(out, &explanation)?;
    Ok(EXIT_OK)
}

fn graph_value(g: &KnowledgeGraph) -> serde_json::Value {
    serde_json::from_str(&serialize_graph(g)).expect("graph documents are JSON")
}

fn extract(a: &ExtractArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let text = read_text(&a.text_file)?;
    if text.trim().is_empty() {
        return Err(CliError::Usage(format!("{} is empty", a.text_file.display())));
    }
    let second = a.pair_with.as_deref().map(read_text).transpose()?.unwrap_or_default();
    let llm = llm_client(&settings.providers)?;
    let options = ExtractionOptions {
        model_id: settings.detection.model_id.clone(),
        retry_limit: settings.detection.retry_limit,
    };
    let result = extract_graph_pair(&text, &second, llm.as_ref(), &options).map_err(extraction_error)?;
    for w in &result.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if a.pair_with.is_some() {
        print_json(
            out,
            &json!({ "graph1": graph_value(&result.graph1), "graph2": graph_value(&result.graph2) }),
        )?;
    } else {
        writeln!(out, "{}", serialize_graph(&result.graph1))?;
    }
    Ok(EXIT_OK)
}

fn parse_fields(specs: &[String]) -> Result<FieldMap, CliError> {
    let mut fields = FieldMap::default();
    for spec in specs {
        let (role, name) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--field expects ROLE=NAME, got {spec:?}")))?;
        let slot = match role.trim() {
            "id" => &mut fields.id,
            "source" => &mut fields.source,
            "generated" => &mut fields.generated,
            "scores" => &mut fields.scores,
            "score_key" => &mut fields.score_key,
            "label" => &mut fields.label,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown field role {other:?} (id, source, generated, scores, score_key, label)"
                )))
            }
        };
        *slot = Some(name.trim().to_owned());
    }
    Ok(fields)
}

fn parse_range(spec: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("--score-range expects LOW,HIGH, got {spec:?}"));
    let (lo, hi) = spec.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn bench(a: &BenchArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let format_name = a
        .format
        .clone()
        .or_else(|| settings.profile.map(|p| p.name().to_owned()))
        .unwrap_or_else(|| "generic".to_owned());
    let format = DatasetFormat::parse(&format_name)
        .ok_or_else(|| CliError::Usage(format!("unknown dataset format {format_name:?}")))?;
    let options = LoadOptions {
        fields: parse_fields(&a.fields)?,
        score_range: a.score_range.as_deref().map(parse_range).transpose()?,
        ..LoadOptions::default()
    };
    let mut dataset = load_dataset(&a.dataset, format, &options).map_err(bench_error)?;
    if let Some(limit) = a.limit {
        dataset.truncate(limit);
    }
    if let Some(n) = a.sample {
        dataset = subsample(&dataset, n, a.seed, format == DatasetFormat::Wikibio);
    }
    let mut cfg = settings.detection.clone();
    if settings.profile.is_none() && a.format.is_some() {
        cfg.mode = if format.is_open_domain() {
            DetectionMode::OpenDomain
        } else {
            DetectionMode::ClosedDomain
        };
    }
    let llm = llm_client(&settings.providers)?;
    let embeddings = embeddings(&settings.providers);
    let prompt = ExplainPrompt::load().map_err(explain_error)?;
    let grounding = match cfg.mode {
        DetectionMode::OpenDomain => Some(Grounding::build(&settings.providers, &cfg)?),
        DetectionMode::ClosedDomain => None,
    };
    let deps = DetectionDeps {
        llm: llm.as_ref(),
        embeddings: &embeddings,
        grounding: grounding.as_ref().map(Grounding::sources),
        explain_prompt: &prompt,
    };
    let bench_options = BenchOptions {
        workers: a.workers.max(1),
        checkpoint: a.checkpoint.clone(),
    };
    let outcome = run_benchmark(&dataset, &cfg, &deps, &bench_options).map_err(bench_error)?;
    let failed = outcome.verdicts.iter().filter(|v| v.error.is_some()).count();
    if failed > 0 {
        writeln!(err, "warning: {failed} of {} examples failed", outcome.verdicts.len())?;
    }
    if let Some(dir) = &a.out {
        write_outputs(dir, &outcome, cfg.kernel_threshold).map_err(bench_error)?;
    }
    print_json(out, &outcome.summary(cfg.kernel_threshold))?;
    Ok(EXIT_OK)
}

fn parse_grid(a: &SweepArgs) -> Result<Vec<f64>, CliError> {
    if let Some(spec) = &a.grid {
        return spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad grid value {s:?}")))
            })
            .collect();
    }
    let step = a.step.unwrap_or(0.05);
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(CliError::Usage(format!("--step must be in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
    grid.dedup();
    Ok(grid)
}

fn sweep(a: &SweepArgs, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let records = read_verdict_log(&a.verdicts).map_err(bench_error)?;
    let scored: Vec<(f64, bool)> = records
        .iter()
        .filter_map(|r| r.score.map(|s| (s, r.gold_label.is_positive())))
        .collect();
    if scored.is_empty() {
        return Err(CliError::Usage(format!("{}: no scored verdicts", a.verdicts.display())));
    }
    let grid = parse_grid(a)?;
    let tallies = sweep_thresholds(&scored, &grid).map_err(pipeline_error)?;
    let threshold = settings.detection.kernel_threshold;
    let outcome = evaluate_records(&records, threshold);
    if let Some(dir) = &a.out {
        write_outputs(dir, &outcome, threshold).map_err(bench_error)?;
    }
    print_json(
        out,
        &json!({
            "tallies": tallies,
            "roc_auc": outcome.roc.as_ref().map(|c| c.auc),
            "pr_auc": outcome.pr.as_ref().map(|c| c.auc),
        }),
    )?;
    Ok(EXIT_OK)
}
