//! Parsing of LLM extraction responses into triple lists.

use serde_json::{Map, Value};

use crate::kg::KnowledgeGraph;

/// Byte ranges of balanced `{...}` spans, in order of their opening brace.
/// Braces inside JSON string literals are ignored.
fn balanced_spans(text: &str) -> impl Iterator<Item = &str> {
    let bytes = text.as_bytes();
    (0..bytes.len())
        .filter(move |&i| bytes[i] == b'{')
        .filter_map(move |start| {
            let mut depth = 0usize;
            let mut in_string = false;
            let mut escaped = false;
            for (offset, &b) in bytes[start..].iter().enumerate() {
                if in_string {
                    match b {
                        _ if escaped => escaped = false,
                        b'\\' => escaped = true,
                        b'"' => in_string = false,
                        _ => {}
                    }
                    continue;
                }
                match b {
                    b'"' => in_string = true,
                    b'{' => depth += 1,
                    b'}' => {
                        depth -= 1;
                        if depth == 0 {
                            return Some(&text[start..start + offset + 1]);
                        }
                    }
                    _ => {}
                }
            }
            None
        })
}

/// Finds the first balanced brace span that parses as a JSON object.
pub fn find_json_object(text: &str) -> Option<Map<String, Value>> {
    balanced_spans(text).find_map(|span| match serde_json::from_str(span) {
        Ok(Value::Object(map)) => Some(map),
        _ => None,
    })
}

fn coerce_label(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(items) => {
            let parts: Option<Vec<String>> = items
                .iter()
                .map(|v| match v {
                    Value::Array(_) => None,
                    other => coerce_label(other),
                })
                .collect();
            parts.map(|p| p.join(" "))
        }
        Value::Null | Value::Object(_) => None,
    }
}

/// Converts one `knowledge_graphN` array into a graph. Non-string labels are
/// coerced where possible; anything else is skipped with a warning.
pub fn graph_from_value(key: &str, value: &Value, warnings: &mut Vec<String>) -> Result<KnowledgeGraph, String> {
    let items = value
        .as_array()
        .ok_or_else(|| format!("\"{key}\" is not a list of triples"))?;
    let mut raw = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let Some(parts) = item.as_array() else {
            warnings.push(format!("{key}[{index}]: not a list, skipped"));
            continue;
        };
        if parts.len() != 3 {
            warnings.push(format!(
                "{key}[{index}]: expected 3 elements, found {}, skipped",
                parts.len()
            ));
            continue;
        }
        let labels: Option<Vec<String>> = parts.iter().map(coerce_label).collect();
        match labels {
            Some(l) => raw.push((l[0].clone(), l[1].clone(), l[2].clone())),
            None => warnings.push(format!("{key}[{index}]: uncoercible element, skipped")),
        }
    }
    let (graph, build_warnings) = KnowledgeGraph::build(raw);
    warnings.extend(build_warnings.into_iter().map(|w| format!("{key}: {w}")));
    Ok(graph)
}

/// Parses a full response. In single-text mode only `knowledge_graph1` is
/// required and the second graph is discarded.
pub fn parse_response(
    response: &str,
    single_text: bool,
) -> Result<(KnowledgeGraph, KnowledgeGraph, Vec<String>), String> {
    let object = find_json_object(response).ok_or_else(|| "response contains no parseable JSON object".to_string())?;
    let mut warnings = Vec::new();
    let first = object
        .get("knowledge_graph1")
        .ok_or_else(|| "missing key \"knowledge_graph1\"".to_string())?;
    let graph1 = graph_from_value("knowledge_graph1", first, &mut warnings)?;
    if single_text {
        return Ok((graph1, KnowledgeGraph::empty(), warnings));
    }
    let second = object
        .get("knowledge_graph2")
        .ok_or_else(|| "missing key \"knowledge_graph2\"".to_string())?;
    let graph2 = graph_from_value("knowledge_graph2", second, &mut warnings)?;
    Ok((graph1, graph2, warnings))
}
