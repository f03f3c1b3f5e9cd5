//! JSON-lines dataset loaders.
//!
//! Default field mappings, overridable through [`FieldMap`]:
//!
//! | format   | id   | source    | generated | annotation                                  |
//! |----------|------|-----------|-----------|---------------------------------------------|
//! | summeval | `id` | `text`    | `decoded` | `expert_annotations[].consistency`, 1 to 5  |
//! | qags_c   | `id` | `article` | `sentence`| `consistency`, 0 to 1, number or list        |
//! | wikibio  | `id` | none      | `sentence`| `annotation`                                |
//! | generic  | `id` | `source`  | `generated` | `label`                                   |
//!
//! Numeric annotations are averaged, rescaled to `[0, 1]` and labeled
//! hallucinated below the label threshold (0.6). QAGS-C records may instead
//! carry `summary_sentences[].responses[].response` yes/no votes, and
//! WikiBio records may be whole passages with `gpt3_sentences` and a
//! parallel `annotation` list; each passage sentence becomes one example.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{BenchError, BenchmarkExample, GoldLabel};

pub const DEFAULT_LABEL_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Summeval,
    QagsC,
    Wikibio,
    Generic,
}

impl DatasetFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "summeval" => Some(Self::Summeval),
            "qags_c" | "qagsc" => Some(Self::QagsC),
            "wikibio" => Some(Self::Wikibio),
            "generic" => Some(Self::Generic),
            _ => None,
        }
    }

    pub fn is_open_domain(self) -> bool {
        matches!(self, Self::Wikibio)
    }
}

/// Field names read from each record. `None` keeps the format default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub id: Option<String>,
    pub source: Option<String>,
    pub generated: Option<String>,
    /// Numeric annotation field (summeval, qags_c).
    pub scores: Option<String>,
    /// Key inside annotation objects, for lists of objects.
    pub score_key: Option<String>,
    /// Categorical label field (wikibio, generic).
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub fields: FieldMap,
    /// Range of raw annotation values, rescaled linearly to `[0, 1]`.
    pub score_range: Option<(f64, f64)>,
    pub label_threshold: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            fields: FieldMap::default(),
            score_range: None,
            label_threshold: DEFAULT_LABEL_THRESHOLD,
        }
    }
}

struct Resolved {
    id: String,
    source: Option<String>,
    generated: String,
    scores: String,
    score_key: String,
    label: String,
    range: (f64, f64),
}

fn resolve(format: DatasetFormat, options: &LoadOptions) -> Resolved {
    let f = &options.fields;
    let pick = |v: &Option<String>, d: &str| v.clone().unwrap_or_else(|| d.to_owned());
    let (source, generated, range) = match format {
        DatasetFormat::Summeval => (Some("text"), "decoded", (1.0, 5.0)),
        DatasetFormat::QagsC => (Some("article"), "sentence", (0.0, 1.0)),
        DatasetFormat::Wikibio => (None, "sentence", (0.0, 1.0)),
        DatasetFormat::Generic => (Some("source"), "generated", (0.0, 1.0)),
    };
    Resolved {
        id: pick(&f.id, "id"),
        source: f.source.clone().or(source.map(str::to_owned)),
        generated: pick(&f.generated, generated),
        scores: pick(
            &f.scores,
            match format {
                DatasetFormat::Summeval => "expert_annotations",
                _ => "consistency",
            },
        ),
        score_key: pick(&f.score_key, "consistency"),
        label: pick(
            &f.label,
            match format {
                DatasetFormat::Wikibio => "annotation",
                _ => "label",
            },
        ),
        range: options.score_range.unwrap_or(range),
    }
}

fn format_err(index: usize, message: impl Into<String>) -> BenchError {
    BenchError::Format {
        index,
        message: message.into(),
    }
}

fn text_field(obj: &Map<String, Value>, key: &str, index: usize) -> Result<String, BenchError> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(format_err(index, format!("field {key:?} is empty"))),
        Some(_) => Err(format_err(index, format!("field {key:?} is not a string"))),
        None => Err(format_err(index, format!("missing field {key:?}"))),
    }
}

fn id_field(obj: &Map<String, Value>, key: &str, index: usize) -> String {
    match obj.get(key) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => index.to_string(),
    }
}

fn numbers(value: &Value, key: &str, index: usize) -> Result<Vec<f64>, BenchError> {
    match value {
        Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
        Value::Array(items) => items
            .iter()
            .map(|item| match item {
                Value::Number(n) => Ok(n.as_f64().unwrap_or(f64::NAN)),
                Value::Object(o) => o
                    .get(key)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| format_err(index, format!("annotation object lacks numeric {key:?}"))),
                _ => Err(format_err(index, "annotation list holds a non-numeric entry")),
            })
            .collect(),
        _ => Err(format_err(index, "annotation is neither a number nor a list")),
    }
}

fn normalized_mean(values: &[f64], range: (f64, f64), index: usize) -> Result<f64, BenchError> {
    if values.is_empty() {
        return Err(format_err(index, "no annotation values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(format_err(index, "non-finite annotation value"));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = range;
    if hi <= lo {
        return Err(format_err(index, format!("empty score range ({lo}, {hi})")));
    }
    Ok((mean - lo) / (hi - lo))
}

fn from_rating(score: f64, threshold: f64) -> GoldLabel {
    if score < threshold {
        GoldLabel::Hallucinated
    } else {
        GoldLabel::Consistent
    }
}

/// Maps an annotation string to a label.
pub fn parse_label(raw: &str) -> Option<GoldLabel> {
    let norm = raw.trim().to_ascii_lowercase().replace([' ', '-'], "_");
    match norm.as_str() {
        "accurate" | "consistent" | "faithful" | "factual" | "0" | "false" | "no" => Some(GoldLabel::Consistent),
        "minor_inaccurate" | "major_inaccurate" | "inaccurate" | "hallucinated" | "hallucination" | "unfaithful"
        | "inconsistent" | "1" | "true" | "yes" => Some(GoldLabel::Hallucinated),
        _ => None,
    }
}

fn label_value(value: &Value, index: usize) -> Result<GoldLabel, BenchError> {
    match value {
        Value::Bool(true) => Ok(GoldLabel::Hallucinated),
        Value::Bool(false) => Ok(GoldLabel::Consistent),
        Value::String(s) => parse_label(s).ok_or_else(|| BenchError::UnknownLabel {
            index,
            label: s.clone(),
        }),
        other => Err(BenchError::UnknownLabel {
            index,
            label: other.to_string(),
        }),
    }
}

// Fraction of "yes" votes per sentence, averaged over sentences.
fn qags_votes(sentences: &[Value], index: usize) -> Result<(String, f64), BenchError> {
    let mut text = Vec::new();
    let mut scores = Vec::new();
    for s in sentences {
        let obj = s
            .as_object()
            .ok_or_else(|| format_err(index, "summary sentence is not an object"))?;
        text.push(text_field(obj, "sentence", index)?);
        let votes = obj
            .get("responses")
            .and_then(Value::as_array)
            .ok_or_else(|| format_err(index, "summary sentence lacks responses"))?;
        let mut yes = 0usize;
        for v in votes {
            let r = v.get("response").and_then(Value::as_str).unwrap_or_default();
            match r.trim().to_ascii_lowercase().as_str() {
                "yes" => yes += 1,
                "no" => {}
                other => {
                    return Err(BenchError::UnknownLabel {
                        index,
                        label: other.to_owned(),
                    })
                }
            }
        }
        if votes.is_empty() {
            return Err(format_err(index, "summary sentence has no votes"));
        }
        scores.push(yes as f64 / votes.len() as f64);
    }
    if scores.is_empty() {
        return Err(format_err(index, "no summary sentences"));
    }
    Ok((text.join(" "), scores.iter().sum::<f64>() / scores.len() as f64))
}

fn record_examples(
    format: DatasetFormat,
    obj: &Map<String, Value>,
    index: usize,
    r: &Resolved,
    options: &LoadOptions,
) -> Result<Vec<BenchmarkExample>, BenchError> {
    let id = id_field(obj, &r.id, index);
    let source = match &r.source {
        Some(key) if format != DatasetFormat::Generic => Some(text_field(obj, key, index)?),
        Some(key) => match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(_) => Some(text_field(obj, key, index)?),
        },
        None => None,
    };
    match format {
        DatasetFormat::Summeval | DatasetFormat::QagsC => {
            let (generated, raw) = match obj.get("summary_sentences").and_then(Value::as_array) {
                Some(sentences) if format == DatasetFormat::QagsC && !obj.contains_key(&r.generated) => {
                    qags_votes(sentences, index)?
                }
                _ => {
                    let generated = text_field(obj, &r.generated, index)?;
                    let value = obj
                        .get(&r.scores)
                        .ok_or_else(|| format_err(index, format!("missing field {:?}", r.scores)))?;
                    let values = numbers(value, &r.score_key, index)?;
                    (generated, normalized_mean(&values, r.range, index)?)
                }
            };
            Ok(vec![BenchmarkExample {
                id,
                source_text: source,
                generated_text: generated,
                gold_label: from_rating(raw, options.label_threshold),
                raw_score: Some(raw),
            }])
        }
        DatasetFormat::Wikibio => {
            if let Some(sentences) = obj.get("gpt3_sentences").and_then(Value::as_array) {
                let labels = obj
                    .get(&r.label)
                    .and_then(Value::as_array)
                    .ok_or_else(|| format_err(index, format!("passage lacks {:?} list", r.label)))?;
                if labels.len() != sentences.len() {
                    return Err(format_err(
                        index,
                        format!("{} sentences but {} annotations", sentences.len(), labels.len()),
                    ));
                }
                sentences
                    .iter()
                    .zip(labels)
                    .enumerate()
                    .map(|(i, (s, l))| {
                        let text = s
                            .as_str()
                            .filter(|t| !t.trim().is_empty())
                            .ok_or_else(|| format_err(index, format!("sentence {i} is not text")))?;
                        Ok(BenchmarkExample {
                            id: format!("{id}:{i}"),
                            source_text: None,
                            generated_text: text.to_owned(),
                            gold_label: label_value(l, index)?,
                            raw_score: None,
                        })
                    })
                    .collect()
            } else {
                let label = obj
                    .get(&r.label)
                    .ok_or_else(|| format_err(index, format!("missing field {:?}", r.label)))?;
                Ok(vec![BenchmarkExample {
                    id,
                    source_text: None,
                    generated_text: text_field(obj, &r.generated, index)?,
                    gold_label: label_value(label, index)?,
                    raw_score: None,
                }])
            }
        }
        DatasetFormat::Generic => {
            let label = obj
                .get(&r.label)
                .ok_or_else(|| format_err(index, format!("missing field {:?}", r.label)))?;
            Ok(vec![BenchmarkExample {
                id,
                source_text: source,
                generated_text: text_field(obj, &r.generated, index)?,
                gold_label: label_value(label, index)?,
                raw_score: obj.get("score").and_then(Value::as_f64),
            }])
        }
    }
}

/// Parses JSON-lines text. Blank lines are skipped; `index` in errors is the
/// zero-based line number.
pub fn parse_dataset(
    text: &str,
    format: DatasetFormat,
    options: &LoadOptions,
) -> Result<Vec<BenchmarkExample>, BenchError> {
    let resolved = resolve(format, options);
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| format_err(index, format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| format_err(index, "record is not an object"))?;
        for example in record_examples(format, obj, index, &resolved, options)? {
            if !ids.insert(example.id.clone()) {
                return Err(format_err(index, format!("duplicate id {:?}", example.id)));
            }
            out.push(example);
        }
    }
    Ok(out)
}

pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    options: &LoadOptions,
) -> Result<Vec<BenchmarkExample>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, format, options)
}
