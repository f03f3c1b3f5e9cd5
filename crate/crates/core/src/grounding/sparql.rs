//! Query builders and SPARQL-JSON result parsing.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::provider::ProviderError;

pub const WIKIDATA_SPARQL_URL: &str = "https://query.wikidata.org/sparql";
pub const ENWIKI_SITE: &str = "https://en.wikipedia.org/";

/// Leading comment tag identifying which builder produced a query.
pub const PAIR_TAG: &str = "#kea:pair";
pub const DESCRIBE_TAG: &str = "#kea:describe";

/// Direct (truthy) statements `item1 --p--> item2` with English labels.
pub fn pair_query(item1: &str, item2: &str) -> String {
    format!(
        "{PAIR_TAG} {item1} {item2}
SELECT ?p ?propLabel ?item1Label ?item2Label WHERE {{
  BIND(wd:{item1} AS ?item1)
  BIND(wd:{item2} AS ?item2)
  ?item1 ?p ?item2 .
  ?prop wikibase:directClaim ?p .
  SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"en\". }}
}}"
    )
}

/// English label, description and English Wikipedia article of one item.
pub fn describe_query(item: &str) -> String {
    format!(
        "{DESCRIBE_TAG} {item}
SELECT ?itemLabel ?itemDescription ?article WHERE {{
  BIND(wd:{item} AS ?item)
  OPTIONAL {{ ?article schema:about ?item ; schema:isPartOf <{ENWIKI_SITE}> . }}
  SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"en\". }}
}}"
    )
}

/// Rows of variable bindings, values flattened to their lexical form.
pub type Bindings = Vec<BTreeMap<String, String>>;

pub fn parse_results(body: &str) -> Result<Bindings, ProviderError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| ProviderError::InvalidResponse(format!("SPARQL JSON: {e}")))?;
    let rows = value
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| ProviderError::InvalidResponse("missing results.bindings".into()))?;
    rows.iter()
        .map(|row| {
            let obj = row
                .as_object()
                .ok_or_else(|| ProviderError::InvalidResponse("binding row is not an object".into()))?;
            Ok(obj
                .iter()
                .filter_map(|(var, term)| {
                    term.get("value")
                        .and_then(Value::as_str)
                        .map(|v| (var.clone(), v.to_owned()))
                })
                .collect())
        })
        .collect()
}

/// Builds a SPARQL-JSON document from rows of literal bindings.
pub fn results_json(vars: &[&str], rows: &[Vec<(&str, String)>]) -> String {
    let bindings: Vec<Value> = rows
        .iter()
        .map(|row| {
            let map: serde_json::Map<String, Value> = row
                .iter()
                .map(|(var, v)| {
                    let kind = if v.starts_with("http://") || v.starts_with("https://") {
                        "uri"
                    } else {
                        "literal"
                    };
                    ((*var).to_owned(), serde_json::json!({"type": kind, "value": v}))
                })
                .collect();
            Value::Object(map)
        })
        .collect();
    serde_json::json!({"head": {"vars": vars}, "results": {"bindings": bindings}}).to_string()
}

/// Article title from an English Wikipedia URL, left percent-encoded.
pub fn article_title(url: &str) -> Option<&str> {
    let rest = url.split("/wiki/").nth(1)?;
    (!rest.is_empty()).then_some(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_query_shape() {
        let q = pair_query("Q937", "Q3012");
        assert!(q.starts_with("#kea:pair Q937 Q3012\n"));
        assert!(q.contains("wd:Q937"));
        assert!(q.contains("wd:Q3012"));
        assert!(q.contains("wikibase:directClaim"));
        assert!(q.contains("wikibase:label"));
    }

    #[test]
    fn results_round_trip() {
        let body = results_json(&["propLabel"], &[vec![("propLabel", "place of birth".into())], vec![]]);
        let rows = parse_results(&body).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0]["propLabel"], "place of birth");
        assert!(rows[1].is_empty());
    }

    #[test]
    fn malformed_results_rejected() {
        assert!(parse_results("{}").is_err());
        assert!(parse_results("not json").is_err());
    }

    #[test]
    fn titles_from_urls() {
        assert_eq!(
            article_title("https://en.wikipedia.org/wiki/Albert_Einstein"),
            Some("Albert_Einstein")
        );
        assert_eq!(article_title("https://example.org/"), None);
    }
}
