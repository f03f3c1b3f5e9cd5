//! The knowledge-graph construction prompt: entity detection, cross-text
//! coreference resolution, relation extraction and refinement, followed by
//! two worked examples.

use super::{ExtractionError, LlmRequest};

// Stand-in source texts for the two in-context examples. They are written
// to be consistent with the example outputs that follow them.
const SAMPLE_TEXT1: &str = "A&E Networks will simulcast a remake of Roots in 2016. \
The original Roots premiered in 1977 and ran for four seasons as a miniseries. \
Roots followed Kunta Kinte, a free black man who was sold into slavery.";

const SAMPLE_TEXT2: &str = "Roots is one of the biggest TV events of all time and had a \
staggering audience of over 100 million viewers. The story, which premiered in 1977, was \
about an African-American slave and his descendants, and it is now being reimagined for \
new audiences.";

const SAMPLE_TEXT3: &str = "ISIS has released more than 200 Yazidis, a minority group, \
a Peshmerga commander said. Most of them were children and elderly Yazidis. The \
commander said the freed Yazidis are released into Kurdish care.";

const SAMPLE_TEXT4: &str = "More than 200 Yazidis, a minority group killed and displaced \
by ISIS, have been released, including children and elderly Yazidis, a Peshmerga \
commander said. The Peshmerga received the freed Yazidis and sent the freed Yazidis to \
Irbil. Arab tribal leaders helped coordinate the release of Yazidis.";

const EXAMPLE1_OUTPUT: &str = r#"{
  "knowledge_graph1": [
      ["A&E Networks", "will simulcast in 2016", "Roots"],
      ["Roots", "premiered in", "1977"],
      ["Roots", "ran for", "four seasons"],
      ["Roots", "instance of", "miniseries"],
      ["Roots", "followed", "Kunta Kinte"],
      ["Kunta Kinte", "was sold into", "slavery"],
      ["Kunta Kinte", "was a", "free black man"]
  ],
  "knowledge_graph2": [
      ["Roots", "one of the", "biggest TV events of all time"],
      ["Roots", "had a staggering audience of", "over 100 million viewers"],
      ["Roots", "being", "reimagined for new audiences"],
      ["Roots", "was about", "an African-American slave and his descendants"],
      ["Roots", "premiered", "1977"]
  ]
}"#;

const EXAMPLE2_OUTPUT: &str = r#"{
  "knowledge_graph1": [
      ["ISIS", "released", "more than 200 Yazidis"],
      ["Yazidis", "are", "minority group"],
      ["ISIS", "released", "children and elderly Yazidis"],
      ["Peshmerga commander", "said", "freed Yazidis are released"]
  ],
  "knowledge_graph2": [
      ["ISIS", "released", "more than 200 Yazidis"],
      ["Yazidis", "are", "minority group"],
      ["Yazidis", "killed and displaced by", "ISIS"],
      ["ISIS", "released", "children and elderly Yazidis"],
      ["Peshmerga commander", "said", "freed Yazidis are released"],
      ["Peshmerga", "received", "freed Yazidis"],
      ["Peshmerga", "sent freed Yazidis to", "Irbil"],
      ["Arab tribal leaders", "helped coordinate", "release of Yazidis"]
  ]
}"#;

fn text_pair(text1: &str, text2: &str) -> String {
    format!("TEXT1: \n{text1}\n\nTEXT2:\n{text2}")
}

/// The full system prompt, including both in-context examples.
pub fn extraction_system_prompt() -> String {
    let mut s = String::with_capacity(6000);
    s.push_str("You are an expert at creating knowledge graphs based on text.\n");
    s.push_str("You will receive two separate pieces of text, and you must perform the following steps on each piece of text:\n");
    s.push_str("1. Entity detection: Select key and crucial entities from the text. Keep these entities short and concise and skip less important details of the text\n");
    s.push_str("2. Coreference resolution: Across both texts, ensure that you use the same entity name for the same concept. For example, \"He\" may actually refer to the entity \"Peter\". Also apply this step between texts, so that the two knowledge graphs can be compared as easily as possible without confusion.\n");
    s.push_str("3. Relation extraction: Identify semantic relationships between detected entities. These relationships should be encapsulated as a simple and concise relation such as \"began in\", or \"will simulcast\", for example.\n");
    s.push_str("4. Knowledge Graph refinement: Once the two knowledge graphs have been created, try to ensure that similar triples between the two texts / knowledge graphs are represented the same way, to avoid confusion. For example, if two different entities refer to a similar event or concept, relabel them to be the same across the two knowledge graphs.\n\n");
    s.push_str("Format your response as a JSON object that can be directly parsed without any edits to your response. This means that you are not allowed to include any text not part of the knowledge graphs.\n");
    s.push_str("In the JSON object, one element should be the knowledge graph for the first text, and another element should be the knowledge graph for the second text.\n");
    s.push_str("Each knowledge graph should be a list of triples, with each triple being a python list of the form [\"Peter\", \"height\", \"180cm\"].\n\n");
    s.push_str("See below for some examples:\n\n");
    s.push_str("EXAMPLE 1:\n");
    s.push_str(&text_pair(SAMPLE_TEXT1, SAMPLE_TEXT2));
    s.push_str("\n\nYOUR OUTPUT:\n");
    s.push_str(EXAMPLE1_OUTPUT);
    s.push_str("\n\nEXAMPLE 2:\n");
    s.push_str(&text_pair(SAMPLE_TEXT3, SAMPLE_TEXT4));
    s.push_str("\n\nYOUR OUTPUT:\n");
    s.push_str(EXAMPLE2_OUTPUT);
    s
}

/// Builds the extraction request for a text pair. An empty `text2` selects
/// single-text mode, where `text1` fills both slots.
pub fn build_extraction_prompt(text1: &str, text2: &str, model_id: &str) -> Result<LlmRequest, ExtractionError> {
    if text1.trim().is_empty() {
        return Err(ExtractionError::EmptyText);
    }
    let second = if text2.trim().is_empty() { text1 } else { text2 };
    Ok(LlmRequest::new(
        extraction_system_prompt(),
        text_pair(text1, second),
        model_id,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_has_four_steps_and_both_texts() {
        let req = build_extraction_prompt("Roots premiered in 1977.", "Roots ran 1977–1980.", "m").unwrap();
        for step in [
            "1. Entity detection",
            "2. Coreference resolution",
            "3. Relation extraction",
            "4. Knowledge Graph refinement",
        ] {
            assert!(req.system_prompt().contains(step), "missing {step}");
        }
        assert_eq!(
            req.user_payload(),
            "TEXT1: \nRoots premiered in 1977.\n\nTEXT2:\nRoots ran 1977–1980."
        );
        assert_eq!(req.temperature(), 0.0);
    }

    #[test]
    fn in_context_examples_are_valid_json() {
        for example in [EXAMPLE1_OUTPUT, EXAMPLE2_OUTPUT] {
            let v: serde_json::Value = serde_json::from_str(example).unwrap();
            assert!(v["knowledge_graph1"].is_array());
            assert!(v["knowledge_graph2"].is_array());
        }
        let prompt = extraction_system_prompt();
        assert!(prompt.contains("EXAMPLE 1:") && prompt.contains("EXAMPLE 2:"));
        assert!(prompt.contains("[\"Roots\", \"premiered in\", \"1977\"]"));
    }

    #[test]
    fn single_text_duplicates() {
        let req = build_extraction_prompt("x", "", "m").unwrap();
        assert_eq!(req.user_payload(), "TEXT1: \nx\n\nTEXT2:\nx");
    }

    #[test]
    fn empty_first_text_rejected() {
        assert!(matches!(
            build_extraction_prompt("  ", "y", "m"),
            Err(ExtractionError::EmptyText)
        ));
    }

    #[test]
    fn deterministic() {
        let a = build_extraction_prompt("a b", "c", "m").unwrap();
        let b = build_extraction_prompt("a b", "c", "m").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
