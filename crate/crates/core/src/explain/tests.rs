use proptest::prelude::*;

use super::*;
use crate::extraction::MockLlmClient;

fn g(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
    KnowledgeGraph::build(triples.iter().copied()).0
}

fn t(h: &str, r: &str, tl: &str) -> Triple {
    Triple::new(h, r, tl).unwrap()
}

fn france() -> (KnowledgeGraph, KnowledgeGraph) {
    (
        g(&[("France", "capital", "Rome")]),
        g(&[("France", "capital city", "Paris")]),
    )
}

fn pairs_for(claim: &KnowledgeGraph, truth: &KnowledgeGraph) -> Vec<ContradictionPair> {
    find_contradictions(claim, truth, &EmbeddingService::hash64(), Thresholds::default()).unwrap()
}

#[test]
fn france_rome_paris_differs_in_tail() {
    let (claim, truth) = france();
    let pairs = pairs_for(&claim, &truth);
    assert_eq!(pairs.len(), 1);
    let p = &pairs[0];
    assert_eq!(p.claim_triple, t("France", "capital", "Rome"));
    assert_eq!(p.truth_triple, t("France", "capital city", "Paris"));
    assert_eq!(p.differing_slot, Slot::Tail);
    assert_eq!(p.slot_similarities[0].value(), 1.0);
}

#[test]
fn identical_graphs_have_no_contradictions() {
    let both = g(&[("France", "capital", "Rome"), ("France", "capital", "Paris")]);
    assert!(pairs_for(&both, &both).is_empty());
}

#[test]
fn unrelated_triples_have_no_contradictions() {
    let claim = g(&[("Mozart", "composed", "Requiem")]);
    let truth = g(&[("Jupiter", "orbits", "Sun")]);
    assert!(pairs_for(&claim, &truth).is_empty());
}

#[test]
fn empty_sides_have_no_contradictions() {
    let (claim, _) = france();
    assert!(pairs_for(&claim, &KnowledgeGraph::empty()).is_empty());
    assert!(pairs_for(&KnowledgeGraph::empty(), &claim).is_empty());
}

#[test]
fn thresholds_are_validated() {
    assert!(Thresholds::new(0.4, 0.5).is_err());
    assert!(Thresholds::new(1.2, 0.5).is_err());
    assert!(Thresholds::new(0.5, -0.1).is_err());
    assert!(Thresholds::new(0.5, 0.5).is_ok());
    let (claim, truth) = france();
    let bad = Thresholds {
        agree: 0.2,
        disagree: 0.6,
    };
    assert!(matches!(
        find_contradictions(&claim, &truth, &EmbeddingService::hash64(), bad),
        Err(ExplainError::InvalidThresholds { .. })
    ));
}

#[test]
fn each_claim_triple_keeps_its_best_pair() {
    let claim = g(&[("France", "capital", "Rome")]);
    let truth = g(&[("France", "capital city", "Paris"), ("France", "capital", "Paris")]);
    let pairs = pairs_for(&claim, &truth);
    assert_eq!(pairs.len(), 1);
    assert_eq!(pairs[0].truth_triple, t("France", "capital", "Paris"));
}

#[test]
fn france_edit_script() {
    let (claim, truth) = france();
    let script = edit_script(&pairs_for(&claim, &truth));
    assert_eq!(
        script.ops,
        vec![
            EditOp::RemoveEdge(t("France", "capital", "Rome")),
            EditOp::AddEdge(t("France", "capital city", "Paris")),
        ]
    );
    assert!(edit_script(&[]).is_empty());
}

fn pair(c: Triple, tr: Triple) -> ContradictionPair {
    ContradictionPair {
        claim_triple: c,
        truth_triple: tr,
        differing_slot: Slot::Tail,
        slot_similarities: [SimilarityScore::new(1.0); 3],
    }
}

#[test]
fn three_pairs_alternate_six_ops() {
    let pairs: Vec<_> = (0..3)
        .map(|i| pair(t("a", "r", &format!("x{i}")), t("a", "r", &format!("y{i}"))))
        .collect();
    let script = edit_script(&pairs);
    assert_eq!(script.len(), 6);
    for (i, op) in script.ops.iter().enumerate() {
        assert_eq!(matches!(op, EditOp::RemoveEdge(_)), i % 2 == 0);
    }
}

#[test]
fn apply_rejects_missing_triple() {
    let script = edit_script(&[pair(t("a", "r", "b"), t("a", "r", "c"))]);
    assert!(matches!(script.apply(&[]), Err(ExplainError::NotApplicable(_))));
}

fn echo_narrator() -> MockLlmClient {
    MockLlmClient::responding(|req| {
        let lines: Vec<String> = req
            .user_payload()
            .lines()
            .filter(|l| l.contains("claim: "))
            .map(|l| {
                let (_, rest) = l.split_once("claim: ").unwrap();
                let (claim, rest) = rest.split_once(" | ground truth: ").unwrap();
                let (truth, _) = rest.split_once(" | ").unwrap();
                format!("The claim states {claim}, but the ground truth asserts {truth}.")
            })
            .collect();
        lines.join(" ")
    })
}

#[test]
fn narration_mentions_both_sides() {
    let (claim, truth) = france();
    let pairs = pairs_for(&claim, &truth);
    let script = edit_script(&pairs);
    let e = narrate(&pairs, &script, &echo_narrator(), &ExplainPrompt::bundled(), "m").unwrap();
    assert!(e.text.contains("Paris"));
    assert!(e.text.contains("Rome"));
    assert_eq!(e.pairs, pairs);
    assert_eq!(e.script, script);
}

#[test]
fn empty_pairs_use_fallback_without_calls() {
    let client = MockLlmClient::strict();
    let e = narrate(&[], &EditScript::default(), &client, &ExplainPrompt::bundled(), "m").unwrap();
    assert!(e.text.contains("low structural similarity"));
    assert!(client.calls().is_empty());
}

#[test]
fn prompt_enumerates_two_pairs_and_four_ops() {
    let pairs = vec![
        pair(t("a", "r", "b"), t("a", "r", "c")),
        pair(t("d", "s", "e"), t("d", "s", "f")),
    ];
    let script = edit_script(&pairs);
    let req = build_narration_request(&pairs, &script, &ExplainPrompt::bundled(), "m");
    let body = req.user_payload();
    assert_eq!(body.lines().filter(|l| l.contains(". claim: ")).count(), 2);
    let ops = body
        .lines()
        .filter(|l| l.contains(". remove (") || l.contains(". add ("))
        .count();
    assert_eq!(ops, 4);
    assert!(!body.contains("{{"));
    assert!(!body.starts_with('#'));
    assert_eq!(req.temperature(), 0.0);
}

#[test]
fn empty_response_is_an_error() {
    let pairs = vec![pair(t("a", "r", "b"), t("a", "r", "c"))];
    let client = MockLlmClient::lenient("   ");
    let err = narrate(&pairs, &edit_script(&pairs), &client, &ExplainPrompt::bundled(), "m").unwrap_err();
    assert!(matches!(err, ExplainError::EmptyResponse));
}

#[test]
fn narration_is_deterministic() {
    let (claim, truth) = france();
    let run = || {
        let pairs = pairs_for(&claim, &truth);
        let script = edit_script(&pairs);
        narrate(&pairs, &script, &echo_narrator(), &ExplainPrompt::bundled(), "m").unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn prompt_templates_are_validated() {
    assert!(ExplainPrompt::from_text("no placeholders").is_err());
    let p = ExplainPrompt::from_text("# v9\n{{contradictions}} / {{edit_operations}}").unwrap();
    assert_eq!(p.version(), "v9");
    assert_eq!(ExplainPrompt::bundled().version(), "explain-prompt v1");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "C={{contradictions}} E={{edit_operations}}").unwrap();
    let p = ExplainPrompt::from_file(&path).unwrap();
    assert_eq!(p.render(&[], &EditScript::default()), "C= E=");
    assert!(ExplainPrompt::from_file(&dir.path().join("missing")).is_err());
}

const WORDS: &[&str] = &[
    "France",
    "Paris",
    "Rome",
    "capital",
    "capital city",
    "Italy",
    "city",
    "river",
];

fn arb_graph() -> impl Strategy<Value = KnowledgeGraph> {
    proptest::collection::vec((0..WORDS.len(), 0..WORDS.len(), 0..WORDS.len()), 0..5)
        .prop_map(|v| KnowledgeGraph::build(v.into_iter().map(|(a, b, c)| (WORDS[a], WORDS[b], WORDS[c]))).0)
}

fn arb_triple() -> impl Strategy<Value = Triple> {
    (0..WORDS.len(), 0..WORDS.len(), 0..WORDS.len()).prop_map(|(a, b, c)| t(WORDS[a], WORDS[b], WORDS[c]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_pairs_satisfy_slot_pattern(claim in arb_graph(), truth in arb_graph()) {
        let th = Thresholds::default();
        for p in pairs_for(&claim, &truth) {
            for (slot, s) in Slot::ALL.into_iter().zip(&p.slot_similarities) {
                if slot == p.differing_slot {
                    prop_assert!(s.value() < th.disagree);
                } else {
                    prop_assert!(s.value() >= th.agree);
                }
            }
            prop_assert!(claim.contains(&p.claim_triple));
            prop_assert!(truth.contains(&p.truth_triple));
        }
    }

    #[test]
    fn script_maps_claim_side_to_truth_side(raw in proptest::collection::vec((arb_triple(), arb_triple()), 0..6)) {
        let pairs: Vec<_> = raw.into_iter().map(|(c, tr)| pair(c, tr)).collect();
        let claim_side: Vec<Triple> = pairs.iter().map(|p| p.claim_triple.clone()).collect();
        let mut truth_side: Vec<Triple> = pairs.iter().map(|p| p.truth_triple.clone()).collect();
        let mut applied = edit_script(&pairs).apply(&claim_side).unwrap();
        applied.sort();
        truth_side.sort();
        prop_assert_eq!(applied, truth_side);
    }
}
