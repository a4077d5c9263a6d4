//! Replay the bundled transcripts through the scripted oracle backend and
//! check the results against the golden files.

mod common;

use common::*;
use regen_core::compiler::compile;
use regen_core::expansion::{enumerate_scenarios, expand, init_graph, ExpansionBudget, ScenarioGraph};
use regen_core::oracle::OracleHandle;

#[test]
fn abrupt_stop_transcript_reproduces_the_golden_graph() {
    let db = driving_db();
    let oracle =
        OracleHandle::scripted_from_path(repo_path("transcripts/abrupt_stop.transcript.json"))
            .unwrap();
    let graph = init_graph(&abrupt_stop_behavior()).unwrap();
    let graph = expand(graph, &db, &ExpansionBudget::default(), &oracle, None).unwrap();

    let golden_text = std::fs::read_to_string(repo_path("golden/abrupt_stop.graph.json")).unwrap();
    let golden = ScenarioGraph::from_json(&golden_text).unwrap();
    assert_eq!(graph, golden, "replayed graph differs from golden");
    assert_eq!(graph.to_json(), golden_text.trim_end(), "byte-stable serialization");
}

#[test]
fn abrupt_stop_transcript_reproduces_the_golden_config() {
    let db = driving_db();
    let oracle =
        OracleHandle::scripted_from_path(repo_path("transcripts/abrupt_stop.transcript.json"))
            .unwrap();
    let graph = init_graph(&abrupt_stop_behavior()).unwrap();
    let graph = expand(graph, &db, &ExpansionBudget::default(), &oracle, None).unwrap();
    let sub = enumerate_scenarios(&graph)
        .into_iter()
        .find(|s| s.events.values().any(|e| e.text.starts_with("emergency")))
        .unwrap();
    let config = compile(&sub, &db, &oracle).unwrap();
    let golden = std::fs::read_to_string(repo_path("golden/ambulance.config.json")).unwrap();
    assert_eq!(config.to_json(), golden.trim_end());
}

#[test]
fn transcript_miss_names_the_template_and_hash() {
    let db = driving_db();
    let oracle =
        OracleHandle::scripted_from_path(repo_path("transcripts/abrupt_stop.transcript.json"))
            .unwrap();
    // A different behavior renders different prompts: every call misses.
    let other = regen_core::expansion::BehaviorSpec::new(
        "The ego-vehicle changed lanes",
        "straight_2lane/cruise",
        &map_library(),
    )
    .unwrap();
    let graph = init_graph(&other).unwrap();
    let err = expand(graph, &db, &ExpansionBudget::default(), &oracle, None).unwrap_err();
    let message = err.to_string();
    assert!(
        message.contains("transcript miss") && message.contains("event_proposal"),
        "unexpected error: {message}"
    );
}
