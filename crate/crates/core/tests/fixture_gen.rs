//! Regenerates the bundled transcripts, golden files, and config fixtures.
//!
//! Run explicitly after changing templates, the asset database, or the
//! scripted exchanges:
//!
//! ```text
//! cargo test -p regen-core --test fixture_gen -- --ignored
//! ```
//!
//! Recording wraps the same programmatic oracles the integration tests use,
//! so transcript prompts always match the pipeline's real bytes.

mod common;

use common::*;
use regen_core::compiler::compile;
use regen_core::expansion::{enumerate_scenarios, expand, init_graph, ExpansionBudget};
use regen_core::oracle::{RecordingOracle, TranscriptRecorder};

fn write(path: &str, contents: &str) {
    let full = repo_path(path);
    std::fs::create_dir_all(full.parent().unwrap()).unwrap();
    std::fs::write(&full, contents).unwrap();
    println!("wrote {}", full.display());
}

#[test]
#[ignore = "regenerates bundled fixtures in place"]
fn regenerate_bundled_fixtures() {
    let db = driving_db();
    let budget = ExpansionBudget::default();

    // Abrupt-stop transcript + golden graph + golden config.
    let recorder = TranscriptRecorder::default();
    let inner = abrupt_stop_oracle();
    let oracle = RecordingOracle {
        inner: &inner,
        recorder: &recorder,
    };
    let graph = init_graph(&abrupt_stop_behavior()).unwrap();
    let graph = expand(graph, &db, &budget, &oracle, None).unwrap();
    write("golden/abrupt_stop.graph.json", &graph.to_json());

    let subs = enumerate_scenarios(&graph);
    assert_eq!(subs.len(), 4);
    for sub in &subs {
        let config = compile(sub, &db, &oracle).unwrap();
        if config
            .causal_graph
            .iter()
            .any(|t| t.starts_with("emergency vehicle"))
        {
            write("golden/ambulance.config.json", &config.to_json());
        }
    }
    let file = recorder.into_file();
    write(
        "transcripts/abrupt_stop.transcript.json",
        &serde_json::to_string_pretty(&file).unwrap(),
    );

    // Brake-light counterfactual fixture.
    let recorder = TranscriptRecorder::default();
    let inner = brakelight_oracle();
    let oracle = RecordingOracle {
        inner: &inner,
        recorder: &recorder,
    };
    let graph = init_graph(&abrupt_stop_behavior()).unwrap();
    let graph = expand(graph, &db, &budget, &oracle, None).unwrap();
    write("fixtures/brakelight.graph.json", &graph.to_json());
    for sub in enumerate_scenarios(&graph) {
        compile(&sub, &db, &oracle).unwrap();
    }
    let file = recorder.into_file();
    write(
        "transcripts/brakelight.transcript.json",
        &serde_json::to_string_pretty(&file).unwrap(),
    );

    // Over-constrained delivery-truck fixture.
    write(
        "fixtures/overconstraint.config.json",
        &overconstraint_config().to_json(),
    );
}
