//! CLI surface: exit codes, artifact shapes, plot determinism.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn regen() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_regen"));
    cmd.current_dir(repo(""));
    cmd
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("regen_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn expand_reports_transcript_miss_with_exit_2() {
    let out = temp_dir("miss").join("g.json");
    let output = regen()
        .args([
            "--oracle",
            "scripted:transcripts/abrupt_stop.transcript.json",
            "expand",
            "--behavior",
            "The ego-vehicle teleported",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("transcript miss"), "stderr: {stderr}");
}

#[test]
fn missing_transcript_file_exits_5() {
    let output = regen()
        .args([
            "--oracle",
            "scripted:transcripts/does_not_exist.json",
            "expand",
            "--behavior",
            "The ego-vehicle stopped abruptly",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(5));
}

#[test]
fn invalid_config_exits_3() {
    let dir = temp_dir("badcfg");
    let mut config: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(repo("fixtures/overconstraint.config.json")).unwrap(),
    )
    .unwrap();
    config["predicates"][0]["predicate_expr"] = "is_flying(delivery_truck1)".into();
    let path = dir.join("bad.config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let output = regen().args(["solve", "--config"]).arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("is_flying"));
}

#[test]
fn max_depth_one_leaves_no_grandparent_causes() {
    let out = temp_dir("depth").join("g.json");
    let status = regen()
        .args([
            "--oracle",
            "scripted:transcripts/abrupt_stop.transcript.json",
            "expand",
            "--behavior",
            "The ego-vehicle stopped abruptly",
            "--max-depth",
            "1",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let graph: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let max_depth = graph["events"]
        .as_object()
        .unwrap()
        .values()
        .map(|e| e["depth"].as_u64().unwrap())
        .max()
        .unwrap();
    assert_eq!(max_depth, 1);
}

#[test]
fn run_then_plot_is_byte_deterministic() {
    let dir = temp_dir("plot");
    let run_dir = dir.join("run");
    let status = regen()
        .args([
            "--oracle",
            "scripted:transcripts/abrupt_stop.transcript.json",
            "run",
            "--config",
            "golden/ambulance.config.json",
            "--out-dir",
        ])
        .arg(&run_dir)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["concrete.json", "trace.json", "verdict.json"] {
        assert!(run_dir.join(name).exists(), "{name} written");
    }
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("verdict.json")).unwrap())
            .unwrap();
    assert_eq!(verdict["verdict"], "accepted");

    let (p1, p2) = (dir.join("a.svg"), dir.join("b.svg"));
    for p in [&p1, &p2] {
        let status = regen()
            .args(["plot", "--trace"])
            .arg(run_dir.join("trace.json"))
            .arg("--out")
            .arg(p)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        std::fs::read(&p1).unwrap(),
        std::fs::read(&p2).unwrap(),
        "two plots of the same trace are identical bytes"
    );
}

#[test]
fn plotting_an_empty_trace_fails() {
    let dir = temp_dir("emptytrace");
    let trace = serde_json::json!({
        "map_id": "straight_2lane",
        "route_id": "straight_2lane/stop_abrupt",
        "dt": 0.05,
        "verdict": "stalled",
        "stage_log": [],
        "ticks": [],
    });
    let path = dir.join("trace.json");
    std::fs::write(&path, serde_json::to_string_pretty(&trace).unwrap()).unwrap();
    let output = regen()
        .args(["plot", "--trace"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn counterfactual_flag_pins_the_property_in_the_trace() {
    let dir = temp_dir("cf");
    // Ground the brake-light scenario from its bundled fixture graph.
    let cfg_dir = dir.join("cfgs");
    let status = regen()
        .args([
            "--oracle",
            "scripted:transcripts/brakelight.transcript.json",
            "ground",
            "--graph",
            "fixtures/brakelight.graph.json",
            "--out-dir",
        ])
        .arg(&cfg_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let run_dir = dir.join("run");
    let status = regen()
        .args([
            "run",
            "--config",
        ])
        .arg(cfg_dir.join("scenario_00.config.json"))
        .args(["--counterfactual", "sedan1.brake_light=off", "--out-dir"])
        .arg(&run_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("trace.json")).unwrap())
            .unwrap();
    let all_off = trace["ticks"].as_array().unwrap().iter().all(|t| {
        t["actors"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|a| a["name"] == "sedan1")
            .all(|a| a["properties"]["brake light"] == "off")
    });
    assert!(all_off, "brake light pinned off for the whole trace");
}

#[test]
fn grounding_a_diamond_graph_yields_two_configs() {
    use regen_core::asset_db::AssetDatabase;
    use regen_core::compiler::compile;
    use regen_core::expansion::{
        enumerate_scenarios, EntityNode, EventNode, GraphEdges, PropertyNode, ScenarioGraph,
    };
    use regen_core::oracle::{
        FnOracle, OracleRequest, RecordingOracle, TemplateId, TranscriptRecorder,
    };

    let dir = temp_dir("diamond");

    // a -> c -> behavior and b -> c -> behavior, entities on a and b.
    let mut events = BTreeMap::new();
    for (id, text, depth) in [
        ("e0", "The ego-vehicle stopped abruptly", 0u32),
        ("e1", "traffic slowed ahead", 1),
        ("e2", "a sedan cut in", 2),
        ("e3", "a delivery truck merged slowly", 2),
    ] {
        events.insert(
            id.to_string(),
            EventNode {
                id: id.into(),
                text: text.into(),
                depth,
                flag: None,
            },
        );
    }
    let mut entities = BTreeMap::new();
    entities.insert(
        "n0".to_string(),
        EntityNode {
            id: "n0".into(),
            asset_id: "sedan".into(),
            instance_name: "sedan1".into(),
        },
    );
    entities.insert(
        "n1".to_string(),
        EntityNode {
            id: "n1".into(),
            asset_id: "delivery truck".into(),
            instance_name: "delivery_truck1".into(),
        },
    );
    let mut properties = BTreeMap::new();
    for (id, entity, key, value) in [
        ("p0", "n0", "behavior", "constant speed"),
        ("p1", "n0", "starting location", "behind the ego-vehicle on adjacent lane"),
        ("p2", "n0", "target speed", "40"),
        ("p3", "n1", "behavior", "constant speed"),
        ("p4", "n1", "starting location", "in front of ego-vehicle on adjacent lane"),
        ("p5", "n1", "target speed", "20"),
    ] {
        properties.insert(
            id.to_string(),
            PropertyNode {
                id: id.into(),
                key: key.into(),
                value: value.into(),
            },
        );
        let _ = entity;
    }
    let mut edges = GraphEdges::default();
    edges.cause.insert(("e1".into(), "e0".into()));
    edges.cause.insert(("e2".into(), "e1".into()));
    edges.cause.insert(("e3".into(), "e1".into()));
    edges.support.insert(("n0".into(), "e2".into()));
    edges.support.insert(("n1".into(), "e3".into()));
    for (p, n) in [("p0", "n0"), ("p1", "n0"), ("p2", "n0"), ("p3", "n1"), ("p4", "n1"), ("p5", "n1")] {
        edges.attr.insert((p.into(), n.into()));
    }
    let graph = ScenarioGraph {
        behavior_node_id: "e0".into(),
        route_id: "straight_2lane/stop_abrupt".into(),
        events,
        entities,
        properties,
        edges,
    };
    let graph_path = dir.join("diamond.graph.json");
    std::fs::write(&graph_path, graph.to_json()).unwrap();

    // Author a transcript for both groundings by recording a programmatic
    // oracle against the real compile calls.
    let scripted = FnOracle(|req: &OracleRequest| {
        assert_eq!(req.template_id, TemplateId::Grounding);
        let agent = if req.vars["causal_graph"].contains("sedan") {
            "sedan1"
        } else {
            "delivery_truck1"
        };
        Ok(format!(
            "<Answer>\nstates:\n- Behind | {agent} | behind_vehicle({agent}, ego-vehicle)\n- Ego Stopped | ego-vehicle | is_currently_stopped(ego-vehicle)\nfsm:\n- [{agent}: Behind]\n- [ego-vehicle: Ego Stopped]\n</Answer>"
        ))
    });
    let recorder = TranscriptRecorder::default();
    let recording = RecordingOracle {
        inner: &scripted,
        recorder: &recorder,
    };
    let db = AssetDatabase::load(repo("assets/driving.assetdb")).unwrap();
    let subs = enumerate_scenarios(&graph);
    assert_eq!(subs.len(), 2, "diamond enumerates two cause paths");
    for sub in &subs {
        compile(sub, &db, &recording).unwrap();
    }
    let transcript_path = dir.join("diamond.transcript.json");
    std::fs::write(
        &transcript_path,
        serde_json::to_string_pretty(&recorder.into_file()).unwrap(),
    )
    .unwrap();

    let out_dir = dir.join("cfgs");
    let status = regen()
        .arg("--oracle")
        .arg(format!("scripted:{}", transcript_path.display()))
        .args(["ground", "--graph"])
        .arg(&graph_path)
        .arg("--out-dir")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let configs: Vec<_> = std::fs::read_dir(&out_dir).unwrap().collect();
    assert_eq!(configs.len(), 2, "one config per enumerated scenario");
}

#[test]
fn eval_writes_a_parseable_report() {
    let dir = temp_dir("eval");
    let out = dir.join("report.json");
    let status = regen()
        .args([
            "--seed",
            "9",
            "eval",
            "corpora/driving_scenarios.txt",
            "--metric",
            "embedding",
            "--sample-size",
            "10",
            "--repeats",
            "10",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["metric"], "embedding");
    assert_eq!(report["repeats"], 10);
    let mean = report["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
}
