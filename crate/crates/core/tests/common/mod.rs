//! Shared fixtures: programmatic oracles replaying the bundled scenario
//! exchanges, used both by integration tests and by the transcript/golden
//! generator.
#![allow(dead_code)] // each test binary uses a subset

use std::collections::BTreeMap;

use regen_core::asset_db::AssetDatabase;
use regen_core::expansion::BehaviorSpec;
use regen_core::oracle::{FnOracle, OracleError, OracleRequest, QueryOracle, TemplateId};
use regen_core::sim2d::MapLibrary;

pub const ABRUPT_STOP: &str = "The ego-vehicle stopped abruptly";

pub fn repo_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

pub fn driving_db() -> AssetDatabase {
    AssetDatabase::load(repo_path("assets/driving.assetdb")).unwrap()
}

pub fn map_library() -> MapLibrary {
    MapLibrary::new(repo_path("maps"))
}

pub fn abrupt_stop_behavior() -> BehaviorSpec {
    BehaviorSpec::new(ABRUPT_STOP, "straight_2lane/stop_abrupt", &map_library()).unwrap()
}

fn answer(lines: &[String]) -> String {
    format!(
        "Sure, let's think step by step.\n...\n<Answer>\n{}\n</Answer>",
        lines.join("\n")
    )
}

fn chosen(key: &str, values: &[&str]) -> String {
    let quoted: Vec<String> = values.iter().map(|v| format!("'{v}'")).collect();
    answer(&[format!("- {key}: [{}]", quoted.join(", "))])
}

fn selection_key(vars: &BTreeMap<String, String>) -> String {
    // First line of the rendered candidate map: "- <key>: [..]".
    let line = vars["candidate_values"].lines().next().unwrap_or_default();
    line.trim_start_matches('-')
        .split(": [")
        .next()
        .unwrap_or_default()
        .trim()
        .to_string()
}

const LOCATION_PHRASES: [&str; 4] = [
    "behind the ego-vehicle on adjacent lane",
    "behind the ego-vehicle on same lane",
    "in front of ego-vehicle on adjacent lane",
    "in front of ego-vehicle on same lane",
];

/// Replays the abrupt-stop expansion and grounding exchanges: six causes
/// accepted, "a jaywalker in another city" rejected, only the ambulance
/// supporting the emergency-vehicle event, the tree and animal events left
/// unsimulatable, siren on, start behind the ego on the adjacent lane.
pub fn abrupt_stop_oracle() -> impl QueryOracle {
    FnOracle(|req: &OracleRequest| -> Result<String, OracleError> {
        match req.template_id {
            TemplateId::EventProposal | TemplateId::EventProposalWithPrior => {
                Ok(answer(&[
                    "- a jaywalker walked in front: A pedestrian unexpectedly stepped into the road directly ahead.".into(),
                    "- animal on the road: An animal wandered onto the roadway ahead of the ego-vehicle.".into(),
                    "- emergency vehicle approaching from behind: An emergency vehicle came up from behind with its siren on.".into(),
                    "- debris in the road: Loose debris lay on the roadway directly ahead.".into(),
                    "- a tree fell in front: A tree toppled onto the road just ahead.".into(),
                    "- a jaywalker in another city: A pedestrian crossed a street somewhere far away.".into(),
                    "- a cyclist changed lanes: A cyclist swerved into the ego-vehicle's lane.".into(),
                ]))
            }
            TemplateId::EdgeSelection => {
                let node_name = req.vars["node_name"].as_str();
                let key = selection_key(&req.vars);
                let reply = match (node_name, key.as_str()) {
                    ("cause", _) => chosen(
                        &key,
                        &[
                            "a jaywalker walked in front",
                            "animal on the road",
                            "emergency vehicle approaching from behind",
                            "debris in the road",
                            "a tree fell in front",
                            "a cyclist changed lanes",
                        ],
                    ),
                    ("entity", "a jaywalker walked in front") => chosen(&key, &["pedestrian"]),
                    ("entity", "animal on the road") => chosen(&key, &[]),
                    ("entity", "emergency vehicle approaching from behind") => {
                        chosen(&key, &["ambulance"])
                    }
                    ("entity", "debris in the road") => chosen(&key, &["debris"]),
                    ("entity", "a tree fell in front") => chosen(&key, &[]),
                    ("entity", "a cyclist changed lanes") => chosen(&key, &["bicycle"]),
                    ("behavior", "pedestrian1") => chosen(&key, &["walking"]),
                    ("behavior", "ambulance1") => chosen(&key, &["constant speed"]),
                    ("behavior", "debris1") => chosen(&key, &["stationary"]),
                    ("behavior", "bicycle1") => chosen(&key, &["change lanes"]),
                    ("siren", "ambulance1") => chosen(&key, &["on"]),
                    ("starting location", "ambulance1") => {
                        chosen(&key, &["behind the ego-vehicle on adjacent lane"])
                    }
                    ("starting location", "pedestrian1") => {
                        chosen(&key, &["in front of ego-vehicle on same lane"])
                    }
                    ("starting location", "bicycle1") => {
                        chosen(&key, &["in front of ego-vehicle on adjacent lane"])
                    }
                    ("ending location", "ambulance1") => {
                        chosen(&key, &["in front of ego-vehicle on adjacent lane"])
                    }
                    ("ending location", "pedestrian1") => {
                        chosen(&key, &["in front of ego-vehicle on adjacent lane"])
                    }
                    ("ending location", "bicycle1") => {
                        chosen(&key, &["in front of ego-vehicle on same lane"])
                    }
                    ("target speed", "ambulance1") => chosen(&key, &["40"]),
                    ("target speed", "bicycle1") => chosen(&key, &["15"]),
                    ("location", "debris1") => {
                        chosen(&key, &["in front of ego-vehicle on same lane"])
                    }
                    other => {
                        return Err(OracleError::Transport(format!(
                            "abrupt-stop oracle has no edge-selection script for {other:?}"
                        )))
                    }
                };
                Ok(reply)
            }
            TemplateId::PropertyProposal => {
                let node_name = req.vars["node_name"].as_str();
                let entity = req.vars["entities_name"]
                    .trim_start_matches('-')
                    .split(':')
                    .next()
                    .unwrap_or_default()
                    .trim()
                    .to_string();
                let values: Vec<&str> = match (node_name, entity.as_str()) {
                    ("starting location", _) | ("ending location", _) => {
                        LOCATION_PHRASES.to_vec()
                    }
                    ("target speed", "ambulance1") => vec!["30", "40", "50"],
                    ("target speed", "bicycle1") => vec!["10", "15", "20"],
                    ("location", "debris1") => vec![
                        "in front of ego-vehicle on same lane",
                        "behind the ego-vehicle on same lane",
                    ],
                    other => {
                        return Err(OracleError::Transport(format!(
                            "abrupt-stop oracle has no property proposal for {other:?}"
                        )))
                    }
                };
                Ok(chosen(&entity, &values))
            }
            TemplateId::Grounding => {
                let chain = req.vars["causal_graph"].as_str();
                let lines: Vec<String> = if chain.contains("emergency vehicle") {
                    vec![
                        "states:".into(),
                        "- Ambulance Approaching | ambulance1 | behind_vehicle(ambulance1, ego-vehicle) and is_currently_moving(ambulance1)".into(),
                        "- Ambulance Close to Ego | ambulance1 | are_close_by(ambulance1, ego-vehicle) and is_currently_moving(ambulance1)".into(),
                        "- Ambulance Passing Ego | ambulance1 | right_in_front(ambulance1, ego-vehicle) and is_currently_moving(ambulance1)".into(),
                        "- Ego Driving Steady | ego-vehicle | is_ego_driving_steady(ego-vehicle)".into(),
                        "- Ego Braking | ego-vehicle | is_braking(ego-vehicle)".into(),
                        "- Ego Stopped Abruptly | ego-vehicle | is_currently_stopped(ego-vehicle)".into(),
                        "fsm:".into(),
                        "- [ambulance1: Ambulance Approaching, ego-vehicle: Ego Driving Steady]".into(),
                        "- [ambulance1: Ambulance Close to Ego]".into(),
                        "- [ego-vehicle: Ego Braking]".into(),
                        "- [ego-vehicle: Ego Stopped Abruptly]".into(),
                        "- [ambulance1: Ambulance Passing Ego]".into(),
                    ]
                } else if chain.contains("jaywalker") {
                    vec![
                        "states:".into(),
                        "- Pedestrian In Front | pedestrian1 | right_in_front(pedestrian1, ego-vehicle)".into(),
                        "- Ego Driving Steady | ego-vehicle | is_ego_driving_steady(ego-vehicle)".into(),
                        "- Ego Braking | ego-vehicle | is_braking(ego-vehicle)".into(),
                        "- Ego Stopped Abruptly | ego-vehicle | is_currently_stopped(ego-vehicle)".into(),
                        "fsm:".into(),
                        "- [pedestrian1: Pedestrian In Front, ego-vehicle: Ego Driving Steady]".into(),
                        "- [ego-vehicle: Ego Braking]".into(),
                        "- [ego-vehicle: Ego Stopped Abruptly]".into(),
                    ]
                } else if chain.contains("debris") {
                    vec![
                        "states:".into(),
                        "- Debris Ahead | debris1 | right_in_front(debris1, ego-vehicle)".into(),
                        "- Debris Still Ahead | debris1 | right_in_front(debris1, ego-vehicle)".into(),
                        "- Ego Driving Steady | ego-vehicle | is_ego_driving_steady(ego-vehicle)".into(),
                        "- Ego Braking | ego-vehicle | is_braking(ego-vehicle)".into(),
                        "- Ego Stopped Abruptly | ego-vehicle | is_currently_stopped(ego-vehicle)".into(),
                        "fsm:".into(),
                        "- [debris1: Debris Ahead, ego-vehicle: Ego Driving Steady]".into(),
                        "- [ego-vehicle: Ego Braking]".into(),
                        "- [ego-vehicle: Ego Stopped Abruptly, debris1: Debris Still Ahead]".into(),
                    ]
                } else if chain.contains("cyclist") {
                    vec![
                        "states:".into(),
                        "- Cyclist Ahead | bicycle1 | are_close_by(bicycle1, ego-vehicle) and is_currently_moving(bicycle1)".into(),
                        "- Cyclist In Ego Lane | bicycle1 | in_lane(bicycle1, l0)".into(),
                        "- Ego Driving Steady | ego-vehicle | is_ego_driving_steady(ego-vehicle)".into(),
                        "- Ego Braking | ego-vehicle | is_braking(ego-vehicle)".into(),
                        "- Ego Stopped Abruptly | ego-vehicle | is_currently_stopped(ego-vehicle)".into(),
                        "fsm:".into(),
                        "- [bicycle1: Cyclist Ahead, ego-vehicle: Ego Driving Steady]".into(),
                        "- [ego-vehicle: Ego Braking]".into(),
                        "- [ego-vehicle: Ego Stopped Abruptly]".into(),
                        "- [bicycle1: Cyclist In Ego Lane]".into(),
                    ]
                } else {
                    return Err(OracleError::Transport(format!(
                        "abrupt-stop oracle has no grounding script for chain {chain}"
                    )));
                };
                Ok(answer(&lines))
            }
        }
    })
}

/// The delivery-truck over-constraint fixture: the final stage demands the
/// truck still be exiting the intersection at the exact moment the ego
/// finishes stopping, which the dynamics cannot satisfy.
pub fn overconstraint_config() -> regen_core::compiler::ScenarioConfig {
    use regen_core::compiler::*;
    let behavioral = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    };
    let state = |name: &str, agent: &str, expr: &str| AbstractState {
        name: name.into(),
        agent: agent.into(),
        predicate_expr: expr.into(),
    };
    let req = |agent: &str, state: &str| StageRequirement {
        agent: agent.into(),
        state: state.into(),
    };
    ScenarioConfig {
        narrative: "an object fell off a delivery truck -> The ego-vehicle stopped abruptly at the intersection".into(),
        causal_graph: vec![
            "an object fell off a delivery truck".into(),
            "The ego-vehicle stopped abruptly at the intersection".into(),
        ],
        entities: vec![
            EntitySpec {
                name: "delivery_truck1".into(),
                entity_type: EntityType::Agent,
                asset_id: "delivery truck".into(),
                behavioral_properties: behavioral(&[
                    ("action", "constant speed"),
                    ("target speed", "28.8"),
                ]),
                static_properties: BTreeMap::new(),
            },
            EntitySpec {
                name: "box1".into(),
                entity_type: EntityType::Object,
                asset_id: "box".into(),
                behavioral_properties: behavioral(&[
                    ("action", "stop abruptly"),
                    ("target speed", "28.8"),
                ]),
                static_properties: BTreeMap::new(),
            },
            EntitySpec {
                name: "ego-vehicle".into(),
                entity_type: EntityType::Agent,
                asset_id: "ego-vehicle".into(),
                behavioral_properties: behavioral(&[(
                    "action",
                    "The ego-vehicle stopped abruptly at the intersection",
                )]),
                static_properties: BTreeMap::new(),
            },
        ],
        vehicles: vec![],
        predicates: vec![
            state(
                "Approaching Intersection",
                "delivery_truck1",
                "is_currently_moving(delivery_truck1)",
            ),
            state(
                "In Intersection",
                "delivery_truck1",
                "at_intersection(delivery_truck1)",
            ),
            state(
                "Exiting Intersection",
                "delivery_truck1",
                "at_intersection(delivery_truck1) and is_currently_moving(delivery_truck1)",
            ),
            state("On Truck", "box1", "are_close_by(box1, delivery_truck1)"),
            state("Falling", "box1", "is_braking(box1)"),
            state("On Ground", "box1", "is_currently_stopped(box1)"),
            state(
                "Driving Steady",
                "ego-vehicle",
                "is_ego_driving_steady(ego-vehicle)",
            ),
            state("Braking", "ego-vehicle", "is_braking(ego-vehicle)"),
            state("Stopped", "ego-vehicle", "is_currently_stopped(ego-vehicle)"),
        ],
        fsm: TaskFsm::new(
            vec![
                vec![
                    req("delivery_truck1", "Approaching Intersection"),
                    req("box1", "On Truck"),
                    req("ego-vehicle", "Driving Steady"),
                ],
                vec![
                    req("delivery_truck1", "In Intersection"),
                    req("box1", "Falling"),
                ],
                vec![req("box1", "On Ground"), req("ego-vehicle", "Braking")],
                vec![
                    req("delivery_truck1", "Exiting Intersection"),
                    req("ego-vehicle", "Stopped"),
                ],
            ],
            InitialConditions::default(),
        ),
        placement_vars: BTreeMap::from([
            (
                "delivery_truck1".to_string(),
                PlacementDecl {
                    start: PlacementSpot::Fixed { x: -26.0, y: 0.0 },
                    end: Some(PlacementSpot::Fixed { x: 70.0, y: 0.0 }),
                    speed_range_kmh: [28.8, 28.8],
                },
            ),
            (
                "box1".to_string(),
                PlacementDecl {
                    start: PlacementSpot::Fixed { x: -38.0, y: 0.0 },
                    end: Some(PlacementSpot::Fixed { x: -12.0, y: 0.0 }),
                    speed_range_kmh: [28.8, 28.8],
                },
            ),
        ]),
        map_id: "intersection_4way".into(),
        route_id: "intersection_4way/approach_stop".into(),
    }
}

/// Front-car brake-light scenario: one cause event, a sedan stopping
/// abruptly ahead of the ego with its brake light on.
pub fn brakelight_oracle() -> impl QueryOracle {
    FnOracle(|req: &OracleRequest| -> Result<String, OracleError> {
        match req.template_id {
            TemplateId::EventProposal | TemplateId::EventProposalWithPrior => Ok(answer(&[
                "- the car in front stopped abruptly: The vehicle directly ahead braked hard to a stop.".into(),
            ])),
            TemplateId::EdgeSelection => {
                let node_name = req.vars["node_name"].as_str();
                let key = selection_key(&req.vars);
                let reply = match (node_name, key.as_str()) {
                    ("cause", _) => chosen(&key, &["the car in front stopped abruptly"]),
                    ("entity", "the car in front stopped abruptly") => chosen(&key, &["sedan"]),
                    ("behavior", "sedan1") => chosen(&key, &["stop abruptly"]),
                    ("brake light", "sedan1") => chosen(&key, &["on"]),
                    ("front door", "sedan1") => chosen(&key, &[]),
                    ("starting location", "sedan1") => {
                        chosen(&key, &["in front of ego-vehicle on same lane"])
                    }
                    ("ending location", "sedan1") => {
                        chosen(&key, &["in front of ego-vehicle on same lane"])
                    }
                    ("target speed", "sedan1") => chosen(&key, &["30"]),
                    other => {
                        return Err(OracleError::Transport(format!(
                            "brakelight oracle has no edge-selection script for {other:?}"
                        )))
                    }
                };
                Ok(reply)
            }
            TemplateId::PropertyProposal => {
                let node_name = req.vars["node_name"].as_str();
                let values: Vec<&str> = match node_name {
                    "starting location" | "ending location" => LOCATION_PHRASES.to_vec(),
                    "target speed" => vec!["30", "40", "50"],
                    other => {
                        return Err(OracleError::Transport(format!(
                            "brakelight oracle has no property proposal for '{other}'"
                        )))
                    }
                };
                Ok(chosen("sedan1", &values))
            }
            TemplateId::Grounding => Ok(answer(&[
                "states:".into(),
                "- Sedan Ahead | sedan1 | right_in_front(sedan1, ego-vehicle)".into(),
                "- Sedan Braking | sedan1 | is_braking(sedan1)".into(),
                "- Sedan Stopped | sedan1 | is_currently_stopped(sedan1)".into(),
                "- Ego Driving Steady | ego-vehicle | is_ego_driving_steady(ego-vehicle)".into(),
                "- Ego Braking | ego-vehicle | is_braking(ego-vehicle)".into(),
                "- Ego Stopped Abruptly | ego-vehicle | is_currently_stopped(ego-vehicle)".into(),
                "fsm:".into(),
                "- [sedan1: Sedan Ahead, ego-vehicle: Ego Driving Steady]".into(),
                "- [sedan1: Sedan Braking]".into(),
                "- [sedan1: Sedan Stopped]".into(),
                "- [ego-vehicle: Ego Braking]".into(),
                "- [ego-vehicle: Ego Stopped Abruptly]".into(),
            ])),
        }
    })
}
