//! `compile`: subgraph -> ScenarioConfig via one structured oracle call.

use std::collections::BTreeMap;

use crate::asset_db::{AssetDatabase, AssetKind};
use crate::expansion::{EventFlag, ScenarioGraph};
use crate::oracle::{
    extract_answer_block, render_string_list, OracleRequest, QueryOracle, TemplateId,
};

use super::config::{
    AbstractState, EntitySpec, EntityType, InitialConditions, PlacementDecl, PlacementSpot,
    ScenarioConfig, StageRequirement, TaskFsm,
};
use super::validate::validate_config;
use super::{CompileError, BEHAVIORAL_KEYS};

/// Default speed ranges (km/h) when a behavior has no chosen target speed.
fn default_speed_range(action: &str) -> [f64; 2] {
    match action {
        "stationary" => [0.0, 0.0],
        "walking" => [5.4, 5.4],
        _ => [30.0, 50.0],
    }
}

/// Grounds a single-cause-chain subgraph into a validated ScenarioConfig.
///
/// The oracle emits abstract states and FSM stages in one call; unknown
/// predicates, agents, or malformed stages reject the whole config. The
/// ego entity is injected from the behavior node and the graph's route.
pub fn compile(
    subgraph: &ScenarioGraph,
    db: &AssetDatabase,
    oracle: &dyn QueryOracle,
) -> Result<ScenarioConfig, CompileError> {
    // Single cause chain: every event has at most one cause and one effect.
    for event in subgraph.events.values() {
        if event.flag == Some(EventFlag::Unsimulatable) {
            return Err(CompileError::Unsimulatable(event.text.clone()));
        }
        if subgraph.cause_in_degree(&event.id) > 1 {
            return Err(CompileError::NotAChain(format!(
                "event '{}' has multiple causes",
                event.text
            )));
        }
    }

    // Root-to-behavior order.
    let root = subgraph
        .events
        .values()
        .find(|e| subgraph.cause_in_degree(&e.id) == 0)
        .ok_or_else(|| CompileError::NotAChain("no root event".into()))?;
    let causal_graph = subgraph.chain_to_behavior(&root.id);
    if causal_graph.len() != subgraph.events.len() {
        return Err(CompileError::NotAChain(
            "events do not form one chain".into(),
        ));
    }
    let narrative = causal_graph.join(" -> ");

    // Entity roster: graph entities in creation order, then the ego.
    let mut entities = Vec::new();
    let mut violations = Vec::new();
    for entity in subgraph.entities.values() {
        let asset = db.node(&entity.asset_id).ok_or_else(|| {
            CompileError::Rejected(vec![format!(
                "entity '{}' references unknown asset '{}'",
                entity.instance_name, entity.asset_id
            )])
        })?;
        let entity_type = match asset.kind {
            AssetKind::EntityAgent => EntityType::Agent,
            AssetKind::EntityObject => EntityType::Object,
            _ => {
                violations.push(format!(
                    "asset '{}' is not an entity kind",
                    entity.asset_id
                ));
                EntityType::Object
            }
        };
        let mut behavioral = BTreeMap::new();
        let mut statics = BTreeMap::new();
        for prop in subgraph.properties_of(&entity.id) {
            let (bucket, key) = if prop.key == "behavior" {
                (&mut behavioral, "action".to_string())
            } else if BEHAVIORAL_KEYS.contains(&prop.key.as_str()) {
                (&mut behavioral, prop.key.clone())
            } else {
                (&mut statics, prop.key.clone())
            };
            if bucket.insert(key.clone(), prop.value.clone()).is_some() {
                violations.push(format!(
                    "entity '{}' has multiple values for property '{}'",
                    entity.instance_name, key
                ));
            }
        }
        if !behavioral.contains_key("action") {
            if entity_type == EntityType::Object {
                behavioral.insert("action".into(), "stationary".into());
            } else {
                violations.push(format!(
                    "agent '{}' has no behavior property",
                    entity.instance_name
                ));
            }
        }
        entities.push(EntitySpec {
            name: entity.instance_name.clone(),
            entity_type,
            asset_id: entity.asset_id.clone(),
            behavioral_properties: behavioral,
            static_properties: statics,
        });
    }
    let behavior_text = subgraph.events[&subgraph.behavior_node_id].text.clone();
    entities.push(EntitySpec {
        name: "ego-vehicle".into(),
        entity_type: EntityType::Agent,
        asset_id: "ego-vehicle".into(),
        behavioral_properties: BTreeMap::from([("action".to_string(), behavior_text)]),
        static_properties: BTreeMap::new(),
    });
    if !violations.is_empty() {
        return Err(CompileError::Rejected(violations));
    }

    // One structured grounding call.
    let entity_lines: Vec<String> = entities
        .iter()
        .map(|e| {
            format!(
                "- {} ({}): {}",
                e.name,
                e.asset_id,
                e.behavioral_properties
                    .get("action")
                    .cloned()
                    .unwrap_or_default()
            )
        })
        .collect();
    let predicate_lines: Vec<String> = super::predicate::PredicateId::ALL
        .iter()
        .map(|p| format!("- {} ({} args)", p.name(), p.arity()))
        .collect();
    let mut vars = BTreeMap::new();
    vars.insert("causal_graph".into(), render_string_list(&causal_graph));
    vars.insert("entities".into(), entity_lines.join("\n"));
    vars.insert("predicates".into(), predicate_lines.join("\n"));
    let request = OracleRequest::new(TemplateId::Grounding, vars);
    let response = oracle.call(&request)?;
    let (states, stages) = parse_grounding(&response.raw)?;

    // Initial conditions and placement declarations.
    let mut initial = InitialConditions::default();
    let mut placement_vars = BTreeMap::new();
    for entity in &entities {
        if entity.name == "ego-vehicle" {
            continue; // the predefined route fixes the ego placement
        }
        for (key, value) in &entity.static_properties {
            initial
                .properties
                .insert(format!("{}.{}", entity.name, key), value.clone());
        }
        let start_phrase = entity
            .behavioral_properties
            .get("starting location")
            .or_else(|| entity.behavioral_properties.get("location"));
        if let Some(phrase) = start_phrase {
            initial
                .placements
                .insert(entity.name.clone(), phrase.clone());
        }
        let action = entity
            .behavioral_properties
            .get("action")
            .cloned()
            .unwrap_or_default();
        let speed_range = match entity.behavioral_properties.get("target speed") {
            Some(speed) => {
                let v: f64 = speed.trim().trim_end_matches(" km/h").parse().map_err(|_| {
                    CompileError::Rejected(vec![format!(
                        "entity '{}' target speed '{}' is not numeric",
                        entity.name, speed
                    )])
                })?;
                [v, v]
            }
            None => default_speed_range(&action),
        };
        let start = match start_phrase {
            Some(phrase) => PlacementSpot::Phrase {
                phrase: phrase.clone(),
            },
            None => {
                return Err(CompileError::Rejected(vec![format!(
                    "entity '{}' has no starting location",
                    entity.name
                )]))
            }
        };
        let end = entity
            .behavioral_properties
            .get("ending location")
            .map(|phrase| PlacementSpot::Phrase {
                phrase: phrase.clone(),
            });
        placement_vars.insert(
            entity.name.clone(),
            PlacementDecl {
                start,
                end,
                speed_range_kmh: speed_range,
            },
        );
    }

    let (map_id, route_id) = subgraph
        .route_id
        .split_once('/')
        .ok_or_else(|| CompileError::Rejected(vec![format!(
            "graph route id '{}' is not 'map/route'",
            subgraph.route_id
        )]))?;

    let config = ScenarioConfig {
        narrative,
        causal_graph,
        entities,
        vehicles: Vec::new(),
        predicates: states,
        fsm: TaskFsm::new(stages, initial),
        placement_vars,
        map_id: map_id.to_string(),
        route_id: subgraph.route_id.clone(),
    };
    let _ = route_id;

    let report = validate_config(&config, db);
    if !report.is_ok() {
        return Err(CompileError::Rejected(report.violations));
    }
    Ok(config)
}

/// Parses the grounding answer block:
///
/// ```text
/// states:
/// - State Name | agent | predicate_expr
/// fsm:
/// - [agent: State Name, agent: Other State]
/// ```
pub fn parse_grounding(
    response: &str,
) -> Result<(Vec<AbstractState>, Vec<Vec<StageRequirement>>), CompileError> {
    let block = extract_answer_block(response)?;
    let mut states = Vec::new();
    let mut stages = Vec::new();
    #[derive(PartialEq)]
    enum Section {
        None,
        States,
        Fsm,
    }
    let mut section = Section::None;
    for raw in block.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("states:") {
            section = Section::States;
            continue;
        }
        if line.eq_ignore_ascii_case("fsm:") {
            section = Section::Fsm;
            continue;
        }
        let item = line
            .strip_prefix('-')
            .ok_or_else(|| CompileError::GroundingFormat(format!("unexpected line '{raw}'")))?
            .trim();
        match section {
            Section::States => {
                let parts: Vec<&str> = item.split('|').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(CompileError::GroundingFormat(format!(
                        "state line needs 'name | agent | expr': '{raw}'"
                    )));
                }
                states.push(AbstractState {
                    name: parts[0].to_string(),
                    agent: parts[1].to_string(),
                    predicate_expr: parts[2].to_string(),
                });
            }
            Section::Fsm => {
                let inner = item
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| {
                        CompileError::GroundingFormat(format!("stage line needs [..]: '{raw}'"))
                    })?;
                let mut stage = Vec::new();
                for req in inner.split(',') {
                    let (agent, state) = req.split_once(':').ok_or_else(|| {
                        CompileError::GroundingFormat(format!(
                            "stage requirement needs 'agent: state': '{req}'"
                        ))
                    })?;
                    stage.push(StageRequirement {
                        agent: agent.trim().to_string(),
                        state: state.trim().to_string(),
                    });
                }
                if stage.is_empty() {
                    return Err(CompileError::GroundingFormat(format!(
                        "empty stage: '{raw}'"
                    )));
                }
                stages.push(stage);
            }
            Section::None => {
                return Err(CompileError::GroundingFormat(format!(
                    "list item before a section header: '{raw}'"
                )))
            }
        }
    }
    if stages.is_empty() {
        return Err(CompileError::GroundingFormat("no fsm stages".into()));
    }
    Ok((states, stages))
}
