//! Backward graph expansion: from a behavior description to a causal
//! scenario graph.
//!
//! The graph grows through two atomic steps. Node proposal asks the oracle
//! for candidates (cause events, or values for oracle-valued properties);
//! entity and state candidates come straight from the asset database. Edge
//! construction then classifies the whole candidate set in one oracle call
//! and keeps only the accepted connections; rejected candidates leave no
//! trace. Events for which no entity is accepted are flagged unsimulatable
//! and prune their entire cause path from enumeration.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::asset_db::{AssetDatabase, AssetDbError};
use crate::oracle::{
    parse_answer, render_candidate_values, render_string_list, AnswerSchema, OracleError,
    OracleRequest, QueryOracle, TemplateId,
};
use crate::sim2d::MapLibrary;

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("behavior description must be non-empty")]
    EmptyDescription,
    #[error("route '{0}' does not resolve in the map library")]
    UnknownRoute(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    AssetDb(#[from] AssetDbError),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("node '{0}' is not a property node")]
    NotAProperty(String),
    #[error("value '{value}' is not legal for property '{key}' (allowed: {allowed:?})")]
    IllegalValue {
        key: String,
        value: String,
        allowed: Vec<String>,
    },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

/// The conditioning input: a behavior description and the predefined ego
/// route it maps to ("map_id/route_id").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorSpec {
    pub description: String,
    pub route_id: String,
}

impl BehaviorSpec {
    pub fn new(
        description: impl Into<String>,
        route_id: impl Into<String>,
        maps: &MapLibrary,
    ) -> Result<Self, ExpansionError> {
        let spec = BehaviorSpec {
            description: description.into(),
            route_id: route_id.into(),
        };
        if spec.description.trim().is_empty() {
            return Err(ExpansionError::EmptyDescription);
        }
        maps.resolve_route(&spec.route_id)
            .map_err(|_| ExpansionError::UnknownRoute(spec.route_id.clone()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventFlag {
    /// No database entity supports this event; its cause paths are pruned.
    Unsimulatable,
    /// Expansion stopped here because the node budget ran out.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventNode {
    pub id: String,
    pub text: String,
    pub depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<EventFlag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityNode {
    pub id: String,
    pub asset_id: String,
    pub instance_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyNode {
    pub id: String,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphEdges {
    /// cause -> effect
    pub cause: BTreeSet<(String, String)>,
    /// entity -> supported event
    pub support: BTreeSet<(String, String)>,
    /// property -> entity
    pub attr: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioGraph {
    pub behavior_node_id: String,
    /// Predefined ego route this behavior maps to ("map_id/route_id").
    pub route_id: String,
    pub events: BTreeMap<String, EventNode>,
    pub entities: BTreeMap<String, EntityNode>,
    pub properties: BTreeMap<String, PropertyNode>,
    pub edges: GraphEdges,
}

/// Stopping criteria for expansion. Hitting a budget is not an error;
/// partial graphs are valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionBudget {
    pub max_event_depth: u32,
    pub max_events_per_node: usize,
    pub max_total_nodes: usize,
}

impl Default for ExpansionBudget {
    fn default() -> Self {
        ExpansionBudget {
            max_event_depth: 1,
            max_events_per_node: 8,
            max_total_nodes: 64,
        }
    }
}

/// Creates the one-node graph holding the behavior event.
pub fn init_graph(behavior: &BehaviorSpec) -> Result<ScenarioGraph, ExpansionError> {
    if behavior.description.trim().is_empty() {
        return Err(ExpansionError::EmptyDescription);
    }
    let mut events = BTreeMap::new();
    events.insert(
        "e0".to_string(),
        EventNode {
            id: "e0".into(),
            text: behavior.description.clone(),
            depth: 0,
            flag: None,
        },
    );
    Ok(ScenarioGraph {
        behavior_node_id: "e0".into(),
        route_id: behavior.route_id.clone(),
        events,
        entities: BTreeMap::new(),
        properties: BTreeMap::new(),
        edges: GraphEdges::default(),
    })
}

impl ScenarioGraph {
    pub fn total_nodes(&self) -> usize {
        self.events.len() + self.entities.len() + self.properties.len()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.cause.len() + self.edges.support.len() + self.edges.attr.len()
    }

    /// Number of cause edges pointing at this event.
    pub fn cause_in_degree(&self, event_id: &str) -> usize {
        self.edges.cause.iter().filter(|(_, to)| to == event_id).count()
    }

    /// Direct causes of an event, sorted by id.
    pub fn causes_of(&self, event_id: &str) -> Vec<&EventNode> {
        let mut out: Vec<&EventNode> = self
            .edges
            .cause
            .iter()
            .filter(|(_, to)| to == event_id)
            .filter_map(|(from, _)| self.events.get(from))
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    /// Entities supporting an event, sorted by id.
    pub fn entities_of(&self, event_id: &str) -> Vec<&EntityNode> {
        let mut out: Vec<&EntityNode> = self
            .edges
            .support
            .iter()
            .filter(|(_, to)| to == event_id)
            .filter_map(|(from, _)| self.entities.get(from))
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    /// Properties attached to an entity, sorted by id.
    pub fn properties_of(&self, entity_id: &str) -> Vec<&PropertyNode> {
        let mut out: Vec<&PropertyNode> = self
            .edges
            .attr
            .iter()
            .filter(|(_, to)| to == entity_id)
            .filter_map(|(from, _)| self.properties.get(from))
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    /// The effect this event feeds (None for the behavior node).
    pub fn effect_of(&self, event_id: &str) -> Option<&EventNode> {
        self.edges
            .cause
            .iter()
            .find(|(from, _)| from == event_id)
            .and_then(|(_, to)| self.events.get(to))
    }

    /// Event texts from `event_id` forward to the behavior node
    /// (cause-first order).
    pub fn chain_to_behavior(&self, event_id: &str) -> Vec<String> {
        let mut chain = Vec::new();
        let mut cursor = event_id.to_string();
        loop {
            let node = &self.events[&cursor];
            chain.push(node.text.clone());
            match self.effect_of(&cursor) {
                Some(effect) => cursor = effect.id.clone(),
                None => break,
            }
        }
        chain
    }

    fn fresh_id(&self, prefix: char, count: usize) -> String {
        format!("{prefix}{count}")
    }

    fn fresh_event_id(&self) -> String {
        self.fresh_id('e', self.events.len())
    }

    fn fresh_entity_id(&self) -> String {
        self.fresh_id('n', self.entities.len())
    }

    fn fresh_property_id(&self) -> String {
        self.fresh_id('p', self.properties.len())
    }

    fn instance_name_for(&self, asset_id: &str) -> String {
        if asset_id == "ego-vehicle" {
            return "ego-vehicle".into();
        }
        let base = asset_id.replace(' ', "_");
        let existing = self
            .entities
            .values()
            .filter(|e| e.asset_id == asset_id)
            .count();
        format!("{base}{}", existing + 1)
    }

    /// The cause subgraph must stay acyclic; checked after every mutation.
    fn assert_cause_acyclic(&self) {
        let mut indeg: BTreeMap<&str, usize> = self.events.keys().map(|k| (k.as_str(), 0)).collect();
        for (_, to) in &self.edges.cause {
            *indeg.get_mut(to.as_str()).expect("edge endpoints exist") += 1;
        }
        let mut queue: Vec<&str> = indeg
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut seen = 0;
        while let Some(id) = queue.pop() {
            seen += 1;
            for (from, to) in &self.edges.cause {
                if from == id {
                    let d = indeg.get_mut(to.as_str()).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        queue.push(to);
                    }
                }
            }
        }
        assert_eq!(seen, self.events.len(), "cause subgraph acquired a cycle");
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), ExpansionError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ExpansionError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ExpansionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExpansionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| ExpansionError::Parse {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Candidate set handed to edge construction, typed per edge family.
#[derive(Debug, Clone)]
pub enum EdgeCandidates {
    /// (name, description) cause candidates for a source event.
    Cause(Vec<(String, String)>),
    /// Asset ids that might support a source event.
    Support(Vec<String>),
    /// Values for one property key of a source entity.
    Attr { key: String, values: Vec<String> },
}

/// Proposes candidate cause events for `source` via the oracle. Candidates
/// are deduplicated case-insensitively; the graph is not mutated.
pub fn propose_event_nodes(
    graph: &ScenarioGraph,
    source_id: &str,
    prior: Option<&str>,
    oracle: &dyn QueryOracle,
) -> Result<Vec<(String, String)>, ExpansionError> {
    let source = graph
        .events
        .get(source_id)
        .ok_or_else(|| ExpansionError::UnknownNode(source_id.to_string()))?;
    let chain = event_context(graph, &source.id);
    let mut vars = BTreeMap::new();
    vars.insert("causal_graph".into(), render_string_list(&chain));
    vars.insert("effect".into(), format!("\"{}\"", source.text));
    let template = match prior {
        Some(p) => {
            vars.insert("prior".into(), p.to_string());
            TemplateId::EventProposalWithPrior
        }
        None => TemplateId::EventProposal,
    };
    let request = OracleRequest::new(template, vars);
    let response = oracle.call(&request)?;
    let payload = parse_answer(&response.raw, AnswerSchema::NameDescList)?;
    let items = payload.as_name_desc().expect("schema matches").to_vec();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (name, desc) in items {
        if seen.insert(name.to_lowercase()) {
            out.push((name, desc));
        }
    }
    Ok(out)
}

/// Context list for cause proposals/selections: behavior first, source last
/// (the prompt asks what caused the last element).
fn event_context(graph: &ScenarioGraph, source_id: &str) -> Vec<String> {
    let mut chain = graph.chain_to_behavior(source_id);
    chain.reverse();
    chain
}

/// Classifies `candidates` against `source` in one oracle call and adds the
/// accepted nodes and edges. Returns the ids of accepted nodes. With
/// `EdgeCandidates::Support` and an empty acceptance, the source event is
/// flagged unsimulatable and the graph is otherwise unchanged.
pub fn construct_edges(
    graph: &mut ScenarioGraph,
    source_id: &str,
    candidates: EdgeCandidates,
    oracle: &dyn QueryOracle,
    db: &AssetDatabase,
    limit: Option<usize>,
) -> Result<Vec<String>, ExpansionError> {
    match candidates {
        EdgeCandidates::Cause(items) => {
            if !graph.events.contains_key(source_id) {
                return Err(ExpansionError::UnknownNode(source_id.to_string()));
            }
            let names: Vec<String> = items.iter().map(|(n, _)| n.clone()).collect();
            let source_text = graph.events[source_id].text.clone();
            let chosen = select(
                graph,
                source_id,
                "cause",
                &source_text,
                &names,
                oracle,
                EdgeContext::Event,
            )?;
            let chosen_lower: BTreeSet<String> = chosen.iter().map(|c| c.to_lowercase()).collect();
            let mut accepted = Vec::new();
            let source_depth = graph.events[source_id].depth;
            for (name, _) in &items {
                if !chosen_lower.contains(&name.to_lowercase()) {
                    continue;
                }
                if let Some(cap) = limit {
                    if accepted.len() >= cap {
                        break;
                    }
                }
                // Duplicate cause text for the same source: merge (skip).
                let duplicate = graph
                    .causes_of(source_id)
                    .iter()
                    .any(|c| c.text.eq_ignore_ascii_case(name));
                if duplicate {
                    continue;
                }
                let id = graph.fresh_event_id();
                graph.events.insert(
                    id.clone(),
                    EventNode {
                        id: id.clone(),
                        text: name.clone(),
                        depth: source_depth + 1,
                        flag: None,
                    },
                );
                graph.edges.cause.insert((id.clone(), source_id.to_string()));
                graph.assert_cause_acyclic();
                accepted.push(id);
            }
            Ok(accepted)
        }
        EdgeCandidates::Support(asset_ids) => {
            if !graph.events.contains_key(source_id) {
                return Err(ExpansionError::UnknownNode(source_id.to_string()));
            }
            for asset in &asset_ids {
                match db.node(asset) {
                    Some(node) if node.kind.is_entity() => {}
                    _ => {
                        return Err(ExpansionError::TypeMismatch(format!(
                            "support candidate '{asset}' is not a database entity"
                        )))
                    }
                }
            }
            let source_text = graph.events[source_id].text.clone();
            let chosen = select(
                graph,
                source_id,
                "entity",
                &source_text,
                &asset_ids,
                oracle,
                EdgeContext::Scenario,
            )?;
            // Rejection sampling keeps only candidates that really exist.
            let mut accepted = Vec::new();
            for asset in &asset_ids {
                if !chosen.iter().any(|c| c.eq_ignore_ascii_case(asset)) {
                    continue;
                }
                let id = graph.fresh_entity_id();
                let instance_name = graph.instance_name_for(asset);
                graph.entities.insert(
                    id.clone(),
                    EntityNode {
                        id: id.clone(),
                        asset_id: asset.clone(),
                        instance_name,
                    },
                );
                graph
                    .edges
                    .support
                    .insert((id.clone(), source_id.to_string()));
                accepted.push(id);
            }
            if accepted.is_empty() {
                graph
                    .events
                    .get_mut(source_id)
                    .expect("checked above")
                    .flag = Some(EventFlag::Unsimulatable);
            }
            Ok(accepted)
        }
        EdgeCandidates::Attr { key, values } => {
            let entity = graph
                .entities
                .get(source_id)
                .ok_or_else(|| ExpansionError::UnknownNode(source_id.to_string()))?
                .clone();
            let event_id = graph
                .edges
                .support
                .iter()
                .find(|(from, _)| from == &entity.id)
                .map(|(_, to)| to.clone())
                .ok_or_else(|| {
                    ExpansionError::TypeMismatch(format!(
                        "entity '{}' supports no event",
                        entity.id
                    ))
                })?;
            let chosen = select(
                graph,
                &event_id,
                &key,
                &entity.instance_name,
                &values,
                oracle,
                EdgeContext::Scenario,
            )?;
            // For state-backed keys, only database states may be attached.
            let allowed = db.property_states(&key).ok().filter(|s| !s.is_empty());
            let mut accepted = Vec::new();
            for value in &values {
                if !chosen.iter().any(|c| c.eq_ignore_ascii_case(value)) {
                    continue;
                }
                if let Some(states) = &allowed {
                    if !states.iter().any(|s| s.eq_ignore_ascii_case(value)) {
                        continue;
                    }
                }
                let id = graph.fresh_property_id();
                graph.properties.insert(
                    id.clone(),
                    PropertyNode {
                        id: id.clone(),
                        key: key.clone(),
                        value: value.clone(),
                    },
                );
                graph.edges.attr.insert((id.clone(), entity.id.clone()));
                accepted.push(id);
            }
            Ok(accepted)
        }
    }
}

enum EdgeContext {
    /// Behavior-first chain, source last (cause selection).
    Event,
    /// Cause-first chain from the source event (entity/property selection).
    Scenario,
}

/// One edge-selection call: render the candidate map, ask, parse the chosen
/// list keyed by the source label.
fn select(
    graph: &ScenarioGraph,
    event_id: &str,
    node_name: &str,
    map_key: &str,
    candidates: &[String],
    oracle: &dyn QueryOracle,
    context: EdgeContext,
) -> Result<Vec<String>, ExpansionError> {
    let chain = match context {
        EdgeContext::Event => event_context(graph, event_id),
        EdgeContext::Scenario => graph.chain_to_behavior(event_id),
    };
    let mut candidate_map = BTreeMap::new();
    candidate_map.insert(map_key.to_string(), candidates.to_vec());
    let mut vars = BTreeMap::new();
    vars.insert("causal_graph".into(), render_string_list(&chain));
    vars.insert("node_name".into(), node_name.to_string());
    vars.insert(
        "candidate_values".into(),
        render_candidate_values(&candidate_map),
    );
    let request = OracleRequest::new(TemplateId::EdgeSelection, vars);
    let response = oracle.call(&request)?;
    let payload = parse_answer(&response.raw, AnswerSchema::PerEntityValueLists)?;
    let map = payload.as_per_entity().expect("schema matches");
    Ok(map.get(map_key).cloned().unwrap_or_default())
}

/// Values the oracle proposes for a property key with no database states.
fn propose_property_values(
    graph: &ScenarioGraph,
    event_id: &str,
    entity: &EntityNode,
    key: &str,
    oracle: &dyn QueryOracle,
) -> Result<Vec<String>, ExpansionError> {
    let chain = graph.chain_to_behavior(event_id);
    let mut vars = BTreeMap::new();
    vars.insert("causal_graph".into(), render_string_list(&chain));
    vars.insert(
        "entities_name".into(),
        format!("- {}: {}", entity.instance_name, entity.asset_id),
    );
    vars.insert("node_name".into(), key.to_string());
    let request = OracleRequest::new(TemplateId::PropertyProposal, vars);
    let response = oracle.call(&request)?;
    let payload = parse_answer(&response.raw, AnswerSchema::PerEntityValueLists)?;
    let map = payload.as_per_entity().expect("schema matches");
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for value in map.get(&entity.instance_name).cloned().unwrap_or_default() {
        if seen.insert(value.to_lowercase()) {
            out.push(value);
        }
    }
    Ok(out)
}

/// Full Algorithm-1 style expansion.
///
/// Phase 1 proposes and connects cause events for every event lacking one,
/// in deterministic lowest-depth-then-id order, until the budget stops it.
/// Phase 2 attaches entities to every cause event, then properties to every
/// accepted entity: database states where the asset defines them, oracle
/// proposals for open values, and a behavior choice from the asset's
/// behavior options. Replaying a recorded transcript reproduces the graph
/// exactly.
pub fn expand(
    mut graph: ScenarioGraph,
    db: &AssetDatabase,
    budget: &ExpansionBudget,
    oracle: &dyn QueryOracle,
    prior: Option<&str>,
) -> Result<ScenarioGraph, ExpansionError> {
    // Phase 1: causes.
    loop {
        let mut frontier: Vec<(u32, String)> = graph
            .events
            .values()
            .filter(|e| {
                graph.cause_in_degree(&e.id) == 0
                    && e.depth < budget.max_event_depth
                    && e.flag.is_none()
            })
            .map(|e| (e.depth, e.id.clone()))
            .collect();
        frontier.sort();
        let Some((_, source_id)) = frontier.into_iter().next() else {
            break;
        };
        if graph.total_nodes() + 1 > budget.max_total_nodes {
            // No room for even one more cause anywhere: flag and stop.
            for event in graph.events.values_mut() {
                if event.flag.is_none()
                    && event.depth < budget.max_event_depth
                    && !graph
                        .edges
                        .cause
                        .iter()
                        .any(|(_, to)| to == &event.id)
                {
                    event.flag = Some(EventFlag::BudgetExhausted);
                }
            }
            break;
        }
        let candidates = propose_event_nodes(&graph, &source_id, prior, oracle)?;
        if candidates.is_empty() {
            graph.events.get_mut(&source_id).unwrap().flag = Some(EventFlag::BudgetExhausted);
            continue;
        }
        let room = budget.max_total_nodes.saturating_sub(graph.total_nodes());
        let cap = budget.max_events_per_node.min(room);
        let accepted = construct_edges(
            &mut graph,
            &source_id,
            EdgeCandidates::Cause(candidates),
            oracle,
            db,
            Some(cap),
        )?;
        if accepted.is_empty() {
            // Nothing plausible: leave the event as a leaf cause.
            graph.events.get_mut(&source_id).unwrap().flag = Some(EventFlag::BudgetExhausted);
        }
    }

    // Phase 2: entities and properties for every cause event. The behavior
    // node itself is grounded later: its entity is the ego-vehicle, which
    // the compiler injects from the behavior spec.
    let mut event_ids: Vec<(u32, String)> = graph
        .events
        .values()
        .filter(|e| e.id != graph.behavior_node_id && e.flag != Some(EventFlag::Unsimulatable))
        .map(|e| (e.depth, e.id.clone()))
        .collect();
    event_ids.sort();

    let entity_candidates: Vec<String> = db
        .list_entities()
        .iter()
        .map(|n| n.id.clone())
        .filter(|id| id != "ego-vehicle")
        .collect();

    for (_, event_id) in event_ids {
        if graph.total_nodes() + 1 > budget.max_total_nodes {
            break;
        }
        let accepted_entities = construct_edges(
            &mut graph,
            &event_id,
            EdgeCandidates::Support(entity_candidates.clone()),
            oracle,
            db,
            None,
        )?;
        for entity_id in accepted_entities {
            expand_entity_properties(&mut graph, &entity_id, &event_id, db, budget, oracle)?;
        }
    }

    Ok(graph)
}

/// Property phase for one accepted entity: direct asset properties first,
/// then the behavior choice, then the chosen behavior's own properties.
fn expand_entity_properties(
    graph: &mut ScenarioGraph,
    entity_id: &str,
    event_id: &str,
    db: &AssetDatabase,
    budget: &ExpansionBudget,
    oracle: &dyn QueryOracle,
) -> Result<(), ExpansionError> {
    let entity = graph.entities[entity_id].clone();

    let mut keys: Vec<(String, Vec<String>)> = Vec::new();
    for prop in db.properties_of(&entity.asset_id) {
        let states = db.property_states(&prop.id)?;
        keys.push((prop.id.clone(), states));
    }

    for (key, states) in keys {
        if graph.total_nodes() + 1 > budget.max_total_nodes {
            return Ok(());
        }
        let values = if states.is_empty() {
            propose_property_values(graph, event_id, &entity, &key, oracle)?
        } else {
            states
        };
        if values.is_empty() {
            continue;
        }
        construct_edges(
            graph,
            entity_id,
            EdgeCandidates::Attr { key, values },
            oracle,
            db,
            None,
        )?;
    }

    // Behavior choice from the asset's behavior options.
    let behaviors: Vec<String> = db
        .behaviors_of(&entity.asset_id)
        .iter()
        .map(|b| b.id.clone())
        .collect();
    if behaviors.is_empty() || graph.total_nodes() + 1 > budget.max_total_nodes {
        return Ok(());
    }
    let chosen_behaviors = construct_edges(
        graph,
        entity_id,
        EdgeCandidates::Attr {
            key: "behavior".into(),
            values: behaviors,
        },
        oracle,
        db,
        None,
    )?;

    for behavior_prop_id in chosen_behaviors {
        let behavior_name = graph.properties[&behavior_prop_id].value.clone();
        for prop in db.properties_of(&behavior_name) {
            if graph.total_nodes() + 1 > budget.max_total_nodes {
                return Ok(());
            }
            let states = db.property_states(&prop.id)?;
            let values = if states.is_empty() {
                propose_property_values(graph, event_id, &entity, &prop.id, oracle)?
            } else {
                states
            };
            if values.is_empty() {
                continue;
            }
            construct_edges(
                graph,
                entity_id,
                EdgeCandidates::Attr {
                    key: prop.id.clone(),
                    values,
                },
                oracle,
                db,
                None,
            )?;
        }
    }
    Ok(())
}

/// One subgraph per root-to-behavior cause path. Paths through
/// unsimulatable events are pruned; ordering is lexicographic by the
/// path's event-text sequence.
pub fn enumerate_scenarios(graph: &ScenarioGraph) -> Vec<ScenarioGraph> {
    let mut paths: Vec<Vec<String>> = Vec::new();
    let roots: Vec<&EventNode> = graph
        .events
        .values()
        .filter(|e| graph.cause_in_degree(&e.id) == 0)
        .collect();
    for root in roots {
        // Walk forward (cause -> effect) to the behavior node.
        let mut path = vec![root.id.clone()];
        let mut cursor = root.id.clone();
        while let Some(effect) = graph.effect_of(&cursor) {
            cursor = effect.id.clone();
            path.push(cursor.clone());
        }
        if path.last() != Some(&graph.behavior_node_id) {
            continue;
        }
        if path
            .iter()
            .any(|id| graph.events[id].flag == Some(EventFlag::Unsimulatable))
        {
            continue;
        }
        paths.push(path);
    }

    paths.sort_by_key(|path| {
        path.iter()
            .map(|id| graph.events[id].text.clone())
            .collect::<Vec<_>>()
    });

    paths
        .into_iter()
        .map(|path| {
            let keep: BTreeSet<&String> = path.iter().collect();
            let mut sub = ScenarioGraph {
                behavior_node_id: graph.behavior_node_id.clone(),
                route_id: graph.route_id.clone(),
                events: BTreeMap::new(),
                entities: BTreeMap::new(),
                properties: BTreeMap::new(),
                edges: GraphEdges::default(),
            };
            for id in &path {
                sub.events.insert(id.clone(), graph.events[id].clone());
            }
            for (from, to) in &graph.edges.cause {
                if keep.contains(from) && keep.contains(to) {
                    sub.edges.cause.insert((from.clone(), to.clone()));
                }
            }
            for (entity_id, event_id) in &graph.edges.support {
                if keep.contains(event_id) {
                    sub.entities
                        .insert(entity_id.clone(), graph.entities[entity_id].clone());
                    sub.edges
                        .support
                        .insert((entity_id.clone(), event_id.clone()));
                }
            }
            for (prop_id, entity_id) in &graph.edges.attr {
                if sub.entities.contains_key(entity_id) {
                    sub.properties
                        .insert(prop_id.clone(), graph.properties[prop_id].clone());
                    sub.edges.attr.insert((prop_id.clone(), entity_id.clone()));
                }
            }
            sub
        })
        .collect()
}

/// Returns a copy of the graph differing only in one property node's value.
pub fn perturb_property(
    graph: &ScenarioGraph,
    property_node_id: &str,
    new_value: &str,
    db: &AssetDatabase,
) -> Result<ScenarioGraph, ExpansionError> {
    let node = graph
        .properties
        .get(property_node_id)
        .ok_or_else(|| ExpansionError::UnknownNode(property_node_id.to_string()))?;
    let allowed = db.property_states(&node.key).ok().filter(|s| !s.is_empty());
    if let Some(states) = &allowed {
        if !states.iter().any(|s| s == new_value) {
            return Err(ExpansionError::IllegalValue {
                key: node.key.clone(),
                value: new_value.to_string(),
                allowed: states.clone(),
            });
        }
    }
    let mut out = graph.clone();
    out.properties.get_mut(property_node_id).unwrap().value = new_value.to_string();
    Ok(out)
}
