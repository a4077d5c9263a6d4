//! Grounded scenario configuration: the data a simulation run is built from.
//!
//! Field names mirror the scenario-config layout the system serializes and
//! golden-tests against: `narrative`, `causal_graph`, `entities`, `vehicles`,
//! `fsm`, plus `predicates` (the abstract-state bindings) and
//! `placement_vars`. The `vehicles` table is empty until the solver fills in
//! concrete assignments.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// A named abstract state: one agent, one boolean expression over the
/// predicate library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractState {
    pub name: String,
    pub agent: String,
    pub predicate_expr: String,
}

/// One FSM stage requirement: this agent must be in this abstract state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRequirement {
    pub agent: String,
    pub state: String,
}

/// Initial conditions: placement constraints and property assignments that
/// must hold before the first tick.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InitialConditions {
    /// entity -> starting-location phrase
    pub placements: BTreeMap<String, String>,
    /// "entity.property" -> value
    pub properties: BTreeMap<String, String>,
}

/// Ordered task FSM: stage k must be met before stage k+1; the last stage is
/// the terminal condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFsm {
    pub stages: Vec<Vec<StageRequirement>>,
    pub initial_conditions: InitialConditions,
    pub terminal_stage_index: usize,
}

impl TaskFsm {
    pub fn new(stages: Vec<Vec<StageRequirement>>, initial_conditions: InitialConditions) -> Self {
        let terminal_stage_index = stages.len().saturating_sub(1);
        TaskFsm {
            stages,
            initial_conditions,
            terminal_stage_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Agent,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpec {
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub asset_id: String,
    pub behavioral_properties: BTreeMap<String, String>,
    pub static_properties: BTreeMap<String, String>,
}

/// Where a placement variable may range: a vocabulary phrase resolved
/// against the map at solve time, or a pinned coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlacementSpot {
    Phrase { phrase: String },
    Fixed { x: f64, y: f64 },
}

/// Declared solve variables for one entity: start pose, optional end pose,
/// and a speed interval in km/h (configs keep the km/h convention; the
/// simulator side converts to m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementDecl {
    pub start: PlacementSpot,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<PlacementSpot>,
    pub speed_range_kmh: [f64; 2],
}

/// Concrete per-vehicle setup, filled in by the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSetup {
    pub name: String,
    pub start: Coord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<Coord>,
    pub speed_range: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blueprint_id: Option<String>,
    pub driving_policy: String,
    #[serde(rename = "type")]
    pub vehicle_type: String,
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub narrative: String,
    pub causal_graph: Vec<String>,
    pub entities: Vec<EntitySpec>,
    pub vehicles: Vec<VehicleSetup>,
    pub predicates: Vec<AbstractState>,
    pub fsm: TaskFsm,
    pub placement_vars: BTreeMap<String, PlacementDecl>,
    pub map_id: String,
    pub route_id: String,
}

impl ScenarioConfig {
    pub fn entity(&self, name: &str) -> Option<&EntitySpec> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn abstract_state(&self, agent: &str, state: &str) -> Option<&AbstractState> {
        self.predicates
            .iter()
            .find(|s| s.agent == agent && s.name == state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, super::CompileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| super::CompileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| super::CompileError::Parse {
            path: path.display().to_string(),
            source,
        })
    }
}
