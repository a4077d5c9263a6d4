//! Grounding: turn a scenario subgraph into an FSM-verified config.
//!
//! The oracle is asked once per subgraph to emit abstract states and FSM
//! stages; everything it returns is validated against the closed predicate
//! library, the entity roster, and the asset database before a config is
//! accepted. Rejection is all-or-nothing, matching the feasibility gating
//! the rest of the pipeline relies on.

pub mod config;
pub mod predicate;

mod grounding;
mod validate;

pub use config::{
    AbstractState, Coord, EntitySpec, EntityType, InitialConditions, PlacementDecl, PlacementSpot,
    ScenarioConfig, StageRequirement, TaskFsm, VehicleSetup,
};
pub use grounding::compile;
pub use predicate::{parse_expr, PredExpr, PredicateCall, PredicateError, PredicateId};
pub use validate::{validate_config, ValidationReport};

use thiserror::Error;

/// Canonical location phrases the expansion may emit; the solver resolves
/// each one to a geometric region relative to the ego route.
pub const PLACEMENT_PHRASES: [&str; 4] = [
    "behind the ego-vehicle on same lane",
    "behind the ego-vehicle on adjacent lane",
    "in front of ego-vehicle on same lane",
    "in front of ego-vehicle on adjacent lane",
];

/// Keys under `behavioral_properties`; everything else a property node
/// carries lands in `static_properties`.
pub const BEHAVIORAL_KEYS: [&str; 6] = [
    "action",
    "starting location",
    "ending location",
    "location",
    "target speed",
    "delay",
];

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error("grounding response malformed: {0}")]
    GroundingFormat(String),
    #[error("config rejected:\n{}", .0.join("\n"))]
    Rejected(Vec<String>),
    #[error("subgraph is not a single cause chain: {0}")]
    NotAChain(String),
    #[error("subgraph contains unsimulatable event '{0}'")]
    Unsimulatable(String),
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
