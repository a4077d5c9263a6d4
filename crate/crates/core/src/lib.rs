//! Behavior-conditioned scenario synthesis for a 2D driving simulator.
//!
//! Given a textual robot behavior (e.g. "the ego-vehicle stopped abruptly"),
//! this crate works backward: a language-model oracle proposes plausible
//! causes, entities, and properties, which are assembled into a causal
//! scenario graph bounded by a simulator asset database. Each scenario is
//! grounded into an FSM-verified config, actor placements are solved by
//! constrained enumeration with rollout verification, and the result is
//! executed in a deterministic kinematic simulator. A metrics module scores
//! corpus diversity (Self-BLEU and embedding similarity).
//!
//! Pipeline stages map onto modules:
//!
//! - [`asset_db`]: the directed graph of simulatable assets and their states
//! - [`oracle`]: prompt templates, answer parsing, scripted/remote backends
//! - [`expansion`]: backward graph expansion (node proposal + edge construction)
//! - [`compiler`]: grounding a scenario subgraph into an FSM-bearing config
//! - [`solver`]: placement enumeration with simulation-rollout feasibility
//! - [`sim2d`]: road network, A* routing, PID tracking, predicates, FSM runtime
//! - [`metrics`]: Self-BLEU and embedding diversity with subsampling

pub mod asset_db;
pub mod compiler;
pub mod expansion;
pub mod hash;
pub mod metrics;
pub mod oracle;
pub mod sim2d;
pub mod solver;
