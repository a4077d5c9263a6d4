//! Deterministic 2D kinematic driving simulator.
//!
//! A road network of lanes and intersections, actors driven by motion
//! primitives through A* routes and PID tracking, discrete properties,
//! seeded GNSS noise, the predicate library, and the FSM runtime that
//! verifies scenario rollouts.

pub mod actor;
pub mod control;
pub mod fsm;
pub mod map;
pub mod planner;
pub mod predicates;
pub mod world;

pub use actor::{Actor, BodyDims, Gnss, Pose, Primitive};
pub use control::{pid_step, Commands, ControlConfig, PidGains, PidState};
pub use fsm::{run, FsmMonitor, RunResult, Verdict};
pub use map::{
    EgoRoute, IntersectionZone, Lane, LightPhase, LightState, MapLibrary, RoadMap, TrafficLight,
};
pub use planner::{plan_route, PlannedRoute};
pub use predicates::{eval_predicate, PredicateThresholds};
pub use world::{ActorSnapshot, CollisionEvent, SimWorld, TickSnapshot, DT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
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
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("unknown lane '{0}'")]
    UnknownLane(String),
    #[error("unknown route '{0}'")]
    UnknownRoute(String),
    #[error("unknown actor '{0}'")]
    UnknownActor(String),
    #[error("position off the drivable network: {0}")]
    OffMap(String),
    #[error("no lane path between start and goal")]
    NoPath,
    #[error("predicate evaluation failed: {0}")]
    Predicate(String),
    #[error("FSM error: {0}")]
    Fsm(String),
}

/// Spawns the ego actor on its predefined route. The route's stop time, if
/// any, scripts the hard stop that realizes "stop abruptly" behaviors.
pub fn spawn_ego(map: &RoadMap, route: &EgoRoute) -> Result<Actor, SimError> {
    let lane = map.lane(&route.lane)?;
    let (start, heading) = lane.point_at(route.start_s);
    let goal_lane = map.lane(&route.goal_lane)?;
    let (goal, _) = goal_lane.point_at(route.goal_s);
    let planned = plan_route(map, start, goal)?;
    let primitive = match route.stop_at_s {
        Some(stop_at_s) => Primitive::StopAbruptly {
            target_speed: route.target_speed,
            stop_at_s: Some(stop_at_s),
        },
        None => Primitive::DrivingForward {
            target_speed: route.target_speed,
        },
    };
    Ok(Actor::new(
        "ego-vehicle",
        "ego-vehicle",
        Pose {
            x: start[0],
            y: start[1],
            heading,
        },
        primitive,
        planned.waypoints,
    ))
}
