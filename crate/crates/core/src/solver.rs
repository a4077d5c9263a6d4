//! Placement solving: assign concrete start/end coordinates and speeds so
//! the compiled FSM is feasible.
//!
//! Candidates are enumerated over the placement vocabulary's geometric
//! regions at a fixed grid resolution, statically pruned (spawn gap), and
//! verified by rolling out the simulator; the first candidate in the
//! deterministic order whose rollout reaches the terminal stage wins. This
//! keeps the result exactly checkable against exhaustive enumeration.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::compiler::{PlacementSpot, ScenarioConfig, VehicleSetup};
use crate::sim2d::fsm::{run, RunResult, Verdict};
use crate::sim2d::map::{EgoRoute, RoadMap, DEFAULT_LANE_WIDTH};
use crate::sim2d::{
    plan_route, spawn_ego, Actor, Pose, Primitive, SimError, SimWorld, TickSnapshot,
};

pub const KMH_TO_MPS: f64 = 1.0 / 3.6;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("unknown location phrase '{0}'")]
    UnknownPhrase(String),
    #[error("phrase '{phrase}' has an empty region on this map: {reason}")]
    EmptyRegion { phrase: String, reason: String },
    #[error("no candidate assignments for this config")]
    NoCandidates,
    #[error("unknown behavior action '{0}'")]
    UnknownAction(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Which lane a phrase selects, relative to the ego's starting lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneSelector {
    Same,
    Adjacent,
}

/// A longitudinal interval on a lane, in meters relative to the ego spawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub lane: LaneSelector,
    pub offset: [f64; 2],
}

/// Canonical location phrases mapped to geometric region generators.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementVocabulary {
    entries: BTreeMap<String, RegionSpec>,
}

impl Default for PlacementVocabulary {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            "behind the ego-vehicle on same lane".to_string(),
            RegionSpec {
                lane: LaneSelector::Same,
                offset: [-40.0, -10.0],
            },
        );
        entries.insert(
            "behind the ego-vehicle on adjacent lane".to_string(),
            RegionSpec {
                lane: LaneSelector::Adjacent,
                offset: [-40.0, -10.0],
            },
        );
        entries.insert(
            "in front of ego-vehicle on same lane".to_string(),
            RegionSpec {
                lane: LaneSelector::Same,
                offset: [10.0, 80.0],
            },
        );
        entries.insert(
            "in front of ego-vehicle on adjacent lane".to_string(),
            RegionSpec {
                lane: LaneSelector::Adjacent,
                offset: [10.0, 80.0],
            },
        );
        PlacementVocabulary { entries }
    }
}

impl PlacementVocabulary {
    pub fn region(&self, phrase: &str) -> Result<RegionSpec, SolveError> {
        self.entries
            .get(phrase)
            .copied()
            .ok_or_else(|| SolveError::UnknownPhrase(phrase.to_string()))
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Search resolution and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Longitudinal spacing between candidate poses (m).
    pub grid_step: f64,
    /// Speed spacing within a declared range (m/s).
    pub speed_step: f64,
    /// Cap on assignments examined.
    pub max_candidates: usize,
    /// Minimum spawn distance from the ego along the road (m).
    pub gap_min: f64,
    /// Rollout budget per candidate.
    pub max_ticks: u64,
    /// Seed for rollouts (GNSS noise etc.).
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            grid_step: 5.0,
            speed_step: 2.0,
            max_candidates: 2000,
            gap_min: 8.0,
            max_ticks: 900,
            seed: 0,
        }
    }
}

/// Concrete values for one entity's placement variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub x0: f64,
    pub y0: f64,
    pub heading0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<[f64; 2]>,
    pub speed_mps: f64,
}

impl Assignment {
    pub fn speed_kmh(&self) -> f64 {
        self.speed_mps / KMH_TO_MPS
    }
}

/// Solver output: the config with its vehicles table filled, the chosen
/// assignments, and the witness rollout when feasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcreteScenario {
    pub config: ScenarioConfig,
    pub assignments: BTreeMap<String, Assignment>,
    pub feasible: bool,
    pub verdict: Verdict,
    pub stage_log: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_unmet_stage: Option<usize>,
    pub candidates_tried: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_trace: Option<Vec<TickSnapshot>>,
}

impl ConcreteScenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("concrete scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Deterministic, sorted candidate poses covering a phrase's region at
/// `grid_step` spacing, all on-lane.
pub fn enumerate_candidates(
    vocab: &PlacementVocabulary,
    phrase: &str,
    map: &RoadMap,
    route: &EgoRoute,
    grid_step: f64,
) -> Result<Vec<(f64, f64, f64)>, SolveError> {
    let region = vocab.region(phrase)?;
    let ego_lane = map.lane(&route.lane)?;
    let lane = match region.lane {
        LaneSelector::Same => ego_lane,
        LaneSelector::Adjacent => {
            let neighbor = ego_lane.left.as_deref().or(ego_lane.right.as_deref());
            match neighbor {
                Some(id) => map.lane(id)?,
                None => return Ok(Vec::new()),
            }
        }
    };
    let mut poses = Vec::new();
    let [lo, hi] = region.offset;
    let mut offset = lo;
    while offset <= hi + 1e-9 {
        let s = route.start_s + offset;
        if s >= 0.0 && s <= lane.length() {
            let ([x, y], heading) = lane.point_at(s);
            poses.push((x, y, heading));
        }
        offset += grid_step;
    }
    Ok(poses)
}

/// Center pose of a phrase's region (used for candidate ordering).
fn region_center(
    vocab: &PlacementVocabulary,
    phrase: &str,
    map: &RoadMap,
    route: &EgoRoute,
) -> Result<Option<[f64; 2]>, SolveError> {
    let region = vocab.region(phrase)?;
    let ego_lane = map.lane(&route.lane)?;
    let lane = match region.lane {
        LaneSelector::Same => ego_lane,
        LaneSelector::Adjacent => {
            match ego_lane.left.as_deref().or(ego_lane.right.as_deref()) {
                Some(id) => map.lane(id)?,
                None => return Ok(None),
            }
        }
    };
    let mid = route.start_s + (region.offset[0] + region.offset[1]) / 2.0;
    let (p, _) = lane.point_at(mid);
    Ok(Some(p))
}

/// True iff every actor spawn keeps the minimum along-road gap from the ego
/// spawn. Spawns far to the side (another road) pass automatically.
pub fn min_spawn_gap_check(
    assignments: &BTreeMap<String, Assignment>,
    ego_spawn: &Pose,
    gap_min: f64,
) -> bool {
    let (c, s) = (ego_spawn.heading.cos(), ego_spawn.heading.sin());
    assignments.values().all(|a| {
        let dx = a.x0 - ego_spawn.x;
        let dy = a.y0 - ego_spawn.y;
        let longitudinal = dx * c + dy * s;
        let lateral = -dx * s + dy * c;
        longitudinal.abs() >= gap_min || lateral.abs() > 2.0 * DEFAULT_LANE_WIDTH
    })
}

struct EntityCandidates {
    name: String,
    options: Vec<Assignment>,
}

/// Per-entity candidate assignments, each list sorted by distance to the
/// region centers with (x0, y0, xT, yT, speed) tie-breaking.
fn entity_candidates(
    config: &ScenarioConfig,
    map: &RoadMap,
    route: &EgoRoute,
    vocab: &PlacementVocabulary,
    params: &SearchParams,
) -> Result<Vec<EntityCandidates>, SolveError> {
    let mut out = Vec::new();
    for (name, decl) in &config.placement_vars {
        let (starts, start_center) = match &decl.start {
            PlacementSpot::Phrase { phrase } => {
                let poses = enumerate_candidates(vocab, phrase, map, route, params.grid_step)?;
                if poses.is_empty() {
                    return Err(SolveError::EmptyRegion {
                        phrase: phrase.clone(),
                        reason: "no adjacent lane or region off the lane".into(),
                    });
                }
                let center = region_center(vocab, phrase, map, route)?;
                (poses, center)
            }
            PlacementSpot::Fixed { x, y } => {
                let heading = map
                    .nearest_lane(*x, *y)
                    .map(|(lane, s, _)| lane.point_at(s).1)
                    .unwrap_or(0.0);
                (vec![(*x, *y, heading)], Some([*x, *y]))
            }
        };
        let (ends, end_center): (Vec<Option<[f64; 2]>>, Option<[f64; 2]>) = match &decl.end {
            Some(PlacementSpot::Phrase { phrase }) => {
                let poses = enumerate_candidates(vocab, phrase, map, route, params.grid_step)?;
                if poses.is_empty() {
                    return Err(SolveError::EmptyRegion {
                        phrase: phrase.clone(),
                        reason: "no adjacent lane or region off the lane".into(),
                    });
                }
                let center = region_center(vocab, phrase, map, route)?;
                (
                    poses.into_iter().map(|(x, y, _)| Some([x, y])).collect(),
                    center,
                )
            }
            Some(PlacementSpot::Fixed { x, y }) => (vec![Some([*x, *y])], Some([*x, *y])),
            None => (vec![None], None),
        };

        let lo = decl.speed_range_kmh[0] * KMH_TO_MPS;
        let hi = decl.speed_range_kmh[1] * KMH_TO_MPS;
        let mut speeds = Vec::new();
        let mut v = lo;
        while v <= hi + 1e-9 {
            speeds.push(v);
            v += params.speed_step;
        }
        if let Some(&last) = speeds.last() {
            if hi - last > 1e-6 {
                speeds.push(hi);
            }
        }
        if speeds.is_empty() {
            speeds.push(lo);
        }

        let mut options = Vec::new();
        for &(x0, y0, heading0) in &starts {
            for end in &ends {
                for &speed in &speeds {
                    options.push(Assignment {
                        x0,
                        y0,
                        heading0,
                        end: *end,
                        speed_mps: speed,
                    });
                }
            }
        }
        let dist = |p: [f64; 2], c: Option<[f64; 2]>| match c {
            Some(c) => ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt(),
            None => 0.0,
        };
        options.sort_by(|a, b| {
            let ka =
                dist([a.x0, a.y0], start_center) + dist(a.end.unwrap_or([a.x0, a.y0]), end_center);
            let kb =
                dist([b.x0, b.y0], start_center) + dist(b.end.unwrap_or([b.x0, b.y0]), end_center);
            ka.total_cmp(&kb)
                .then(a.x0.total_cmp(&b.x0))
                .then(a.y0.total_cmp(&b.y0))
                .then(
                    a.end
                        .unwrap_or([f64::MAX, f64::MAX])
                        .partial_cmp(&b.end.unwrap_or([f64::MAX, f64::MAX]))
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
                .then(a.speed_mps.total_cmp(&b.speed_mps))
        });
        out.push(EntityCandidates {
            name: name.clone(),
            options,
        });
    }
    Ok(out)
}

/// Every joint assignment in deterministic order (odometer over the sorted
/// per-entity lists, last entity fastest), capped at `max_candidates`.
pub fn enumerate_assignments(
    config: &ScenarioConfig,
    map: &RoadMap,
    route: &EgoRoute,
    vocab: &PlacementVocabulary,
    params: &SearchParams,
) -> Result<Vec<BTreeMap<String, Assignment>>, SolveError> {
    let per_entity = entity_candidates(config, map, route, vocab, params)?;
    if per_entity.is_empty() {
        return Ok(vec![BTreeMap::new()]);
    }
    let sizes: Vec<usize> = per_entity.iter().map(|e| e.options.len()).collect();
    if sizes.contains(&0) {
        return Err(SolveError::NoCandidates);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_entity.len()];
    loop {
        let mut joint = BTreeMap::new();
        for (k, entity) in per_entity.iter().enumerate() {
            joint.insert(entity.name.clone(), entity.options[idx[k]].clone());
        }
        out.push(joint);
        if out.len() >= params.max_candidates {
            break;
        }
        // odometer increment, last position fastest
        let mut pos = per_entity.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(out)
}

fn primitive_for(action: &str, speed: f64, delay_s: Option<f64>) -> Result<Primitive, SolveError> {
    Ok(match action {
        "stationary" => Primitive::Stationary,
        "constant speed" | "walking" => Primitive::DrivingForward {
            target_speed: speed,
        },
        "change lanes" => Primitive::ChangeLanes {
            target_speed: speed,
        },
        "stop abruptly" => Primitive::StopAbruptly {
            target_speed: speed,
            stop_at_s: None,
        },
        "delayed start" => Primitive::DelayedStart {
            target_speed: speed,
            delay_s: delay_s.unwrap_or(2.0),
        },
        other => return Err(SolveError::UnknownAction(other.to_string())),
    })
}

fn wheelbase_for(asset_id: &str) -> f64 {
    match asset_id {
        "pedestrian" => 0.5,
        "bicycle" => 1.2,
        "delivery truck" => 4.0,
        _ => 2.7,
    }
}

/// Builds the simulation world for one joint assignment: ego on its route,
/// every other entity spawned per its assignment, static properties pinned.
pub fn build_world(
    config: &ScenarioConfig,
    map: &RoadMap,
    route: &EgoRoute,
    assignments: &BTreeMap<String, Assignment>,
) -> Result<SimWorld, SolveError> {
    let mut world = SimWorld::new(map.clone());
    let ego = spawn_ego(map, route)?;
    world.add_actor(ego);
    for entity in &config.entities {
        if entity.name == "ego-vehicle" {
            continue;
        }
        let Some(assignment) = assignments.get(&entity.name) else {
            continue;
        };
        let action = entity
            .behavioral_properties
            .get("action")
            .cloned()
            .unwrap_or_else(|| "stationary".into());
        let delay_s = entity
            .behavioral_properties
            .get("delay")
            .and_then(|d| d.trim().trim_end_matches(" s").parse::<f64>().ok());
        let primitive = primitive_for(&action, assignment.speed_mps, delay_s)?;
        let spawn = [assignment.x0, assignment.y0];
        let route_points = if matches!(primitive, Primitive::Stationary) {
            Vec::new()
        } else {
            let goal = match assignment.end {
                Some(end) => end,
                None => {
                    // Drive to the end of the spawn lane.
                    let (lane, _, _) = map
                        .nearest_lane(spawn[0], spawn[1])
                        .ok_or_else(|| SimError::OffMap(format!("{spawn:?}")))?;
                    let (p, _) = lane.point_at(lane.length());
                    p
                }
            };
            plan_route(map, spawn, goal)?.waypoints
        };
        let mut actor = Actor::new(
            entity.name.clone(),
            entity.asset_id.clone(),
            Pose {
                x: assignment.x0,
                y: assignment.y0,
                heading: assignment.heading0,
            },
            primitive,
            route_points,
        );
        actor.wheelbase = wheelbase_for(&entity.asset_id);
        // Config-declared properties are scenario facts: pin them so the
        // derived brake-light rule cannot overwrite a counterfactual.
        for (key, value) in &entity.static_properties {
            actor.pin_property(key, value);
        }
        if entity.asset_id == "intersection" {
            if let Some(zone) = map.intersections.first() {
                actor.pose.x = zone.center[0];
                actor.pose.y = zone.center[1];
                actor.linked_light = zone.traffic_light_ids.first().cloned();
                if let Some(state_value) = entity.static_properties.get("traffic light") {
                    if let (Some(light_id), Some(state)) = (
                        actor.linked_light.clone(),
                        crate::sim2d::LightState::from_name(state_value),
                    ) {
                        world.pin_light(&light_id, state);
                    }
                }
            }
        }
        world.add_actor(actor);
    }
    Ok(world)
}

/// Rolls out one assignment under the config's FSM.
pub fn rollout(
    config: &ScenarioConfig,
    map: &RoadMap,
    route: &EgoRoute,
    assignments: &BTreeMap<String, Assignment>,
    params: &SearchParams,
) -> Result<(RunResult, SimWorld), SolveError> {
    let mut world = build_world(config, map, route, assignments)?;
    let result = run(
        &mut world,
        &config.fsm,
        &config.predicates,
        params.max_ticks,
        params.seed,
    )?;
    Ok((result, world))
}

fn fill_vehicles(config: &mut ScenarioConfig, assignments: &BTreeMap<String, Assignment>) {
    config.vehicles = config
        .entities
        .iter()
        .filter(|e| e.name != "ego-vehicle")
        .filter_map(|e| {
            assignments.get(&e.name).map(|a| VehicleSetup {
                name: e.name.clone(),
                start: crate::compiler::Coord { x: a.x0, y: a.y0 },
                end: a.end.map(|p| crate::compiler::Coord { x: p[0], y: p[1] }),
                speed_range: [a.speed_kmh(), a.speed_kmh()],
                blueprint_id: None,
                driving_policy: e
                    .behavioral_properties
                    .get("action")
                    .cloned()
                    .unwrap_or_default(),
                vehicle_type: match e.entity_type {
                    crate::compiler::EntityType::Agent => "dynamic".into(),
                    crate::compiler::EntityType::Object => "static".into(),
                },
                heading: a.heading0,
            })
        })
        .collect();
}

/// Grid search with rollout verification: returns the first feasible
/// candidate in deterministic order, or the best-progress candidate with
/// `feasible = false` and the first unmet stage.
pub fn solve_placement(
    config: &ScenarioConfig,
    map: &RoadMap,
    route: &EgoRoute,
    vocab: &PlacementVocabulary,
    params: &SearchParams,
) -> Result<ConcreteScenario, SolveError> {
    let all = enumerate_assignments(config, map, route, vocab, params)?;
    if all.is_empty() {
        return Err(SolveError::NoCandidates);
    }
    let ego_lane = map.lane(&route.lane)?;
    let (ego_xy, ego_heading) = ego_lane.point_at(route.start_s);
    let ego_spawn = Pose {
        x: ego_xy[0],
        y: ego_xy[1],
        heading: ego_heading,
    };

    let mut best: Option<(usize, BTreeMap<String, Assignment>, RunResult)> = None;
    let mut tried = 0usize;
    for assignments in &all {
        if !min_spawn_gap_check(assignments, &ego_spawn, params.gap_min) {
            continue;
        }
        tried += 1;
        let (result, world) = match rollout(config, map, route, assignments, params) {
            Ok(ok) => ok,
            // Unroutable placements (e.g. a goal behind a lane-change ramp)
            // are just invalid candidates, not solver failures.
            Err(SolveError::Sim(SimError::NoPath | SimError::OffMap(_))) => continue,
            Err(e) => return Err(e),
        };
        // Feasible means the FSM accepted and nothing collided; placements
        // that force a crash are never valid placements.
        if result.verdict == Verdict::Accepted && world.collisions.is_empty() {
            let mut config = config.clone();
            fill_vehicles(&mut config, assignments);
            return Ok(ConcreteScenario {
                config,
                assignments: assignments.clone(),
                feasible: true,
                verdict: Verdict::Accepted,
                stage_log: result.stage_log.clone(),
                first_unmet_stage: None,
                candidates_tried: tried,
                seed: params.seed,
                witness_trace: Some(world.trace),
            });
        }
        let progress = result.stage_log.len();
        if best.as_ref().is_none_or(|(p, _, _)| progress > *p) {
            best = Some((progress, assignments.clone(), result));
        }
    }

    // No candidate even produced a rollout (all pruned or unroutable):
    // infeasible from stage zero, reporting the first-ordered candidate.
    let (_, assignments, verdict, stage_log, first_unmet) = match best {
        Some((_, assignments, result)) => (
            0,
            assignments,
            result.verdict,
            result.stage_log.clone(),
            result.first_unmet_stage,
        ),
        None => (
            0,
            all.first().cloned().unwrap_or_default(),
            Verdict::Stalled,
            Vec::new(),
            Some(0),
        ),
    };
    let mut config = config.clone();
    fill_vehicles(&mut config, &assignments);
    Ok(ConcreteScenario {
        config,
        assignments,
        feasible: false,
        verdict,
        stage_log,
        first_unmet_stage: first_unmet,
        candidates_tried: tried,
        seed: params.seed,
        witness_trace: None,
    })
}
