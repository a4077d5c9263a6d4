//! Road network: lanes as centerline polylines with adjacency and
//! successors, intersection zones, traffic lights, and predefined ego
//! routes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use super::SimError;

pub const DEFAULT_LANE_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightState {
    Red,
    Green,
    Yellow,
    Off,
}

impl LightState {
    pub fn as_str(self) -> &'static str {
        match self {
            LightState::Red => "red",
            LightState::Green => "green",
            LightState::Yellow => "yellow",
            LightState::Off => "off",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "red" => Some(LightState::Red),
            "green" => Some(LightState::Green),
            "yellow" => Some(LightState::Yellow),
            "off" => Some(LightState::Off),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightPhase {
    pub state: LightState,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLight {
    pub id: String,
    pub intersection: String,
    pub phases: Vec<LightPhase>,
}

impl TrafficLight {
    /// Phase state at simulation time `t`, cycling through the schedule.
    pub fn state_at(&self, t: f64) -> LightState {
        let cycle: f64 = self.phases.iter().map(|p| p.duration_s).sum();
        if cycle <= 0.0 || self.phases.is_empty() {
            return LightState::Off;
        }
        let mut rem = t.rem_euclid(cycle);
        for phase in &self.phases {
            if rem < phase.duration_s {
                return phase.state;
            }
            rem -= phase.duration_s;
        }
        self.phases.last().map(|p| p.state).unwrap_or(LightState::Off)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionZone {
    pub id: String,
    pub center: [f64; 2],
    pub half_extent: f64,
    pub incoming: Vec<String>,
    pub traffic_light_ids: Vec<String>,
}

impl IntersectionZone {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).abs() <= self.half_extent
            && (y - self.center[1]).abs() <= self.half_extent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub successors: Vec<String>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.centerline
            .windows(2)
            .map(|w| dist(w[0], w[1]))
            .sum()
    }

    /// Point and tangent heading at arc length `s` (clamped to the lane).
    pub fn point_at(&self, s: f64) -> ([f64; 2], f64) {
        let s = s.clamp(0.0, self.length());
        let mut remaining = s;
        for w in self.centerline.windows(2) {
            let seg = dist(w[0], w[1]);
            if remaining <= seg || seg <= f64::EPSILON {
                let t = if seg <= f64::EPSILON {
                    0.0
                } else {
                    remaining / seg
                };
                let x = w[0][0] + t * (w[1][0] - w[0][0]);
                let y = w[0][1] + t * (w[1][1] - w[0][1]);
                let heading = (w[1][1] - w[0][1]).atan2(w[1][0] - w[0][0]);
                return ([x, y], heading);
            }
            remaining -= seg;
        }
        let n = self.centerline.len();
        let last = self.centerline[n - 1];
        let prev = self.centerline[n - 2];
        ([last[0], last[1]], (last[1] - prev[1]).atan2(last[0] - prev[0]))
    }

    /// Projects a point onto the lane: (arc length, signed lateral offset).
    /// Positive lateral is to the left of the direction of travel.
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        let mut s_base = 0.0;
        for w in self.centerline.windows(2) {
            let seg = dist(w[0], w[1]);
            if seg <= f64::EPSILON {
                continue;
            }
            let ux = (w[1][0] - w[0][0]) / seg;
            let uy = (w[1][1] - w[0][1]) / seg;
            let dx = x - w[0][0];
            let dy = y - w[0][1];
            let along = (dx * ux + dy * uy).clamp(0.0, seg);
            let lat = -dx * uy + dy * ux;
            let px = w[0][0] + along * ux;
            let py = w[0][1] + along * uy;
            let d = ((x - px).powi(2) + (y - py).powi(2)).sqrt();
            if d < best.1.abs() {
                best = (s_base + along, if lat >= 0.0 { d } else { -d });
            }
            s_base += seg;
        }
        best
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// A predefined ego route: start and goal on the lane graph, a target
/// speed, and optionally a scripted hard stop at a fixed time (how "stop
/// abruptly" behaviors are realized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoRoute {
    pub id: String,
    pub lane: String,
    pub start_s: f64,
    pub goal_lane: String,
    pub goal_s: f64,
    pub target_speed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_at_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapFile {
    id: String,
    lanes: Vec<Lane>,
    #[serde(default)]
    intersections: Vec<IntersectionZone>,
    #[serde(default)]
    traffic_lights: Vec<TrafficLight>,
    #[serde(default)]
    routes: Vec<EgoRoute>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub id: String,
    pub lanes: BTreeMap<String, Lane>,
    pub intersections: Vec<IntersectionZone>,
    pub traffic_lights: Vec<TrafficLight>,
    pub routes: BTreeMap<String, EgoRoute>,
}

impl RoadMap {
    pub fn new(
        id: impl Into<String>,
        lanes: Vec<Lane>,
        intersections: Vec<IntersectionZone>,
        traffic_lights: Vec<TrafficLight>,
        routes: Vec<EgoRoute>,
    ) -> Result<Self, SimError> {
        let map = RoadMap {
            id: id.into(),
            lanes: lanes.into_iter().map(|l| (l.id.clone(), l)).collect(),
            intersections,
            traffic_lights,
            routes: routes.into_iter().map(|r| (r.id.clone(), r)).collect(),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: MapFile = serde_json::from_str(&text).map_err(|source| SimError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        Self::new(
            file.id,
            file.lanes,
            file.intersections,
            file.traffic_lights,
            file.routes,
        )
    }

    fn validate(&self) -> Result<(), SimError> {
        for lane in self.lanes.values() {
            if lane.centerline.len() < 2 {
                return Err(SimError::InvalidMap(format!(
                    "lane '{}' needs at least two centerline points",
                    lane.id
                )));
            }
            if self_intersects(&lane.centerline) {
                return Err(SimError::InvalidMap(format!(
                    "lane '{}' centerline self-intersects",
                    lane.id
                )));
            }
            for (neighbor, back) in [(&lane.left, "right"), (&lane.right, "left")] {
                if let Some(n) = neighbor {
                    let other = self.lanes.get(n).ok_or_else(|| {
                        SimError::InvalidMap(format!(
                            "lane '{}' adjacent to missing lane '{n}'",
                            lane.id
                        ))
                    })?;
                    let reciprocal = if back == "right" {
                        other.right.as_deref()
                    } else {
                        other.left.as_deref()
                    };
                    if reciprocal != Some(lane.id.as_str()) {
                        return Err(SimError::InvalidMap(format!(
                            "adjacency between '{}' and '{n}' is not symmetric",
                            lane.id
                        )));
                    }
                }
            }
            for succ in &lane.successors {
                if !self.lanes.contains_key(succ) {
                    return Err(SimError::InvalidMap(format!(
                        "lane '{}' successor '{succ}' missing",
                        lane.id
                    )));
                }
            }
        }
        for light in &self.traffic_lights {
            let zone = self
                .intersections
                .iter()
                .find(|z| z.id == light.intersection)
                .ok_or_else(|| {
                    SimError::InvalidMap(format!(
                        "traffic light '{}' references missing intersection '{}'",
                        light.id, light.intersection
                    ))
                })?;
            if !zone.traffic_light_ids.contains(&light.id) {
                return Err(SimError::InvalidMap(format!(
                    "intersection '{}' does not list traffic light '{}'",
                    zone.id, light.id
                )));
            }
        }
        for route in self.routes.values() {
            for lane in [&route.lane, &route.goal_lane] {
                if !self.lanes.contains_key(lane) {
                    return Err(SimError::InvalidMap(format!(
                        "route '{}' references missing lane '{lane}'",
                        route.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lane(&self, id: &str) -> Result<&Lane, SimError> {
        self.lanes
            .get(id)
            .ok_or_else(|| SimError::UnknownLane(id.to_string()))
    }

    pub fn route(&self, id: &str) -> Result<&EgoRoute, SimError> {
        self.routes
            .get(id)
            .ok_or_else(|| SimError::UnknownRoute(id.to_string()))
    }

    /// Lane whose centerline is nearest to the point, with the projection.
    /// `None` when every lane is farther than its half width plus margin.
    pub fn nearest_lane(&self, x: f64, y: f64) -> Option<(&Lane, f64, f64)> {
        let mut best: Option<(&Lane, f64, f64)> = None;
        for lane in self.lanes.values() {
            let (s, lat) = lane.project(x, y);
            if best.as_ref().is_none_or(|(_, _, bl)| lat.abs() < bl.abs()) {
                best = Some((lane, s, lat));
            }
        }
        best.filter(|(lane, _, lat)| lat.abs() <= lane.width / 2.0 + 0.5)
    }

    pub fn in_any_intersection(&self, x: f64, y: f64) -> bool {
        self.intersections.iter().any(|z| z.contains(x, y))
    }
}

/// Loads maps by id from a directory of `<id>.map.json` files.
#[derive(Debug, Clone)]
pub struct MapLibrary {
    dir: std::path::PathBuf,
}

impl MapLibrary {
    pub fn new(dir: impl Into<std::path::PathBuf>) -> Self {
        MapLibrary { dir: dir.into() }
    }

    pub fn load(&self, map_id: &str) -> Result<RoadMap, SimError> {
        RoadMap::load(self.dir.join(format!("{map_id}.map.json")))
    }

    /// Resolves "map_id/route_id" against the library.
    pub fn resolve_route(&self, full_route_id: &str) -> Result<(RoadMap, EgoRoute), SimError> {
        let (map_id, route_id) = full_route_id
            .split_once('/')
            .ok_or_else(|| SimError::UnknownRoute(full_route_id.to_string()))?;
        let map = self.load(map_id)?;
        let route = map.route(route_id)?.clone();
        Ok((map, route))
    }
}

fn self_intersects(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n.saturating_sub(1) {
        for j in (i + 2)..n.saturating_sub(1) {
            // Adjacent segments share an endpoint; skip the wraparound pair.
            if segments_cross(poly[i], poly[i + 1], poly[j], poly[j + 1]) {
                return true;
            }
        }
    }
    false
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    }
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}
