//! Actors: kinematic state, motion primitives, discrete properties, GNSS.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::control::PidState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Parameterized actor behavior. Spawn pose supplies the start location;
/// routes come from the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Hold the spawn location forever.
    Stationary,
    /// Follow the route at the target speed, hard-stopping at the route end.
    DrivingForward { target_speed: f64 },
    /// Same tracking as driving forward; the route itself carries the lane
    /// change.
    ChangeLanes { target_speed: f64 },
    /// Drive at the target speed, then brake hard: at the scripted time if
    /// given, otherwise when the route end comes within braking distance.
    StopAbruptly {
        target_speed: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        stop_at_s: Option<f64>,
    },
    /// Remain stationary for the delay, then drive the route. Realizes
    /// distracted-driver style behaviors as a pure motion signature.
    DelayedStart { target_speed: f64, delay_s: f64 },
}

impl Primitive {
    pub fn cruise_speed(&self) -> f64 {
        match self {
            Primitive::Stationary => 0.0,
            Primitive::DrivingForward { target_speed }
            | Primitive::ChangeLanes { target_speed }
            | Primitive::StopAbruptly { target_speed, .. }
            | Primitive::DelayedStart { target_speed, .. } => *target_speed,
        }
    }

    /// Speed the actor holds at spawn time.
    pub fn initial_speed(&self) -> f64 {
        match self {
            Primitive::Stationary | Primitive::DelayedStart { .. } => 0.0,
            other => other.cruise_speed(),
        }
    }
}

/// Oriented bounding box dimensions, from the asset catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyDims {
    pub length: f64,
    pub width: f64,
}

pub fn body_for_asset(asset_id: &str) -> BodyDims {
    match asset_id {
        "pedestrian" => BodyDims {
            length: 0.5,
            width: 0.5,
        },
        "bicycle" => BodyDims {
            length: 1.8,
            width: 0.6,
        },
        "debris" | "box" => BodyDims {
            length: 1.0,
            width: 1.0,
        },
        "delivery truck" => BodyDims {
            length: 7.0,
            width: 2.4,
        },
        "intersection" => BodyDims {
            length: 0.1,
            width: 0.1,
        },
        _ => BodyDims {
            length: 4.8,
            width: 2.0,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Gnss {
    pub enabled: bool,
    pub sigma: f64,
    pub last_reading: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub name: String,
    pub asset_id: String,
    pub pose: Pose,
    pub speed: f64,
    pub a_max: f64,
    pub b_max: f64,
    pub wheelbase: f64,
    pub body: BodyDims,
    pub route: Vec<[f64; 2]>,
    pub primitive: Primitive,
    pub properties: BTreeMap<String, String>,
    /// Keys whose values were pinned by a counterfactual; the derived
    /// brake-light rule must not overwrite them.
    pub pinned_properties: BTreeSet<String>,
    pub gnss: Gnss,
    /// If this actor mirrors a traffic light, the light id it tracks.
    pub linked_light: Option<String>,

    // Controller and predicate bookkeeping, updated every tick.
    pub pid: PidState,
    pub last_accel_cmd: f64,
    /// Set once a hard brake completes; the actor holds its rest pose.
    pub stop_latched: bool,
    pub stopped_ticks: u32,
    pub steady_ticks: u32,
    /// Route target speed used by the driving-steady predicate.
    pub steady_reference: f64,
}

impl Actor {
    pub fn new(
        name: impl Into<String>,
        asset_id: impl Into<String>,
        pose: Pose,
        primitive: Primitive,
        route: Vec<[f64; 2]>,
    ) -> Self {
        let asset_id = asset_id.into();
        let body = body_for_asset(&asset_id);
        let speed = primitive.initial_speed();
        let steady_reference = primitive.cruise_speed();
        Actor {
            name: name.into(),
            asset_id,
            pose,
            speed,
            a_max: 3.0,
            b_max: 6.0,
            wheelbase: 2.7,
            body,
            route,
            primitive,
            properties: BTreeMap::new(),
            pinned_properties: BTreeSet::new(),
            gnss: Gnss::default(),
            linked_light: None,
            pid: PidState::default(),
            last_accel_cmd: 0.0,
            stop_latched: false,
            stopped_ticks: 0,
            steady_ticks: 0,
            steady_reference,
        }
    }

    pub fn with_properties(mut self, props: &BTreeMap<String, String>) -> Self {
        self.properties = props.clone();
        self
    }

    /// Pins a property to a fixed value (counterfactual override).
    pub fn pin_property(&mut self, key: &str, value: &str) {
        self.properties.insert(key.to_string(), value.to_string());
        self.pinned_properties.insert(key.to_string());
    }

    pub fn remaining_route_distance(&self) -> f64 {
        if self.route.len() < 2 {
            return 0.0;
        }
        let (idx, _) = super::control::nearest_on_path(&self.route, self.pose.x, self.pose.y);
        if idx + 1 >= self.route.len() {
            // At or past the last waypoint: remaining is the forward
            // component toward it, never negative.
            let last = self.route[self.route.len() - 1];
            let forward = (last[0] - self.pose.x) * self.pose.heading.cos()
                + (last[1] - self.pose.y) * self.pose.heading.sin();
            return forward.max(0.0);
        }
        let next = self.route[idx + 1];
        let mut d = ((next[0] - self.pose.x).powi(2) + (next[1] - self.pose.y).powi(2)).sqrt();
        for w in self.route[idx + 1..].windows(2) {
            d += ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        }
        d
    }

    /// Corner points of the oriented bounding box.
    pub fn obb_corners(&self) -> [[f64; 2]; 4] {
        let (c, s) = (self.pose.heading.cos(), self.pose.heading.sin());
        let hl = self.body.length / 2.0;
        let hw = self.body.width / 2.0;
        let mut corners = [[0.0; 2]; 4];
        for (i, (dx, dy)) in [(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)].iter().enumerate() {
            corners[i] = [
                self.pose.x + dx * c - dy * s,
                self.pose.y + dx * s + dy * c,
            ];
        }
        corners
    }
}

/// Separating-axis overlap test for two oriented boxes.
pub fn obb_overlap(a: &Actor, b: &Actor) -> bool {
    let ca = a.obb_corners();
    let cb = b.obb_corners();
    let axes = [
        a.pose.heading,
        a.pose.heading + std::f64::consts::FRAC_PI_2,
        b.pose.heading,
        b.pose.heading + std::f64::consts::FRAC_PI_2,
    ];
    for axis in axes {
        let (ux, uy) = (axis.cos(), axis.sin());
        let proj = |corners: &[[f64; 2]; 4]| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for c in corners {
                let p = c[0] * ux + c[1] * uy;
                lo = lo.min(p);
                hi = hi.max(p);
            }
            (lo, hi)
        };
        let (alo, ahi) = proj(&ca);
        let (blo, bhi) = proj(&cb);
        if ahi < blo || bhi < alo {
            return false;
        }
    }
    true
}
