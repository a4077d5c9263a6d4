//! Discrete-time world stepping: kinematic bicycle integration, traffic
//! light phases, derived brake lights, seeded GNSS noise, OBB collision
//! events, and the per-tick trace.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::actor::{obb_overlap, Actor, Primitive};
use super::control::{pid_step, ControlConfig};
use super::map::{LightState, RoadMap};
use super::SimError;

/// Fixed integration step. Every rollout in the system runs at this rate.
pub const DT: f64 = 0.05;

/// Commanded deceleration beyond which brake lights derive to "on".
pub const BRAKE_LIGHT_DECEL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSnapshot {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub accel_cmd: f64,
    pub properties: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gnss: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSnapshot {
    pub tick: u64,
    pub actors: Vec<ActorSnapshot>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lights: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub tick: u64,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone)]
pub struct SimWorld {
    pub map: RoadMap,
    pub actors: Vec<Actor>,
    pub tick: u64,
    pub dt: f64,
    pub control: ControlConfig,
    pub trace: Vec<TickSnapshot>,
    pub collisions: Vec<CollisionEvent>,
    pub pinned_lights: BTreeMap<String, LightState>,
}

impl SimWorld {
    pub fn new(map: RoadMap) -> Self {
        SimWorld {
            map,
            actors: Vec::new(),
            tick: 0,
            dt: DT,
            control: ControlConfig::default(),
            trace: Vec::new(),
            collisions: Vec::new(),
            pinned_lights: BTreeMap::new(),
        }
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn add_actor(&mut self, actor: Actor) {
        self.actors.push(actor);
    }

    pub fn actor(&self, name: &str) -> Result<&Actor, SimError> {
        self.actors
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| SimError::UnknownActor(name.to_string()))
    }

    pub fn actor_mut(&mut self, name: &str) -> Result<&mut Actor, SimError> {
        self.actors
            .iter_mut()
            .find(|a| a.name == name)
            .ok_or_else(|| SimError::UnknownActor(name.to_string()))
    }

    /// Enables noisy GNSS for an actor: every subsequent reading is truth
    /// plus zero-mean Gaussian noise per axis at the given sigma.
    pub fn add_gnss_noise(&mut self, actor_name: &str, sigma: f64) -> Result<(), SimError> {
        let actor = self.actor_mut(actor_name)?;
        actor.gnss.enabled = true;
        actor.gnss.sigma = sigma;
        Ok(())
    }

    /// Forces a traffic light to a constant state.
    pub fn pin_light(&mut self, light_id: &str, state: LightState) {
        self.pinned_lights.insert(light_id.to_string(), state);
    }

    fn light_states(&self) -> BTreeMap<String, LightState> {
        let t = self.time();
        self.map
            .traffic_lights
            .iter()
            .map(|light| {
                let state = self
                    .pinned_lights
                    .get(&light.id)
                    .copied()
                    .unwrap_or_else(|| light.state_at(t));
                (light.id.clone(), state)
            })
            .collect()
    }

    /// Advances every actor one tick. Pure in (world state, seed): the same
    /// world stepped with the same seed produces the same world.
    pub fn step(&mut self, seed: u64) {
        let t = self.time();
        let dt = self.dt;
        let control = self.control;
        let lights = self.light_states();

        for idx in 0..self.actors.len() {
            let actor = &mut self.actors[idx];
            enum Mode {
                Hold,
                HardBrake,
                Track(f64),
            }
            let brake_distance = actor.speed * actor.speed / (2.0 * actor.b_max);
            let mode = if actor.stop_latched {
                Mode::Hold
            } else {
                match &actor.primitive {
                Primitive::Stationary => Mode::Hold,
                Primitive::DrivingForward { target_speed }
                | Primitive::ChangeLanes { target_speed } => {
                    if actor.remaining_route_distance() <= brake_distance.max(0.2) {
                        Mode::HardBrake
                    } else {
                        Mode::Track(*target_speed)
                    }
                }
                Primitive::StopAbruptly {
                    target_speed,
                    stop_at_s,
                } => {
                    let triggered = match stop_at_s {
                        Some(ts) => t >= *ts,
                        None => actor.remaining_route_distance() <= brake_distance.max(0.2),
                    };
                    if triggered {
                        Mode::HardBrake
                    } else {
                        Mode::Track(*target_speed)
                    }
                }
                Primitive::DelayedStart {
                    target_speed,
                    delay_s,
                } => {
                    if t < *delay_s {
                        Mode::Hold
                    } else if actor.remaining_route_distance() <= brake_distance.max(0.2) {
                        Mode::HardBrake
                    } else {
                        Mode::Track(*target_speed)
                    }
                }
                }
            };

            let (accel_cmd, steer_cmd) = match mode {
                Mode::Hold => {
                    actor.speed = 0.0;
                    (0.0, 0.0)
                }
                Mode::HardBrake => {
                    if actor.speed <= 0.0 {
                        actor.stop_latched = true;
                    }
                    if actor.speed > 0.0 {
                        let cmd = pid_step(
                            &control,
                            &mut actor.pid,
                            &actor.pose,
                            actor.speed,
                            0.0,
                            &actor.route,
                            actor.a_max,
                            actor.b_max,
                            dt,
                        );
                        (-actor.b_max, cmd.steer)
                    } else {
                        (0.0, 0.0)
                    }
                }
                Mode::Track(target) => {
                    let cmd = pid_step(
                        &control,
                        &mut actor.pid,
                        &actor.pose,
                        actor.speed,
                        target,
                        &actor.route,
                        actor.a_max,
                        actor.b_max,
                        dt,
                    );
                    (cmd.accel, cmd.steer)
                }
            };

            actor.last_accel_cmd = accel_cmd;

            // Kinematic bicycle integration.
            if !matches!(actor.primitive, Primitive::Stationary) {
                actor.pose.x += actor.speed * actor.pose.heading.cos() * dt;
                actor.pose.y += actor.speed * actor.pose.heading.sin() * dt;
                if actor.wheelbase > 0.0 && actor.speed > 1e-9 {
                    actor.pose.heading += actor.speed / actor.wheelbase * steer_cmd.tan() * dt;
                    actor.pose.heading = super::control::wrap_angle(actor.pose.heading);
                }
                actor.speed = (actor.speed + accel_cmd * dt).max(0.0);
            }

            // Derived brake light, unless a counterfactual pinned it.
            if is_motor_vehicle(&actor.asset_id) && !actor.pinned_properties.contains("brake light")
            {
                let lit = accel_cmd < -BRAKE_LIGHT_DECEL;
                actor
                    .properties
                    .insert("brake light".into(), if lit { "on" } else { "off" }.into());
            }

            // Mirror a linked traffic light into the actor's properties.
            if let Some(light_id) = actor.linked_light.clone() {
                if !actor.pinned_properties.contains("traffic light") {
                    if let Some(state) = lights.get(&light_id) {
                        actor
                            .properties
                            .insert("traffic light".into(), state.as_str().into());
                    }
                }
            }

            // GNSS reading: truth plus per-axis Gaussian noise, seeded by
            // (seed, tick, actor index) so replays are exact.
            if actor.gnss.enabled {
                let reading = if actor.gnss.sigma <= 0.0 {
                    [actor.pose.x, actor.pose.y]
                } else {
                    let mut rng = StdRng::seed_from_u64(mix_seed(seed, self.tick, idx as u64));
                    let normal = Normal::new(0.0, actor.gnss.sigma).expect("sigma >= 0");
                    [
                        actor.pose.x + normal.sample(&mut rng),
                        actor.pose.y + normal.sample(&mut rng),
                    ]
                };
                actor.gnss.last_reading = Some(reading);
            }

            // Dwell counters for the stopped/steady predicates.
            if actor.speed <= 0.1 {
                actor.stopped_ticks = actor.stopped_ticks.saturating_add(1);
            } else {
                actor.stopped_ticks = 0;
            }
            let reference = actor.steady_reference;
            if reference > 0.0 && (actor.speed - reference).abs() <= 0.1 * reference {
                actor.steady_ticks = actor.steady_ticks.saturating_add(1);
            } else {
                actor.steady_ticks = 0;
            }
        }

        // Collisions are recorded events, not errors.
        for i in 0..self.actors.len() {
            for j in (i + 1)..self.actors.len() {
                if obb_overlap(&self.actors[i], &self.actors[j]) {
                    self.collisions.push(CollisionEvent {
                        tick: self.tick,
                        a: self.actors[i].name.clone(),
                        b: self.actors[j].name.clone(),
                    });
                }
            }
        }

        let snapshot = TickSnapshot {
            tick: self.tick,
            actors: self
                .actors
                .iter()
                .map(|a| ActorSnapshot {
                    name: a.name.clone(),
                    x: a.pose.x,
                    y: a.pose.y,
                    heading: a.pose.heading,
                    speed: a.speed,
                    accel_cmd: a.last_accel_cmd,
                    properties: a.properties.clone(),
                    gnss: a.gnss.last_reading,
                })
                .collect(),
            lights: lights
                .iter()
                .map(|(k, v)| (k.clone(), v.as_str().to_string()))
                .collect(),
        };
        self.trace.push(snapshot);
        self.tick += 1;
    }
}

pub fn is_motor_vehicle(asset_id: &str) -> bool {
    !matches!(
        asset_id,
        "pedestrian" | "bicycle" | "debris" | "box" | "intersection"
    )
}

fn mix_seed(seed: u64, tick: u64, idx: u64) -> u64 {
    // splitmix64-style finalizer over the three inputs.
    let mut z = seed
        .wrapping_add(tick.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(idx.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim2d::actor::Pose;
    use crate::sim2d::map::Lane;

    fn straight_map() -> RoadMap {
        RoadMap::new(
            "m",
            vec![Lane {
                id: "l0".into(),
                centerline: vec![[-60.0, 0.0], [400.0, 0.0]],
                width: 4.0,
                left: None,
                right: None,
                successors: vec![],
            }],
            vec![],
            vec![],
            vec![],
        )
        .unwrap()
    }

    fn driving_actor(name: &str, x: f64, speed: f64) -> Actor {
        let route: Vec<[f64; 2]> = (0..200).map(|i| [x + 2.0 * i as f64, 0.0]).collect();
        Actor::new(
            name,
            "sedan",
            Pose {
                x,
                y: 0.0,
                heading: 0.0,
            },
            Primitive::DrivingForward {
                target_speed: speed,
            },
            route,
        )
    }

    #[test]
    fn stationary_actor_holds_pose() {
        let mut world = SimWorld::new(straight_map());
        world.add_actor(Actor::new(
            "rock",
            "debris",
            Pose {
                x: 5.0,
                y: 0.0,
                heading: 0.0,
            },
            Primitive::Stationary,
            vec![],
        ));
        for _ in 0..50 {
            world.step(7);
        }
        let a = world.actor("rock").unwrap();
        assert_eq!((a.pose.x, a.pose.y), (5.0, 0.0));
        assert_eq!(world.trace.len(), 50);
    }

    #[test]
    fn steady_driving_advances_half_meter_per_tick() {
        let mut world = SimWorld::new(straight_map());
        world.add_actor(driving_actor("car", 0.0, 10.0));
        // settle
        for _ in 0..20 {
            world.step(1);
        }
        let before = world.actor("car").unwrap().pose.x;
        world.step(1);
        let after = world.actor("car").unwrap().pose.x;
        assert!(((after - before) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn same_seed_same_state_is_deterministic() {
        let build = || {
            let mut world = SimWorld::new(straight_map());
            let mut car = driving_actor("car", 0.0, 8.0);
            car.gnss.enabled = true;
            car.gnss.sigma = 2.0;
            world.add_actor(car);
            world
        };
        let mut a = build();
        let mut b = build();
        for _ in 0..30 {
            a.step(42);
            b.step(42);
        }
        assert_eq!(a.trace, b.trace);
        let gnss_a = a.actor("car").unwrap().gnss.last_reading;
        let gnss_b = b.actor("car").unwrap().gnss.last_reading;
        assert_eq!(gnss_a, gnss_b);
    }

    #[test]
    fn sigma_zero_reads_truth_exactly() {
        let mut world = SimWorld::new(straight_map());
        world.add_actor(driving_actor("car", 0.0, 8.0));
        world.add_gnss_noise("car", 0.0).unwrap();
        for _ in 0..10 {
            world.step(3);
        }
        let a = world.actor("car").unwrap();
        let reading = a.gnss.last_reading.unwrap();
        assert_eq!(reading, [a.pose.x, a.pose.y]);
    }

    #[test]
    fn unknown_actor_gnss_is_an_error() {
        let mut world = SimWorld::new(straight_map());
        assert!(matches!(
            world.add_gnss_noise("ghost", 1.0),
            Err(SimError::UnknownActor(_))
        ));
    }

    #[test]
    fn speed_change_bounded_by_accel_limits() {
        let mut world = SimWorld::new(straight_map());
        let mut car = driving_actor("car", 0.0, 8.0);
        car.speed = 0.0; // force a large speed error
        world.add_actor(car);
        let mut prev = 0.0;
        for _ in 0..100 {
            world.step(9);
            let a = world.actor("car").unwrap();
            let dv = (a.speed - prev).abs();
            assert!(dv <= a.a_max.max(a.b_max) * world.dt + 1e-9);
            prev = a.speed;
        }
    }

    #[test]
    fn brake_light_derives_from_commanded_decel_unless_pinned() {
        let mut world = SimWorld::new(straight_map());
        let mut stopper = driving_actor("s", 0.0, 8.0);
        stopper.primitive = Primitive::StopAbruptly {
            target_speed: 8.0,
            stop_at_s: Some(0.5),
        };
        let mut pinned = driving_actor("p", 20.0, 8.0);
        pinned.primitive = Primitive::StopAbruptly {
            target_speed: 8.0,
            stop_at_s: Some(0.5),
        };
        pinned.pin_property("brake light", "off");
        world.add_actor(stopper);
        world.add_actor(pinned);
        for _ in 0..30 {
            world.step(5);
        }
        // Both braked in the same window; only the unpinned one lit up.
        let lit = world
            .trace
            .iter()
            .any(|t| t.actors[0].accel_cmd < -0.5 && t.actors[0].properties["brake light"] == "on");
        let pinned_stays_off = world
            .trace
            .iter()
            .all(|t| t.actors[1].properties["brake light"] == "off");
        let pinned_braked = world.trace.iter().any(|t| t.actors[1].accel_cmd < -0.5);
        assert!(lit && pinned_stays_off && pinned_braked);
    }
}
