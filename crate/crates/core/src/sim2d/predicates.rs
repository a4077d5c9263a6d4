//! Geometric and kinematic definitions of the predicate library.
//!
//! Every threshold lives in one config block. None of these values are
//! claims from elsewhere; they are documented defaults pinned by tests.

use crate::compiler::predicate::{PredicateCall, PredicateId};

use super::map::DEFAULT_LANE_WIDTH;
use super::world::SimWorld;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredicateThresholds {
    /// behind_vehicle: |longitudinal gap| ceiling (m).
    pub behind_max_gap: f64,
    /// right_in_front: longitudinal gap ceiling (m), gap must be > 0.
    pub front_max_gap: f64,
    /// behind/front: |lateral| ceiling in lane widths.
    pub lateral_lane_widths: f64,
    /// are_close_by: Euclidean distance ceiling (m), closed bound.
    pub close_by: f64,
    /// is_currently_moving: speed floor (m/s), strict.
    pub moving_speed: f64,
    /// is_currently_stopped: speed ceiling (m/s) ...
    pub stopped_speed: f64,
    /// ... held for at least this many consecutive ticks.
    pub stopped_dwell: u32,
    /// is_braking: commanded deceleration floor (m/s^2), strict.
    pub braking_decel: f64,
    /// is_ego_driving_steady: relative speed tolerance ...
    pub steady_tolerance: f64,
    /// ... held for at least this many consecutive ticks.
    pub steady_dwell: u32,
}

impl Default for PredicateThresholds {
    fn default() -> Self {
        PredicateThresholds {
            behind_max_gap: 50.0,
            front_max_gap: 15.0,
            lateral_lane_widths: 2.0,
            close_by: 20.0,
            moving_speed: 0.5,
            stopped_speed: 0.1,
            stopped_dwell: 5,
            braking_decel: 0.5,
            steady_tolerance: 0.1,
            steady_dwell: 10,
        }
    }
}

/// Longitudinal/lateral offset of `a` in `b`'s body frame.
fn relative_gap(world: &SimWorld, a: &str, b: &str) -> Result<(f64, f64, f64), SimError> {
    let a = world.actor(a)?;
    let b = world.actor(b)?;
    let dx = a.pose.x - b.pose.x;
    let dy = a.pose.y - b.pose.y;
    let (c, s) = (b.pose.heading.cos(), b.pose.heading.sin());
    let gap = dx * c + dy * s;
    let lateral = -dx * s + dy * c;
    let lane_width = world
        .map
        .nearest_lane(b.pose.x, b.pose.y)
        .map(|(lane, _, _)| lane.width)
        .unwrap_or(DEFAULT_LANE_WIDTH);
    Ok((gap, lateral, lane_width))
}

/// Evaluates one predicate call against the current world state.
pub fn eval_predicate(
    world: &SimWorld,
    call: &PredicateCall,
    th: &PredicateThresholds,
) -> Result<bool, SimError> {
    let arg = |i: usize| -> &str { call.args[i].as_str() };
    match call.pred {
        PredicateId::BehindVehicle => {
            let (gap, lateral, lane_width) = relative_gap(world, arg(0), arg(1))?;
            Ok(gap < 0.0
                && gap.abs() <= th.behind_max_gap
                && lateral.abs() <= th.lateral_lane_widths * lane_width)
        }
        PredicateId::RightInFront => {
            let (gap, lateral, lane_width) = relative_gap(world, arg(0), arg(1))?;
            Ok(gap > 0.0
                && gap <= th.front_max_gap
                && lateral.abs() <= th.lateral_lane_widths * lane_width)
        }
        PredicateId::AreCloseBy => {
            let a = world.actor(arg(0))?;
            let b = world.actor(arg(1))?;
            let d = ((a.pose.x - b.pose.x).powi(2) + (a.pose.y - b.pose.y).powi(2)).sqrt();
            Ok(d <= th.close_by)
        }
        PredicateId::IsCurrentlyMoving => Ok(world.actor(arg(0))?.speed > th.moving_speed),
        PredicateId::IsCurrentlyStopped => {
            Ok(world.actor(arg(0))?.stopped_ticks >= th.stopped_dwell)
        }
        PredicateId::IsBraking => Ok(world.actor(arg(0))?.last_accel_cmd < -th.braking_decel),
        PredicateId::IsEgoDrivingSteady => Ok(world.actor(arg(0))?.steady_ticks >= th.steady_dwell),
        PredicateId::InLane => {
            let actor = world.actor(arg(0))?;
            Ok(world
                .map
                .nearest_lane(actor.pose.x, actor.pose.y)
                .is_some_and(|(lane, _, _)| lane.id == arg(1)))
        }
        PredicateId::AtIntersection => {
            let actor = world.actor(arg(0))?;
            Ok(world.map.in_any_intersection(actor.pose.x, actor.pose.y))
        }
        PredicateId::PropertyIs => {
            let actor = world.actor(arg(0))?;
            Ok(actor.properties.get(arg(1)).map(String::as_str) == Some(arg(2)))
        }
        PredicateId::GnssErrorExceeds => {
            let actor = world.actor(arg(0))?;
            let threshold: f64 = arg(1)
                .parse()
                .map_err(|_| SimError::Predicate(format!("non-numeric threshold '{}'", arg(1))))?;
            Ok(match actor.gnss.last_reading {
                Some([rx, ry]) => {
                    let err =
                        ((rx - actor.pose.x).powi(2) + (ry - actor.pose.y).powi(2)).sqrt();
                    err > threshold
                }
                None => false,
            })
        }
    }
}
