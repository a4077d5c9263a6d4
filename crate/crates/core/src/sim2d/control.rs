//! Longitudinal and lateral controllers for waypoint tracking.

use super::actor::Pose;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub last_error: Option<f64>,
}

impl PidState {
    pub fn update(&mut self, gains: PidGains, error: f64, dt: f64) -> f64 {
        self.integral += error * dt;
        let derivative = match self.last_error {
            Some(prev) => (error - prev) / dt,
            None => 0.0,
        };
        self.last_error = Some(error);
        gains.kp * error + gains.ki * self.integral + gains.kd * derivative
    }
}

/// Controller tuning shared by every actor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub longitudinal: PidGains,
    pub heading_gain: f64,
    pub cross_track_gain: f64,
    pub lookahead: f64,
    pub max_steer: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            longitudinal: PidGains {
                kp: 2.0,
                ki: 0.0,
                kd: 0.0,
            },
            heading_gain: 2.0,
            cross_track_gain: 0.08,
            lookahead: 8.0,
            max_steer: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commands {
    pub accel: f64,
    pub steer: f64,
}

/// One controller step toward the target speed and route.
///
/// Longitudinal: PID on speed error, clipped to the actor's accel limits.
/// Lateral: P on bearing-to-lookahead-point plus cross-track error.
#[allow(clippy::too_many_arguments)]
pub fn pid_step(
    config: &ControlConfig,
    pid: &mut PidState,
    pose: &Pose,
    speed: f64,
    target_speed: f64,
    waypoints: &[[f64; 2]],
    a_max: f64,
    b_max: f64,
    dt: f64,
) -> Commands {
    let accel = pid
        .update(config.longitudinal, target_speed - speed, dt)
        .clamp(-b_max, a_max);

    if waypoints.len() < 2 {
        return Commands { accel, steer: 0.0 };
    }

    let (nearest_idx, cross_track) = nearest_on_path(waypoints, pose.x, pose.y);
    let target = lookahead_point(waypoints, nearest_idx, config.lookahead);
    let bearing = (target[1] - pose.y).atan2(target[0] - pose.x);
    let heading_err = wrap_angle(bearing - pose.heading);
    let steer = (config.heading_gain * heading_err + config.cross_track_gain * cross_track)
        .clamp(-config.max_steer, config.max_steer);
    Commands { accel, steer }
}

/// Index of the nearest waypoint and the signed cross-track error
/// (positive when the path lies to the left of the actor).
pub fn nearest_on_path(waypoints: &[[f64; 2]], x: f64, y: f64) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, wp) in waypoints.iter().enumerate() {
        let d2 = (wp[0] - x).powi(2) + (wp[1] - y).powi(2);
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    let idx = best.0;
    let (a, b) = if idx + 1 < waypoints.len() {
        (waypoints[idx], waypoints[idx + 1])
    } else if idx > 0 {
        (waypoints[idx - 1], waypoints[idx])
    } else {
        return (idx, 0.0);
    };
    let seg = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if seg <= f64::EPSILON {
        return (idx, 0.0);
    }
    let ux = (b[0] - a[0]) / seg;
    let uy = (b[1] - a[1]) / seg;
    // Positive cross-track: path is left of the actor -> steer left.
    let lat = -((x - a[0]) * -uy + (y - a[1]) * ux);
    (idx, lat)
}

fn lookahead_point(waypoints: &[[f64; 2]], from: usize, distance: f64) -> [f64; 2] {
    let mut remaining = distance;
    let mut i = from;
    while i + 1 < waypoints.len() {
        let seg = ((waypoints[i + 1][0] - waypoints[i][0]).powi(2)
            + (waypoints[i + 1][1] - waypoints[i][1]).powi(2))
        .sqrt();
        if remaining <= seg {
            let t = if seg <= f64::EPSILON { 0.0 } else { remaining / seg };
            return [
                waypoints[i][0] + t * (waypoints[i + 1][0] - waypoints[i][0]),
                waypoints[i][1] + t * (waypoints[i + 1][1] - waypoints[i][1]),
            ];
        }
        remaining -= seg;
        i += 1;
    }
    *waypoints.last().expect("non-empty path")
}

pub fn wrap_angle(mut a: f64) -> f64 {
    while a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    while a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_path() -> Vec<[f64; 2]> {
        (0..200).map(|i| [i as f64, 0.0]).collect()
    }

    #[test]
    fn zero_error_gives_zero_commands() {
        let config = ControlConfig::default();
        let mut pid = PidState::default();
        let pose = Pose {
            x: 10.0,
            y: 0.0,
            heading: 0.0,
        };
        let cmd = pid_step(
            &config,
            &mut pid,
            &pose,
            8.0,
            8.0,
            &straight_path(),
            3.0,
            6.0,
            0.05,
        );
        assert!(cmd.accel.abs() < 1e-6);
        assert!(cmd.steer.abs() < 1e-6);
    }

    #[test]
    fn accelerates_when_below_target() {
        let config = ControlConfig::default();
        let mut pid = PidState::default();
        let pose = Pose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        };
        let cmd = pid_step(
            &config,
            &mut pid,
            &pose,
            0.0,
            10.0,
            &straight_path(),
            3.0,
            6.0,
            0.05,
        );
        assert!(cmd.accel > 0.0);
    }

    #[test]
    fn steer_corrects_toward_centerline() {
        let config = ControlConfig::default();
        let mut pid = PidState::default();
        // One meter left of a path along +x: must steer right (negative).
        let pose = Pose {
            x: 10.0,
            y: 1.0,
            heading: 0.0,
        };
        let cmd = pid_step(
            &config,
            &mut pid,
            &pose,
            8.0,
            8.0,
            &straight_path(),
            3.0,
            6.0,
            0.05,
        );
        assert!(cmd.steer < 0.0);
    }
}
