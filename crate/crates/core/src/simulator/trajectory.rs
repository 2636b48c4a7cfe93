//! Ground-truth route generator.
//!
//! A route is a polyline of waypoints whose corners are rounded with circular
//! arcs, so the path is a chain of constant-curvature pieces with a continuous
//! heading. The robot drives it with a trapezoidal speed profile (accelerate,
//! cruise, brake to a stop at the last waypoint).

use thiserror::Error;

use crate::geometry::{normalize_angle, Point2, Pose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("time {t} s is outside the trajectory [0, {duration}] s")]
    OutOfRange { t: f64, duration: f64 },
    #[error("trajectory needs at least two distinct waypoints")]
    TooFewWaypoints,
    #[error("waypoints {0} and {1} coincide")]
    RepeatedWaypoint(usize, usize),
    #[error("segment {0} is too short for the requested turn radius")]
    SegmentTooShort(usize),
    #[error("speed profile values must be positive")]
    BadSpeed,
}

/// Odometry noise, one sigma per channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdometryNoise {
    pub sigma_v: f64,
    pub sigma_yaw_rate: f64,
}

impl Default for OdometryNoise {
    fn default() -> Self {
        Self {
            sigma_v: 0.05,
            sigma_yaw_rate: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySpec {
    pub waypoints: Vec<Point2>,
    pub cruise_speed: f64,
    pub acceleration: f64,
    pub turn_radius: f64,
    pub odom_rate: f64,
    pub odom_noise: OdometryNoise,
}

/// Default route: laps of the rectangular loop through the two main aisles.
pub const DEFAULT_LOOP: [Point2; 4] = [
    Point2::new(5.0, 18.0),
    Point2::new(85.0, 18.0),
    Point2::new(85.0, 42.0),
    Point2::new(5.0, 42.0),
];
pub const DEFAULT_LAPS: usize = 5;

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            waypoints: repeat_loop(&DEFAULT_LOOP, DEFAULT_LAPS),
            cruise_speed: 1.5,
            acceleration: 0.5,
            turn_radius: 3.0,
            odom_rate: 100.0,
            odom_noise: OdometryNoise::default(),
        }
    }
}

/// Closes `points` into a loop and repeats it `laps` times, ending back at the start.
pub fn repeat_loop(points: &[Point2], laps: usize) -> Vec<Point2> {
    let mut out = Vec::with_capacity(points.len() * laps + 1);
    for _ in 0..laps {
        out.extend_from_slice(points);
    }
    if let Some(first) = points.first() {
        out.push(*first);
    }
    out
}

/// One constant-curvature stretch of path.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    start: Pose,
    /// Arc length offset of `start` along the whole path.
    s0: f64,
    length: f64,
    curvature: f64,
}

impl Piece {
    fn pose_at(&self, ds: f64) -> Pose {
        let p = self.start;
        if self.curvature == 0.0 {
            let (s, c) = p.psi.sin_cos();
            return Pose::new(p.e + ds * c, p.n + ds * s, p.psi);
        }
        let k = self.curvature;
        let psi = p.psi + k * ds;
        Pose::new(
            p.e + (psi.sin() - p.psi.sin()) / k,
            p.n - (psi.cos() - p.psi.cos()) / k,
            psi,
        )
    }
}

/// Robot speed and yaw rate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Twist {
    pub v: f64,
    pub yaw_rate: f64,
}

/// A route prepared for time queries.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pieces: Vec<Piece>,
    length: f64,
    cruise: f64,
    accel: f64,
    /// Time spent accelerating (and braking).
    ramp_time: f64,
    peak_speed: f64,
    duration: f64,
}

impl Trajectory {
    pub fn new(spec: &TrajectorySpec) -> Result<Self, TrajectoryError> {
        if !(spec.cruise_speed > 0.0 && spec.acceleration > 0.0 && spec.turn_radius >= 0.0) {
            return Err(TrajectoryError::BadSpeed);
        }
        let w = &spec.waypoints;
        if w.len() < 2 {
            return Err(TrajectoryError::TooFewWaypoints);
        }
        for i in 1..w.len() {
            if w[i].distance(&w[i - 1]) < 1e-9 {
                return Err(TrajectoryError::RepeatedWaypoint(i - 1, i));
            }
        }

        let heading = |a: &Point2, b: &Point2| (b.y - a.y).atan2(b.x - a.x);
        // turn angle and tangent trim at each interior waypoint
        let mut turn = vec![0.0; w.len()];
        let mut trim = vec![0.0; w.len()];
        for i in 1..w.len() - 1 {
            let a = normalize_angle(heading(&w[i], &w[i + 1]) - heading(&w[i - 1], &w[i]));
            turn[i] = a;
            trim[i] = spec.turn_radius * (a.abs() / 2.0).tan();
        }

        let mut pieces = Vec::new();
        let mut s0 = 0.0;
        for i in 0..w.len() - 1 {
            let psi = heading(&w[i], &w[i + 1]);
            let seg = w[i].distance(&w[i + 1]);
            let straight = seg - trim[i] - trim[i + 1];
            if straight < -1e-9 {
                return Err(TrajectoryError::SegmentTooShort(i));
            }
            let (s, c) = psi.sin_cos();
            let start = Pose::new(w[i].x + trim[i] * c, w[i].y + trim[i] * s, psi);
            if straight > 0.0 {
                pieces.push(Piece {
                    start,
                    s0,
                    length: straight,
                    curvature: 0.0,
                });
                s0 += straight;
            }
            let a = turn[i + 1];
            if a != 0.0 && spec.turn_radius > 0.0 {
                let entry = Pose::new(
                    w[i + 1].x - trim[i + 1] * c,
                    w[i + 1].y - trim[i + 1] * s,
                    psi,
                );
                let length = spec.turn_radius * a.abs();
                pieces.push(Piece {
                    start: entry,
                    s0,
                    length,
                    curvature: a.signum() / spec.turn_radius,
                });
                s0 += length;
            }
        }

        let length = s0;
        let (cruise, accel) = (spec.cruise_speed, spec.acceleration);
        let (ramp_time, peak_speed, duration) = if cruise * cruise / accel <= length {
            let ramp = cruise / accel;
            let cruise_dist = length - cruise * cruise / accel;
            (ramp, cruise, 2.0 * ramp + cruise_dist / cruise)
        } else {
            // never reaches cruise speed: triangular profile
            let ramp = (length / accel).sqrt();
            (ramp, accel * ramp, 2.0 * ramp)
        };

        Ok(Self {
            pieces,
            length,
            cruise,
            accel,
            ramp_time,
            peak_speed,
            duration,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Distance travelled and speed at time `t` (already range-checked).
    fn progress(&self, t: f64) -> (f64, f64) {
        let (a, ramp, peak) = (self.accel, self.ramp_time, self.peak_speed);
        let cruise_end = self.duration - ramp;
        if t <= ramp {
            (0.5 * a * t * t, a * t)
        } else if t <= cruise_end {
            (0.5 * a * ramp * ramp + peak * (t - ramp), peak)
        } else {
            let left = (self.duration - t).max(0.0);
            (self.length - 0.5 * a * left * left, a * left)
        }
    }

    fn piece_at(&self, s: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.s0 <= s);
        &self.pieces[i.saturating_sub(1)]
    }

    /// True pose and its exact time derivative (speed, yaw rate) at `t`.
    pub fn state_at(&self, t: f64) -> Result<(Pose, Twist), TrajectoryError> {
        if !(t >= -1e-12 && t <= self.duration + 1e-9) {
            return Err(TrajectoryError::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        let t = t.clamp(0.0, self.duration);
        let (s, v) = self.progress(t);
        let s = s.clamp(0.0, self.length);
        let piece = self.piece_at(s);
        let pose = piece.pose_at(s - piece.s0);
        Ok((
            pose,
            Twist {
                v,
                yaw_rate: piece.curvature * v,
            },
        ))
    }

    /// Time at which arc length `s` is reached.
    pub fn time_at_distance(&self, s: f64) -> f64 {
        let (a, ramp, peak) = (self.accel, self.ramp_time, self.peak_speed);
        let ramp_dist = 0.5 * a * ramp * ramp;
        let s = s.clamp(0.0, self.length);
        if s <= ramp_dist {
            (2.0 * s / a).sqrt()
        } else if s <= self.length - ramp_dist {
            ramp + (s - ramp_dist) / peak
        } else {
            self.duration - (2.0 * (self.length - s) / a).sqrt()
        }
    }

    /// Instants where the twist is not smooth: speed-profile phase changes and
    /// the starts of path pieces. Sorted, within [0, duration].
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .pieces
            .iter()
            .map(|p| self.time_at_distance(p.s0))
            .chain([0.0, self.ramp_time, self.duration - self.ramp_time, self.duration])
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    pub fn cruise_speed(&self) -> f64 {
        self.cruise
    }
}

/// Pose and twist at time `t` along the route described by `spec`.
pub fn step_trajectory(spec: &TrajectorySpec, t: f64) -> Result<(Pose, Twist), TrajectoryError> {
    Trajectory::new(spec)?.state_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn straight(len: f64) -> TrajectorySpec {
        TrajectorySpec {
            waypoints: vec![Point2::new(0.0, 0.0), Point2::new(len, 0.0)],
            cruise_speed: 1.0,
            acceleration: 1e9,
            ..Default::default()
        }
    }

    #[test]
    fn straight_segment_midpoint() {
        let traj = Trajectory::new(&straight(10.0)).unwrap();
        let (pose, twist) = traj.state_at(5.0).unwrap();
        assert_abs_diff_eq!(pose.e, 5.0, epsilon = 1e-6);
        assert_abs_diff_eq!(pose.n, 0.0);
        assert_abs_diff_eq!(twist.v, 1.0);
        assert_eq!(twist.yaw_rate, 0.0);
        let (start, _) = traj.state_at(0.0).unwrap();
        assert_eq!(start.position(), Point2::new(0.0, 0.0));
        assert_eq!(traj.cruise_speed(), 1.0);
    }

    #[test]
    fn out_of_range_time() {
        let traj = Trajectory::new(&straight(10.0)).unwrap();
        assert!(matches!(traj.state_at(-1.0), Err(TrajectoryError::OutOfRange { .. })));
        assert!(matches!(traj.state_at(traj.duration() + 1.0), Err(TrajectoryError::OutOfRange { .. })));
    }

    #[test]
    fn bad_specs() {
        let mut spec = straight(1.0);
        spec.waypoints = vec![Point2::default()];
        assert_eq!(Trajectory::new(&spec).unwrap_err(), TrajectoryError::TooFewWaypoints);
        spec.waypoints = vec![Point2::default(), Point2::default()];
        assert!(matches!(Trajectory::new(&spec), Err(TrajectoryError::RepeatedWaypoint(0, 1))));
        spec.waypoints = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)];
        spec.turn_radius = 5.0;
        assert!(matches!(Trajectory::new(&spec), Err(TrajectoryError::SegmentTooShort(_))));
    }

    #[test]
    fn default_route_is_long_enough() {
        let traj = Trajectory::new(&TrajectorySpec::default()).unwrap();
        assert!(traj.length() >= 1000.0, "route is {} m", traj.length());
        let (end, twist) = traj.state_at(traj.duration()).unwrap();
        assert_abs_diff_eq!(end.e, DEFAULT_LOOP[0].x, epsilon = 1e-6);
        assert!(twist.v.abs() < 1e-9);
    }

    #[test]
    fn pose_is_continuous() {
        let traj = Trajectory::new(&TrajectorySpec::default()).unwrap();
        let mut prev = traj.state_at(0.0).unwrap().0;
        let dt = 0.01;
        let mut t = dt;
        while t < traj.duration() {
            let cur = traj.state_at(t).unwrap().0;
            assert!(cur.position().distance(&prev.position()) <= 1.5 * dt + 1e-9);
            assert!(normalize_angle(cur.psi - prev.psi).abs() <= 0.5 * dt + 1e-9);
            prev = cur;
            t += dt;
        }
    }

    /// Integrates the reported twist with classical RK4 over each smooth stretch
    /// and compares the result against the reported pose.
    #[test]
    fn twist_integrates_to_pose() {
        let spec = TrajectorySpec {
            waypoints: repeat_loop(&DEFAULT_LOOP[..], 1),
            ..Default::default()
        };
        let traj = Trajectory::new(&spec).unwrap();
        let deriv = |t: f64, psi: f64| {
            let (_, tw) = traj.state_at(t).unwrap();
            (tw.v * psi.cos(), tw.v * psi.sin(), tw.yaw_rate)
        };
        let start = traj.state_at(0.0).unwrap().0;
        let mut state = (start.e, start.n, start.psi);
        for w in traj.breakpoints().windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let n = ((t1 - t0) / 1e-3).ceil().max(1.0) as usize;
            let h = (t1 - t0) / n as f64;
            // sample strictly inside the stretch so a jump at its ends is never seen
            let eps = 1e-12;
            for k in 0..n {
                let t = t0 + k as f64 * h;
                let a = (t + eps).min(t1 - eps);
                let m = t + h / 2.0;
                let b = (t + h - eps).max(t0 + eps);
                let k1 = deriv(a, state.2);
                let k2 = deriv(m, state.2 + h / 2.0 * k1.2);
                let k3 = deriv(m, state.2 + h / 2.0 * k2.2);
                let k4 = deriv(b, state.2 + h * k3.2);
                state.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                state.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                state.2 += h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
            }
        }
        let truth = traj.state_at(traj.duration()).unwrap().0;
        assert!((state.0 - truth.e).abs() < 1e-6, "east {} vs {}", state.0, truth.e);
        assert!((state.1 - truth.n).abs() < 1e-6, "north {} vs {}", state.1, truth.n);
        assert!(normalize_angle(state.2 - truth.psi).abs() < 1e-9);
    }
}
