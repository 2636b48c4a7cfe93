//! Planar geometry shared by every stage of the pipeline.
//!
//! The map frame follows the UTM axis convention (x = easting, y = northing)
//! around an arbitrary local origin. Sensor-frame points have x pointing along
//! the robot heading and y to its left.

use std::f64::consts::{PI, TAU};

/// A point in the plane, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Robot or particle pose: easting, northing and heading measured from the east axis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pose {
    pub e: f64,
    pub n: f64,
    pub psi: f64,
}

impl Pose {
    /// Builds a pose, normalizing the heading into (-pi, pi].
    pub fn new(e: f64, n: f64, psi: f64) -> Self {
        Self {
            e,
            n,
            psi: normalize_angle(psi),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.e, self.n)
    }

    /// Pose of `local` (expressed in this pose's frame) in the parent frame.
    pub fn compose(&self, local: &Pose) -> Pose {
        let p = transform_to_map(self, &local.position());
        Pose::new(p.x, p.y, self.psi + local.psi)
    }

    pub fn inverse(&self) -> Pose {
        let (s, c) = self.psi.sin_cos();
        Pose::new(
            -(c * self.e + s * self.n),
            s * self.e - c * self.n,
            -self.psi,
        )
    }

    /// Pose of `other` expressed in this pose's frame.
    pub fn between(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }
}

/// One odometry / IMU reading: measured speed and yaw rate at a timestamp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdometrySample {
    pub timestamp: f64,
    pub v: f64,
    pub yaw_rate: f64,
}

/// One revolution of a single-line LiDAR.
///
/// Missing returns are stored as `f64::INFINITY` so that beam `i` is always
/// at bearing `start_bearing + i * angular_step`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaserScan {
    pub timestamp: f64,
    pub start_bearing: f64,
    pub angular_step: f64,
    pub ranges: Vec<f64>,
}

impl LaserScan {
    pub fn bearing(&self, index: usize) -> f64 {
        self.start_bearing + index as f64 * self.angular_step
    }
}

/// Converts the valid returns of a scan into sensor-frame points, in scan order.
pub fn scan_to_points(scan: &LaserScan) -> Vec<Point2> {
    scan.ranges
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_finite() && **r > 0.0)
        .map(|(i, &r)| {
            let (s, c) = scan.bearing(i).sin_cos();
            Point2::new(r * c, r * s)
        })
        .collect()
}

/// Maps a sensor-frame point into the map frame: `R(psi) * p + [E, N]`.
#[inline]
pub fn transform_to_map(pose: &Pose, p: &Point2) -> Point2 {
    let (s, c) = pose.psi.sin_cos();
    Point2::new(c * p.x - s * p.y + pose.e, s * p.x + c * p.y + pose.n)
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    // rem_euclid can land exactly on -pi after the subtraction for inputs just above pi
    if r <= -PI {
        r += TAU;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn scan(start: f64, step: f64, ranges: Vec<f64>) -> LaserScan {
        LaserScan {
            timestamp: 0.0,
            start_bearing: start,
            angular_step: step,
            ranges,
        }
    }

    #[test]
    fn scan_axis_cases() {
        let pts = scan_to_points(&scan(0.0, FRAC_PI_2, vec![1.0, 2.0]));
        assert_eq!(pts.len(), 2);
        assert_abs_diff_eq!(pts[0].x, 1.0);
        assert_abs_diff_eq!(pts[0].y, 0.0);
        assert_abs_diff_eq!(pts[1].x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pts[1].y, 2.0);
    }

    #[test]
    fn scan_drops_invalid_returns() {
        let pts = scan_to_points(&scan(0.0, 0.1, vec![f64::INFINITY; 5]));
        assert!(pts.is_empty());
        let pts = scan_to_points(&scan(0.0, 0.1, vec![f64::INFINITY, 3.0, f64::INFINITY]));
        assert_eq!(pts.len(), 1);
        assert_abs_diff_eq!(pts[0].norm(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn transform_examples() {
        let p = transform_to_map(&Pose::new(0.0, 0.0, 0.0), &Point2::new(1.0, 2.0));
        assert_eq!(p, Point2::new(1.0, 2.0));

        let p = transform_to_map(&Pose::new(10.0, 5.0, FRAC_PI_2), &Point2::new(1.0, 0.0));
        assert_abs_diff_eq!(p.x, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 6.0, epsilon = 1e-12);

        let pose = Pose::new(-3.5, 7.25, 2.0);
        assert_eq!(transform_to_map(&pose, &Point2::default()), Point2::new(-3.5, 7.25));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(-1.5 * PI), FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let a = Pose::new(3.0, -2.0, 0.7);
        let id = a.compose(&a.inverse());
        assert_abs_diff_eq!(id.e, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.n, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.psi, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn transform_is_isometry(
            e in -100.0..100.0f64, n in -100.0..100.0f64, psi in -4.0..4.0f64,
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64,
        ) {
            let pose = Pose::new(e, n, psi);
            let (a, b) = (Point2::new(ax, ay), Point2::new(bx, by));
            let d0 = a.distance(&b);
            let d1 = transform_to_map(&pose, &a).distance(&transform_to_map(&pose, &b));
            prop_assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0));
        }

        #[test]
        fn zero_pose_is_identity(x in -1e3..1e3f64, y in -1e3..1e3f64) {
            let p = Point2::new(x, y);
            prop_assert_eq!(transform_to_map(&Pose::default(), &p), p);
        }

        #[test]
        fn normalize_is_idempotent_and_congruent(a in -1e3..1e3f64) {
            let r = normalize_angle(a);
            prop_assert!(r > -PI && r <= PI);
            prop_assert_eq!(normalize_angle(r), r);
            let k = ((a - r) / TAU).round();
            prop_assert!((a - r - k * TAU).abs() < 1e-9);
        }
    }
}
