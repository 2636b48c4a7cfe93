use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, ParamError};
use crate::geometry::{LaserScan, Point2, Pose};

use super::world::{Obstacle, WorldModel};

/// Single-line LiDAR characteristics.
#[derive(Clone, Debug, PartialEq)]
pub struct LidarSpec {
    pub max_range: f64,
    pub fov: f64,
    pub angular_resolution: f64,
    /// One sigma of additive range noise.
    pub range_noise_sigma: f64,
    pub rate: f64,
    /// Reported ranges are rounded to this step; zero disables rounding.
    pub range_resolution: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            max_range: 30.0,
            fov: 270.0_f64.to_radians(),
            angular_resolution: 0.25_f64.to_radians(),
            // +-50 mm accuracy read as a two-sigma bound
            range_noise_sigma: 0.025,
            rate: 5.0,
            range_resolution: 0.001,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure(self.max_range > 0.0, "max_range", "must be positive")?;
        ensure(
            self.fov > 0.0 && self.fov <= std::f64::consts::TAU,
            "fov",
            "must be in (0, 2 pi]",
        )?;
        ensure(self.angular_resolution > 0.0, "angular_resolution", "must be positive")?;
        ensure(
            self.range_noise_sigma >= 0.0,
            "range_noise_sigma",
            "must be non-negative",
        )?;
        ensure(self.rate > 0.0, "rate", "must be positive")?;
        ensure(self.range_resolution >= 0.0, "range_resolution", "must be non-negative")?;
        ensure(
            (self.beam_count() as f64) * self.angular_resolution <= std::f64::consts::TAU + 1e-9,
            "fov",
            "beam count times resolution exceeds a full turn",
        )
    }

    /// Beams spanning the field of view inclusive of both edges, capped at one turn.
    pub fn beam_count(&self) -> usize {
        let steps = (self.fov / self.angular_resolution + 1e-9).floor() as usize;
        let full_turn = (std::f64::consts::TAU / self.angular_resolution - 1e-9).floor() as usize;
        (steps + 1).min(full_turn.max(1))
    }
}

/// Distance along the ray `origin + t * dir` to the first crossing into the
/// rectangle, if the ray starts outside it and hits it.
pub fn ray_rectangle(origin: &Point2, dir: (f64, f64), o: &Obstacle) -> Option<f64> {
    let (s, c) = o.rotation.sin_cos();
    let (rx, ry) = (origin.x - o.center.x, origin.y - o.center.y);
    let local_o = [c * rx + s * ry, -s * rx + c * ry];
    let local_d = [c * dir.0 + s * dir.1, -s * dir.0 + c * dir.1];
    let half = [o.width / 2.0, o.height / 2.0];

    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for k in 0..2 {
        if local_d[k] == 0.0 {
            if local_o[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let t1 = (-half[k] - local_o[k]) / local_d[k];
        let t2 = (half[k] - local_o[k]) / local_d[k];
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        t_enter = t_enter.max(lo);
        t_exit = t_exit.min(hi);
    }
    (t_enter <= t_exit && t_enter > 0.0).then_some(t_enter)
}

/// Casts one scan from `pose` against every scan-visible obstacle.
pub fn raycast_scan<R: Rng + ?Sized>(
    world: &WorldModel,
    pose: &Pose,
    spec: &LidarSpec,
    timestamp: f64,
    rng: &mut R,
) -> LaserScan {
    let origin = pose.position();
    let reach = spec.max_range;
    let candidates: Vec<&Obstacle> = world
        .obstacles
        .iter()
        .filter(|o| o.kind.is_scan_visible())
        .filter(|o| o.center.distance(&origin) - o.bounding_radius() <= reach)
        .collect();
    let noise = Normal::new(0.0, spec.range_noise_sigma).ok();

    let start_bearing = -spec.fov / 2.0;
    let ranges = (0..spec.beam_count())
        .map(|i| {
            let bearing = start_bearing + i as f64 * spec.angular_resolution;
            let (s, c) = (pose.psi + bearing).sin_cos();
            let hit = candidates
                .iter()
                .filter_map(|o| {
                    // cheap reject: perpendicular distance of the center from the ray
                    let (dx, dy) = (o.center.x - origin.x, o.center.y - origin.y);
                    let along = dx * c + dy * s;
                    let across = (-dx * s + dy * c).abs();
                    if across > o.bounding_radius() || along < -o.bounding_radius() {
                        return None;
                    }
                    ray_rectangle(&origin, (c, s), o)
                })
                .fold(f64::INFINITY, f64::min);
            if hit > reach {
                return f64::INFINITY;
            }
            let mut r = hit;
            if spec.range_noise_sigma > 0.0 {
                if let Some(n) = &noise {
                    r += n.sample(rng);
                }
            }
            if spec.range_resolution > 0.0 {
                r = (r / spec.range_resolution).round() * spec.range_resolution;
            }
            r.clamp(f64::MIN_POSITIVE, reach)
        })
        .collect();

    LaserScan {
        timestamp,
        start_bearing,
        angular_step: spec.angular_resolution,
        ranges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::scan_to_points;
    use crate::simulator::world::{default_lot, Bounds, ObstacleKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact() -> LidarSpec {
        LidarSpec {
            range_noise_sigma: 0.0,
            range_resolution: 0.0,
            ..Default::default()
        }
    }

    fn world(obstacles: Vec<Obstacle>) -> WorldModel {
        WorldModel {
            obstacles,
            bounds: Bounds::new(-50.0, -50.0, 50.0, 50.0),
            origin_note: String::new(),
        }
    }

    fn beam_at(spec: &LidarSpec, bearing: f64) -> usize {
        ((bearing + spec.fov / 2.0) / spec.angular_resolution).round() as usize
    }

    #[test]
    fn beam_layout_matches_table_values() {
        let spec = LidarSpec::default();
        assert_eq!(spec.beam_count(), 1081);
        spec.validate().unwrap();
    }

    #[test]
    fn wall_straight_ahead() {
        let w = world(vec![Obstacle::new(Point2::new(5.1, 0.0), 0.2, 10.0, 0.0, ObstacleKind::Wall)]);
        let spec = exact();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scan = raycast_scan(&w, &Pose::default(), &spec, 0.0, &mut rng);
        assert!((scan.ranges[beam_at(&spec, 0.0)] - 5.0).abs() < 1e-9);
        // at bearing phi the same wall is 5 / cos(phi) away
        let i = beam_at(&spec, 30f64.to_radians());
        let phi = scan.bearing(i);
        assert!((scan.ranges[i] - 5.0 / phi.cos()).abs() < 1e-9);
        // looking backwards there is nothing within range
        assert!(scan.ranges[0].is_infinite());
    }

    #[test]
    fn rotated_obstacle_exact_hit() {
        // diamond (square rotated 45 deg) with its vertex pointing at the sensor
        let o = Obstacle::new(Point2::new(10.0, 0.0), 2.0, 2.0, std::f64::consts::FRAC_PI_4, ObstacleKind::Pillar);
        let t = ray_rectangle(&Point2::default(), (1.0, 0.0), &o).unwrap();
        assert!((t - (10.0 - 2f64.sqrt())).abs() < 1e-12);
        assert!(ray_rectangle(&Point2::default(), (-1.0, 0.0), &o).is_none());
    }

    #[test]
    fn occluded_pillar_produces_no_returns() {
        let front = Obstacle::new(Point2::new(5.0, 0.0), 0.8, 0.8, 0.0, ObstacleKind::Pillar);
        // fully inside the shadow of the front pillar
        let back = Obstacle::new(Point2::new(15.0, 0.0), 0.6, 0.6, 0.0, ObstacleKind::Pillar);
        let w = world(vec![front, back]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scan = raycast_scan(&w, &Pose::default(), &exact(), 0.0, &mut rng);
        let pts = scan_to_points(&scan);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.x < 6.0), "a return came from the hidden pillar");
    }

    #[test]
    fn vehicles_are_invisible() {
        let lot = default_lot();
        let spec = exact();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for pose in [Pose::new(5.0, 18.0, 0.0), Pose::new(45.0, 42.0, 2.0), Pose::new(85.0, 30.0, -1.0)] {
            let scan = raycast_scan(&lot, &pose, &spec, 0.0, &mut rng);
            for (i, &r) in scan.ranges.iter().enumerate().filter(|(_, r)| r.is_finite()) {
                let (s, c) = (pose.psi + scan.bearing(i)).sin_cos();
                let hit = Point2::new(pose.e + r * c, pose.n + r * s);
                let on_visible = lot
                    .obstacles
                    .iter()
                    .filter(|o| o.kind.is_scan_visible())
                    .any(|o| ray_rectangle(&pose.position(), (c, s), o).is_some_and(|t| (t - r).abs() < 1e-9));
                assert!(on_visible, "return at {hit:?} not on a visible obstacle");
            }
        }
    }

    #[test]
    fn noise_is_seeded() {
        let lot = default_lot();
        let spec = LidarSpec::default();
        let pose = Pose::new(20.0, 18.0, 0.3);
        let a = raycast_scan(&lot, &pose, &spec, 0.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = raycast_scan(&lot, &pose, &spec, 0.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!(a.ranges.iter().all(|r| r.is_infinite() || (*r > 0.0 && *r <= spec.max_range)));
    }
}
