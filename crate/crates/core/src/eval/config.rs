//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Angles are given in degrees
//! (keys ending in `_deg`), everything else in SI units. Relative paths are
//! resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::filter::FilterParams;
use crate::geometry::Point2;
use crate::lshape::LShapeParams;
use crate::segmentation::SegmentationParams;
use crate::simulator::{
    repeat_loop, InitNoise, LidarSpec, OdometryNoise, SimulationSpec, TrajectorySpec, DEFAULT_LAPS, DEFAULT_LOOP,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetError {
    UnknownKey,
    BadValue(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum WorldSource {
    Default,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapSource {
    FromWorld,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RouteSource {
    /// Laps of the built-in loop.
    Default,
    /// Waypoint file with one `x,y` pair per line.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub world: WorldSource,
    pub map: MapSource,
    pub route: RouteSource,
    pub laps: usize,
    pub cruise_speed: f64,
    pub acceleration: f64,
    pub turn_radius: f64,
    pub odom_rate: f64,
    pub odometry: OdometryNoise,
    pub lidar: LidarSpec,
    pub init: InitNoise,
    pub filter: FilterParams,
    pub segmentation: SegmentationParams,
    pub lshape: LShapeParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrajectorySpec::default();
        Self {
            seed: 42,
            world: WorldSource::Default,
            map: MapSource::FromWorld,
            route: RouteSource::Default,
            laps: DEFAULT_LAPS,
            cruise_speed: t.cruise_speed,
            acceleration: t.acceleration,
            turn_radius: t.turn_radius,
            odom_rate: t.odom_rate,
            odometry: t.odom_noise,
            lidar: LidarSpec::default(),
            init: InitNoise::default(),
            filter: FilterParams::default(),
            segmentation: SegmentationParams::default(),
            lshape: LShapeParams::default(),
        }
    }
}

fn parse_f64(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|e| format!("{e}"))?;
    if x.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(x)
}

fn parse_usize(v: &str) -> Result<usize, String> {
    v.parse().map_err(|e| format!("{e}"))
}

fn deg(v: &str) -> Result<f64, String> {
    parse_f64(v).map(f64::to_radians)
}

/// Parses a waypoint file: one `x,y` pair per line, `#` comments allowed.
pub fn parse_waypoints(text: &str) -> Result<Vec<Point2>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(format!("line {}: expected `x,y`", i + 1));
        };
        let x = parse_f64(x).map_err(|e| format!("line {}: {e}", i + 1))?;
        let y = parse_f64(y).map_err(|e| format!("line {}: {e}", i + 1))?;
        out.push(Point2::new(x, y));
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        let v = value;
        let r: Result<(), String> = match key {
            "seed" => v.parse().map(|s| self.seed = s).map_err(|e| format!("{e}")),
            "world" => {
                self.world = if v == "default" {
                    WorldSource::Default
                } else {
                    WorldSource::File(v.into())
                };
                Ok(())
            }
            "map" => {
                self.map = if v == "from-world" {
                    MapSource::FromWorld
                } else {
                    MapSource::File(v.into())
                };
                Ok(())
            }
            "trajectory" => {
                self.route = if v == "default" {
                    RouteSource::Default
                } else {
                    RouteSource::File(v.into())
                };
                Ok(())
            }
            "trajectory.laps" => parse_usize(v).map(|x| self.laps = x),
            "trajectory.cruise_speed" => parse_f64(v).map(|x| self.cruise_speed = x),
            "trajectory.acceleration" => parse_f64(v).map(|x| self.acceleration = x),
            "trajectory.turn_radius" => parse_f64(v).map(|x| self.turn_radius = x),
            "odometry.rate" => parse_f64(v).map(|x| self.odom_rate = x),
            "odometry.sigma_v" => parse_f64(v).map(|x| self.odometry.sigma_v = x),
            "odometry.sigma_yaw_rate" => parse_f64(v).map(|x| self.odometry.sigma_yaw_rate = x),
            "lidar.max_range" => parse_f64(v).map(|x| self.lidar.max_range = x),
            "lidar.fov_deg" => deg(v).map(|x| self.lidar.fov = x),
            "lidar.resolution_deg" => deg(v).map(|x| self.lidar.angular_resolution = x),
            "lidar.range_noise_sigma" => parse_f64(v).map(|x| self.lidar.range_noise_sigma = x),
            "lidar.rate" => parse_f64(v).map(|x| self.lidar.rate = x),
            "lidar.range_resolution" => parse_f64(v).map(|x| self.lidar.range_resolution = x),
            "init.sigma_pos" => parse_f64(v).map(|x| self.init.sigma_pos = x),
            "init.sigma_heading_deg" => deg(v).map(|x| self.init.sigma_heading = x),
            "filter.n_particles" => parse_usize(v).map(|x| self.filter.n_particles = x),
            "filter.init_particles" => parse_usize(v).map(|x| self.filter.init_particles = x),
            "filter.sigma_init_pos" => parse_f64(v).map(|x| self.filter.sigma_init_pos = x),
            "filter.sigma_init_heading_deg" => deg(v).map(|x| self.filter.sigma_init_heading = x),
            "filter.sigma_lat" => parse_f64(v).map(|x| self.filter.sigma_lat = x),
            "filter.sigma_lon" => parse_f64(v).map(|x| self.filter.sigma_lon = x),
            "filter.gate_distance" => parse_f64(v).map(|x| self.filter.gate_distance = x),
            "filter.sigma_v" => parse_f64(v).map(|x| self.filter.sigma_v = x),
            "filter.sigma_yaw_rate" => parse_f64(v).map(|x| self.filter.sigma_yaw_rate = x),
            "filter.yaw_rate_epsilon" => parse_f64(v).map(|x| self.filter.yaw_rate_epsilon = x),
            "filter.weight_floor" => parse_f64(v).map(|x| self.filter.weight_floor = x),
            "filter.merge_frames" => parse_usize(v).map(|x| self.filter.merge_frames = x),
            "filter.ess_threshold" => parse_f64(v).map(|x| self.filter.ess_threshold = x),
            "filter.margin_factor" => parse_f64(v).map(|x| self.filter.margin_factor = x),
            "filter.margin_floor" => parse_f64(v).map(|x| self.filter.margin_floor = x),
            "segmentation.min_pts" => parse_usize(v).map(|x| self.segmentation.min_pts = x),
            "segmentation.base_radius" => parse_f64(v).map(|x| self.segmentation.base_radius = x),
            "segmentation.radius_scale" => parse_f64(v).map(|x| self.segmentation.radius_scale = x),
            "segmentation.max_radius" => parse_f64(v).map(|x| self.segmentation.max_radius = x),
            "segmentation.min_cluster_size" => parse_usize(v).map(|x| self.segmentation.min_cluster_size = x),
            "lshape.angle_step_deg" => deg(v).map(|x| self.lshape.angle_step = x),
            "lshape.d_min" => parse_f64(v).map(|x| self.lshape.d_min = x),
            "lshape.min_edge" => parse_f64(v).map(|x| self.lshape.min_edge = x),
            "lshape.max_edge" => parse_f64(v).map(|x| self.lshape.max_edge = x),
            _ => return Err(SetError::UnknownKey),
        };
        r.map_err(SetError::BadValue)
    }

    /// Parses config text on top of the defaults; relative paths resolve against `base`.
    pub fn from_text(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            match cfg.set(key, value) {
                Ok(()) => {}
                Err(SetError::UnknownKey) => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: key.to_string(),
                    })
                }
                Err(SetError::BadValue(message)) => {
                    return Err(ConfigError::BadValue {
                        line: line_no,
                        key: key.to_string(),
                        message,
                    })
                }
            }
        }
        if let Some(base) = base {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text, path.parent())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let WorldSource::File(p) = &mut self.world {
            fix(p);
        }
        if let MapSource::File(p) = &mut self.map {
            fix(p);
        }
        if let RouteSource::File(p) = &mut self.route {
            fix(p);
        }
    }

    /// Segmentation parameters with the beam spacing taken from the LiDAR.
    pub fn segmentation_params(&self) -> SegmentationParams {
        SegmentationParams {
            angular_step: self.lidar.angular_resolution,
            ..self.segmentation.clone()
        }
    }

    /// Filter parameters with the landmark preselection range taken from the LiDAR.
    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            landmark_range: self.lidar.max_range,
            ..self.filter.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: crate::error::ParamError| ConfigError::Invalid(e.to_string());
        self.lidar.validate().map_err(inv)?;
        self.filter_params().validate().map_err(inv)?;
        self.segmentation_params().validate().map_err(inv)?;
        self.lshape.validate().map_err(inv)?;
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.laps == 0 {
            return bad("trajectory.laps must be at least 1");
        }
        if !(self.cruise_speed > 0.0 && self.acceleration > 0.0) {
            return bad("trajectory speeds must be positive");
        }
        if !(self.turn_radius >= 0.0) {
            return bad("trajectory.turn_radius must be non-negative");
        }
        if !(self.odom_rate > 0.0) || self.lidar.rate > self.odom_rate {
            return bad("odometry.rate must be positive and at least lidar.rate");
        }
        if !(self.odometry.sigma_v >= 0.0 && self.odometry.sigma_yaw_rate >= 0.0) {
            return bad("odometry noise must be non-negative");
        }
        if !(self.init.sigma_pos >= 0.0 && self.init.sigma_heading >= 0.0) {
            return bad("init noise must be non-negative");
        }
        Ok(())
    }

    /// Route and noise description for the simulator.
    pub fn simulation_spec(&self) -> Result<SimulationSpec, ConfigError> {
        let waypoints = match &self.route {
            RouteSource::Default => repeat_loop(&DEFAULT_LOOP, self.laps),
            RouteSource::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.clone(),
                    source,
                })?;
                parse_waypoints(&text).map_err(|m| ConfigError::Invalid(format!("{}: {m}", p.display())))?
            }
        };
        Ok(SimulationSpec {
            trajectory: TrajectorySpec {
                waypoints,
                cruise_speed: self.cruise_speed,
                acceleration: self.acceleration,
                turn_radius: self.turn_radius,
                odom_rate: self.odom_rate,
                odom_noise: self.odometry,
            },
            lidar: self.lidar.clone(),
            init_noise: self.init,
            seed: self.seed,
        })
    }

    /// Every key with its current value, in the same syntax the parser reads.
    pub fn to_text(&self) -> String {
        let path = |p: &PathBuf| p.display().to_string();
        let world = match &self.world {
            WorldSource::Default => "default".to_string(),
            WorldSource::File(p) => path(p),
        };
        let map = match &self.map {
            MapSource::FromWorld => "from-world".to_string(),
            MapSource::File(p) => path(p),
        };
        let route = match &self.route {
            RouteSource::Default => "default".to_string(),
            RouteSource::File(p) => path(p),
        };
        let f = &self.filter;
        let s = &self.segmentation;
        let l = &self.lshape;
        let entries: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("world", world),
            ("map", map),
            ("trajectory", route),
            ("trajectory.laps", self.laps.to_string()),
            ("trajectory.cruise_speed", self.cruise_speed.to_string()),
            ("trajectory.acceleration", self.acceleration.to_string()),
            ("trajectory.turn_radius", self.turn_radius.to_string()),
            ("odometry.rate", self.odom_rate.to_string()),
            ("odometry.sigma_v", self.odometry.sigma_v.to_string()),
            ("odometry.sigma_yaw_rate", self.odometry.sigma_yaw_rate.to_string()),
            ("lidar.max_range", self.lidar.max_range.to_string()),
            ("lidar.fov_deg", self.lidar.fov.to_degrees().to_string()),
            ("lidar.resolution_deg", self.lidar.angular_resolution.to_degrees().to_string()),
            ("lidar.range_noise_sigma", self.lidar.range_noise_sigma.to_string()),
            ("lidar.rate", self.lidar.rate.to_string()),
            ("lidar.range_resolution", self.lidar.range_resolution.to_string()),
            ("init.sigma_pos", self.init.sigma_pos.to_string()),
            ("init.sigma_heading_deg", self.init.sigma_heading.to_degrees().to_string()),
            ("filter.n_particles", f.n_particles.to_string()),
            ("filter.init_particles", f.init_particles.to_string()),
            ("filter.sigma_init_pos", f.sigma_init_pos.to_string()),
            ("filter.sigma_init_heading_deg", f.sigma_init_heading.to_degrees().to_string()),
            ("filter.sigma_lat", f.sigma_lat.to_string()),
            ("filter.sigma_lon", f.sigma_lon.to_string()),
            ("filter.gate_distance", f.gate_distance.to_string()),
            ("filter.sigma_v", f.sigma_v.to_string()),
            ("filter.sigma_yaw_rate", f.sigma_yaw_rate.to_string()),
            ("filter.yaw_rate_epsilon", f.yaw_rate_epsilon.to_string()),
            ("filter.weight_floor", f.weight_floor.to_string()),
            ("filter.merge_frames", f.merge_frames.to_string()),
            ("filter.ess_threshold", f.ess_threshold.to_string()),
            ("filter.margin_factor", f.margin_factor.to_string()),
            ("filter.margin_floor", f.margin_floor.to_string()),
            ("segmentation.min_pts", s.min_pts.to_string()),
            ("segmentation.base_radius", s.base_radius.to_string()),
            ("segmentation.radius_scale", s.radius_scale.to_string()),
            ("segmentation.max_radius", s.max_radius.to_string()),
            ("segmentation.min_cluster_size", s.min_cluster_size.to_string()),
            ("lshape.angle_step_deg", l.angle_step.to_degrees().to_string()),
            ("lshape.d_min", l.d_min.to_string()),
            ("lshape.min_edge", l.min_edge.to_string()),
            ("lshape.max_edge", l.max_edge.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_text("", None).unwrap(), RunConfig::default());
        assert_eq!(RunConfig::from_text("# nothing\n\n", None).unwrap(), RunConfig::default());
    }

    #[test]
    fn keys_and_units() {
        let cfg = RunConfig::from_text(
            "seed = 7\nlidar.resolution_deg = 0.5  # coarser\nfilter.n_particles=200\nmap = lot.map\n",
            Some(Path::new("/tmp/run")),
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert!((cfg.lidar.angular_resolution - 0.5f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.segmentation_params().angular_step, cfg.lidar.angular_resolution);
        assert_eq!(cfg.filter.n_particles, 200);
        assert_eq!(cfg.map, MapSource::File("/tmp/run/lot.map".into()));
    }

    #[test]
    fn unknown_and_bad_entries_are_errors() {
        assert!(matches!(
            RunConfig::from_text("seed = 1\nfilter.sigma_latt = 0.1\n", None),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::from_text("filter.gate_distance = wide\n", None),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::from_text("seed 4\n", None),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::from_text("filter.n_particles = 3\n", None),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn to_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.seed = 99;
        cfg.filter.gate_distance = 0.45;
        cfg.route = RouteSource::File("/x/route.txt".into());
        let back = RunConfig::from_text(&cfg.to_text(), None).unwrap();
        assert_eq!(back.seed, 99);
        assert_eq!(back.filter.gate_distance, 0.45);
        assert_eq!(back.route, cfg.route);
        assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn waypoint_files() {
        let w = parse_waypoints("# route\n0,0\n10, 0\n").unwrap();
        assert_eq!(w, vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]);
        assert!(parse_waypoints("1,2,3\n").is_err());
    }
}
