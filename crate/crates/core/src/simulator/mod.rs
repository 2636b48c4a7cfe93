//! Deterministic 2D parking-lot simulator: world geometry, ray-cast LiDAR,
//! odometry, scripted routes and the sensor log they produce.

mod lidar;
mod log;
mod sensors;
mod trajectory;
mod world;

pub use lidar::{ray_rectangle, raycast_scan, LidarSpec};
pub use log::{simulate, stream_rng, streams, LogError, LogRecord, SensorLog, SimulationError, SimulationSpec};
pub use sensors::{noisy_initial_fix, rayleigh_95, sample_odometry, InitNoise};
pub use trajectory::{
    repeat_loop, step_trajectory, OdometryNoise, Trajectory, TrajectoryError, TrajectorySpec, Twist,
    DEFAULT_LAPS, DEFAULT_LOOP,
};
pub use world::{default_lot, Bounds, Obstacle, ObstacleKind, WorldError, WorldModel, LOT_SIZE, PILE_SIDE, PILLAR_SIDE};
