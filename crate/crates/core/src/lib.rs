//! Landmark-based localization for a parking robot.
//!
//! A single-line LiDAR scan is clustered (DBSCAN with a range-adaptive
//! radius), each cluster is fitted with a rectangle by L-shape search, and the
//! rectangle corners are matched against a map of pillar / charging-pile
//! corners to weight a particle filter driven by odometry.

pub mod error;
pub mod eval;
pub mod filter;
pub mod geometry;
pub mod landmark_map;
pub mod lshape;
pub mod segmentation;
pub mod simulator;

pub use error::ParamError;
pub use geometry::{normalize_angle, scan_to_points, transform_to_map, LaserScan, OdometrySample, Point2, Pose};
pub use landmark_map::{Landmark, LandmarkMap, NNIndex};
