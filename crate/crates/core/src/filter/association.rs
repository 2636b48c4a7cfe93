use std::f64::consts::PI;

use crate::geometry::{transform_to_map, Point2, Pose};
use crate::landmark_map::{Landmark, NNIndex};

/// One gated observation-landmark match.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub observation: usize,
    pub landmark_id: u32,
    /// Error across the heading axis.
    pub d_lat: f64,
    /// Error along the heading axis.
    pub d_lon: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Association {
    pub pairs: Vec<Pair>,
}

impl Association {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Splits `obs - landmark` into along-heading and across-heading parts.
#[inline]
pub fn heading_components(obs: &Point2, landmark: &Point2, heading: f64) -> (f64, f64) {
    let (s, c) = heading.sin_cos();
    let (dx, dy) = (obs.x - landmark.x, obs.y - landmark.y);
    let d_lon = c * dx + s * dy;
    let d_lat = -s * dx + c * dy;
    (d_lat, d_lon)
}

/// Matches every candidate landmark with its nearest observation and drops
/// matches beyond `gate`. An observation may serve several landmarks, but each
/// landmark keeps at most one observation (the closest).
pub fn associate_with_index(index: &NNIndex, candidates: &[Landmark], gate: f64, heading: f64) -> Association {
    let mut pairs = Vec::new();
    if index.is_empty() {
        return Association { pairs };
    }
    for lm in candidates {
        let Ok(nn) = index.nearest(&lm.position) else {
            continue;
        };
        if nn.distance > gate {
            continue;
        }
        let (d_lat, d_lon) = heading_components(&nn.point, &lm.position, heading);
        pairs.push(Pair {
            observation: nn.index,
            landmark_id: lm.id,
            d_lat,
            d_lon,
            distance: nn.distance,
        });
    }
    Association { pairs }
}

/// Map-frame observations against candidate landmarks; `heading` is the
/// particle heading that defines the lateral / longitudinal axes.
pub fn associate(obs_map_frame: &[Point2], candidates: &[Landmark], gate: f64, heading: f64) -> Association {
    associate_with_index(&NNIndex::build(obs_map_frame), candidates, gate, heading)
}

/// Association for one particle against a sensor-frame observation index.
///
/// Same result as transforming every observation into the map with the
/// particle pose and calling [`associate`], but the index is built once per
/// scan: candidates are moved into the sensor frame for the nearest-neighbor
/// search (a rigid motion preserves distances), and the matched observation
/// is then mapped with the particle pose for gating and the error split.
pub fn associate_particle(
    pose: &Pose,
    sensor_index: &NNIndex,
    candidates: &[Landmark],
    gate: f64,
) -> Association {
    let mut pairs = Vec::new();
    if sensor_index.is_empty() {
        return Association { pairs };
    }
    let inv = pose.inverse();
    for lm in candidates {
        let q = transform_to_map(&inv, &lm.position);
        let Ok(nn) = sensor_index.nearest(&q) else {
            continue;
        };
        if nn.distance > gate + 1e-9 {
            continue;
        }
        let m = transform_to_map(pose, &nn.point);
        let distance = m.distance(&lm.position);
        if distance > gate {
            continue;
        }
        let (d_lat, d_lon) = heading_components(&m, &lm.position, pose.psi);
        pairs.push(Pair {
            observation: nn.index,
            landmark_id: lm.id,
            d_lat,
            d_lon,
            distance,
        });
    }
    Association { pairs }
}

/// Natural log of the bivariate Gaussian pair likelihood.
#[inline]
pub fn pair_log_likelihood(d_lat: f64, d_lon: f64, sigma_lat: f64, sigma_lon: f64) -> f64 {
    let gamma = (d_lat / sigma_lat).powi(2) + (d_lon / sigma_lon).powi(2);
    -0.5 * gamma - (2.0 * PI * sigma_lat * sigma_lon).ln()
}

/// `exp(-Gamma / 2) / (2 pi sigma_lat sigma_lon)` with
/// `Gamma = d_lat^2 / sigma_lat^2 + d_lon^2 / sigma_lon^2`.
pub fn pair_likelihood(d_lat: f64, d_lon: f64, sigma_lat: f64, sigma_lon: f64) -> f64 {
    let gamma = (d_lat / sigma_lat).powi(2) + (d_lon / sigma_lon).powi(2);
    (-0.5 * gamma).exp() / (2.0 * PI * sigma_lat * sigma_lon)
}
