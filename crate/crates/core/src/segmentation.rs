//! Density-based clustering of scan points.
//!
//! Classic DBSCAN, except the neighborhood radius grows with range so that
//! sparse far-away surfaces still form clusters. Two points are neighbors when
//! each lies within the other's radius, which keeps the relation symmetric.
//! A point counts itself as a neighbor.

use std::collections::HashMap;

use crate::error::{ensure, ParamError};
use crate::geometry::Point2;

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationParams {
    /// Minimum neighborhood size (including the point) for a core point.
    pub min_pts: usize,
    pub base_radius: f64,
    /// Multiplier on `range * angular_step`, the nominal gap between adjacent beams.
    pub radius_scale: f64,
    pub angular_step: f64,
    pub max_radius: f64,
    pub min_cluster_size: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            min_pts: 4,
            base_radius: 0.1,
            radius_scale: 3.0,
            angular_step: 0.25_f64.to_radians(),
            max_radius: 0.5,
            min_cluster_size: 8,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure(self.min_pts >= 2, "min_pts", "must be at least 2")?;
        ensure(self.base_radius > 0.0, "base_radius", "must be positive")?;
        ensure(self.radius_scale >= 0.0, "radius_scale", "must be non-negative")?;
        ensure(self.angular_step > 0.0, "angular_step", "must be positive")?;
        ensure(
            self.max_radius >= self.base_radius,
            "max_radius",
            "must be at least base_radius",
        )?;
        ensure(self.min_cluster_size >= 1, "min_cluster_size", "must be at least 1")
    }
}

/// A group of scan points believed to belong to one object.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCluster {
    pub points: Vec<Point2>,
    /// Input indices of `points`, strictly increasing.
    pub indices: Vec<usize>,
}

impl PointCluster {
    pub fn from_points(points: Vec<Point2>) -> Self {
        let indices = (0..points.len()).collect();
        Self { points, indices }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Segmentation {
    pub clusters: Vec<PointCluster>,
    pub outliers: Vec<usize>,
}

/// Neighborhood radius for a return at `range`.
pub fn adaptive_radius(range: f64, params: &SegmentationParams) -> f64 {
    (params.base_radius + params.radius_scale * range * params.angular_step)
        .clamp(params.base_radius, params.max_radius)
}

/// Per-point neighbor lists (sorted, self included) under the mutual-radius rule.
pub(crate) fn neighbor_lists(points: &[Point2], radii: &[f64], cell: f64) -> Vec<Vec<usize>> {
    let key = |p: &Point2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }

    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy) = key(p);
            let mut out = Vec::new();
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    let Some(bucket) = grid.get(&(gx, gy)) else {
                        continue;
                    };
                    for &j in bucket {
                        let r = radii[i].min(radii[j]);
                        if p.distance_squared(&points[j]) <= r * r {
                            out.push(j);
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// Clusters `points` (with their sensor ranges) and returns the clusters plus
/// the indices of every point left unclustered.
///
/// Clusters are seeded from core points in ascending index order and grown
/// breadth-first, so a border point reachable from two clusters joins the one
/// with the lower-index seed. Clusters below `min_cluster_size` are demoted to
/// outliers.
pub fn segment(points: &[Point2], ranges: &[f64], params: &SegmentationParams) -> Segmentation {
    assert_eq!(
        points.len(),
        ranges.len(),
        "points and ranges must have the same length"
    );
    if points.is_empty() {
        return Segmentation::default();
    }

    let radii: Vec<f64> = ranges.iter().map(|&r| adaptive_radius(r, params)).collect();
    let cell = radii.iter().cloned().fold(params.base_radius, f64::max);
    let neighbors = neighbor_lists(points, &radii, cell);
    let is_core: Vec<bool> = neighbors.iter().map(|n| n.len() >= params.min_pts).collect();

    let mut label: Vec<Option<usize>> = vec![None; points.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for seed in 0..points.len() {
        if !is_core[seed] || label[seed].is_some() {
            continue;
        }
        let id = members.len();
        let mut cluster = vec![seed];
        label[seed] = Some(id);
        queue.push_back(seed);
        while let Some(q) = queue.pop_front() {
            for &j in &neighbors[q] {
                if label[j].is_none() {
                    label[j] = Some(id);
                    cluster.push(j);
                    if is_core[j] {
                        queue.push_back(j);
                    }
                }
            }
        }
        cluster.sort_unstable();
        members.push(cluster);
    }

    let mut out = Segmentation::default();
    for cluster in members {
        if cluster.len() < params.min_cluster_size {
            for i in cluster {
                label[i] = None;
            }
            continue;
        }
        out.clusters.push(PointCluster {
            points: cluster.iter().map(|&i| points[i]).collect(),
            indices: cluster,
        });
    }
    out.outliers = (0..points.len()).filter(|&i| label[i].is_none()).collect();
    out
}

/// Indices of the core points, in ascending order. Mostly useful for diagnostics.
pub fn core_points(points: &[Point2], ranges: &[f64], params: &SegmentationParams) -> Vec<usize> {
    let radii: Vec<f64> = ranges.iter().map(|&r| adaptive_radius(r, params)).collect();
    let cell = radii.iter().cloned().fold(params.base_radius, f64::max);
    neighbor_lists(points, &radii, cell)
        .iter()
        .enumerate()
        .filter(|(_, n)| n.len() >= params.min_pts)
        .map(|(i, _)| i)
        .collect()
}
