//! Search-based rectangle fitting with the closeness criterion, and corner extraction.
//!
//! For every candidate heading on a grid over [0, pi/2) the cluster is projected
//! onto the heading axis and its normal. Each axis keeps whichever of its two
//! boundaries (min or max projection) the points hug more tightly; a point's
//! distance is to the nearer of those two kept boundaries, and the heading
//! whose points sit closest (largest sum of inverse distances) wins.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::error::{ensure, ParamError};
use crate::geometry::Point2;
use crate::segmentation::PointCluster;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("cluster is degenerate (extent {extent:.3e} m along one axis)")]
    DegenerateCluster { extent: f64 },
    #[error("adjacent edges {0} and {1} are parallel")]
    ParallelEdges(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LShapeParams {
    pub angle_step: f64,
    /// Lower clamp on point-to-boundary distances in the closeness score.
    pub d_min: f64,
    pub min_edge: f64,
    pub max_edge: f64,
}

impl Default for LShapeParams {
    fn default() -> Self {
        Self {
            angle_step: 0.5_f64.to_radians(),
            d_min: 0.01,
            min_edge: 0.2,
            max_edge: 8.0,
        }
    }
}

impl LShapeParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure(
            self.angle_step > 0.0 && self.angle_step <= std::f64::consts::FRAC_PI_8,
            "angle_step",
            "must be in (0, pi/8]",
        )?;
        ensure(self.d_min > 0.0, "d_min", "must be positive")?;
        ensure(self.min_edge > 0.0, "min_edge", "must be positive")?;
        ensure(self.max_edge > self.min_edge, "max_edge", "must exceed min_edge")
    }
}

/// A line `a*x + b*y = c` with `(a, b)` of unit length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    pub fn from_angle(theta: f64, c: f64) -> Self {
        let (b, a) = theta.sin_cos();
        Self { a, b, c }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedRectangle {
    /// Winning heading, in [0, pi/2).
    pub theta_star: f64,
    /// Edges 1..4: min along e1, min along e2, max along e1, max along e2.
    pub edges: [Line; 4],
    /// Counter-clockwise, starting from the corner with smallest (x, y).
    pub corners: [Point2; 4],
    pub score: f64,
}

impl FittedRectangle {
    /// Side lengths along the heading axis and its normal.
    pub fn extents(&self) -> (f64, f64) {
        (
            self.edges[2].c - self.edges[0].c,
            self.edges[3].c - self.edges[1].c,
        )
    }

    pub fn contains(&self, p: &Point2, slack: f64) -> bool {
        let u = self.edges[0].a * p.x + self.edges[0].b * p.y;
        let v = self.edges[1].a * p.x + self.edges[1].b * p.y;
        u >= self.edges[0].c - slack
            && u <= self.edges[2].c + slack
            && v >= self.edges[1].c - slack
            && v <= self.edges[3].c + slack
    }
}

fn closer_boundary_distances(proj: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let (lo, hi) = proj
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let to_max: f64 = proj.iter().map(|v| hi - v).sum();
    let to_min: f64 = proj.iter().map(|v| v - lo).sum();
    // ties go to the max boundary
    let use_max = to_max <= to_min;
    proj.iter()
        .map(move |&v| if use_max { hi - v } else { v - lo })
}

/// Closeness score of two projection vectors: `sum 1 / max(d_i, d_min)`.
pub fn closeness_score(c1: &[f64], c2: &[f64], d_min: f64) -> f64 {
    debug_assert_eq!(c1.len(), c2.len());
    score_from_distances(
        closer_boundary_distances(c1)
            .zip(closer_boundary_distances(c2))
            .map(|(d1, d2)| d1.min(d2)),
        d_min,
    )
}

/// `sum 1 / max(d_i, d_min)` over per-point boundary distances.
pub fn score_from_distances(d: impl Iterator<Item = f64>, d_min: f64) -> f64 {
    d.map(|d| 1.0 / d.max(d_min)).sum()
}

/// The heading grid `0, step, 2 step, ...` strictly below pi/2.
pub fn angle_grid(step: f64) -> impl Iterator<Item = f64> {
    let n = ((FRAC_PI_2 / step) - 1e-9).ceil() as usize;
    (0..n).map(move |k| k as f64 * step)
}

fn project(points: &[Point2], theta: f64, c1: &mut Vec<f64>, c2: &mut Vec<f64>) {
    let (s, c) = theta.sin_cos();
    c1.clear();
    c2.clear();
    for p in points {
        c1.push(p.x * c + p.y * s);
        c2.push(-p.x * s + p.y * c);
    }
}

/// Closeness score plus the unclamped total boundary distance, used to break
/// ties between headings whose clamped scores are equal (common once every
/// point sits within `d_min` of a boundary).
fn score_and_spread(c1: &[f64], c2: &[f64], d_min: f64) -> (f64, f64) {
    let mut score = 0.0;
    let mut spread = 0.0;
    for d in closer_boundary_distances(c1)
        .zip(closer_boundary_distances(c2))
        .map(|(d1, d2)| d1.min(d2))
    {
        score += 1.0 / d.max(d_min);
        spread += d;
    }
    (score, spread)
}

/// Fits the closeness-optimal bounding rectangle to a cluster.
pub fn fit_rectangle(
    cluster: &PointCluster,
    params: &LShapeParams,
) -> Result<FittedRectangle, FitError> {
    let points = &cluster.points;
    if points.len() < 2 {
        return Err(FitError::DegenerateCluster { extent: 0.0 });
    }

    let mut c1 = Vec::with_capacity(points.len());
    let mut c2 = Vec::with_capacity(points.len());
    // highest score, then smallest total distance, then lowest heading
    let mut best = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
    for theta in angle_grid(params.angle_step) {
        project(points, theta, &mut c1, &mut c2);
        let (q, spread) = score_and_spread(&c1, &c2, params.d_min);
        if q > best.0 || (q == best.0 && spread < best.1) {
            best = (q, spread, theta);
        }
    }
    let (score, _, theta_star) = best;

    project(points, theta_star, &mut c1, &mut c2);
    let min_max = |v: &[f64]| {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (lo1, hi1) = min_max(&c1);
    let (lo2, hi2) = min_max(&c2);
    let extent = (hi1 - lo1).min(hi2 - lo2);
    if extent < 1e-6 {
        return Err(FitError::DegenerateCluster { extent });
    }

    let theta2 = theta_star + FRAC_PI_2;
    let edges = [
        Line::from_angle(theta_star, lo1),
        Line::from_angle(theta2, lo2),
        Line::from_angle(theta_star, hi1),
        Line::from_angle(theta2, hi2),
    ];
    let corners = rectangle_corners(&edges)?;
    Ok(FittedRectangle {
        theta_star,
        edges,
        corners,
        score,
    })
}

/// Intersects adjacent edges (1-2, 2-3, 3-4, 4-1) and returns the corners
/// counter-clockwise, starting from the lexicographically smallest one.
pub fn rectangle_corners(edges: &[Line; 4]) -> Result<[Point2; 4], FitError> {
    let mut corners = [Point2::default(); 4];
    for i in 0..4 {
        let (l1, l2) = (edges[i], edges[(i + 1) % 4]);
        let det = l1.a * l2.b - l1.b * l2.a;
        if det.abs() < 1e-12 {
            return Err(FitError::ParallelEdges(i + 1, (i + 1) % 4 + 1));
        }
        corners[i] = Point2::new(
            (l1.c * l2.b - l1.b * l2.c) / det,
            (l1.a * l2.c - l1.c * l2.a) / det,
        );
    }

    let twice_area: f64 = (0..4)
        .map(|i| {
            let (p, q) = (corners[i], corners[(i + 1) % 4]);
            p.x * q.y - q.x * p.y
        })
        .sum();
    if twice_area < 0.0 {
        corners.reverse();
    }
    // x values within rounding noise of each other count as equal; +0.0 folds -0.0
    let key = |p: &Point2| ((p.x * 1e9).round() + 0.0, p.y);
    let start = (0..4)
        .min_by(|&i, &j| {
            let (a, b) = (key(&corners[i]), key(&corners[j]));
            a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
        })
        .unwrap_or(0);
    corners.rotate_left(start);
    Ok(corners)
}

/// Counters for clusters rejected during corner extraction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExtractionStats {
    pub fitted: usize,
    pub degenerate: usize,
    pub size_rejected: usize,
}

/// Fits every cluster and returns the corners of the plausibly sized rectangles,
/// four per rectangle, in cluster order.
pub fn extract_corner_observations(
    clusters: &[PointCluster],
    params: &LShapeParams,
) -> (Vec<Point2>, ExtractionStats) {
    let mut stats = ExtractionStats::default();
    let mut corners = Vec::with_capacity(clusters.len() * 4);
    for rect in fit_clusters(clusters, params, &mut stats) {
        corners.extend_from_slice(&rect.corners);
    }
    (corners, stats)
}

/// Fits every cluster, keeping only rectangles whose sides pass the size gate.
pub fn fit_clusters(
    clusters: &[PointCluster],
    params: &LShapeParams,
    stats: &mut ExtractionStats,
) -> Vec<FittedRectangle> {
    let mut out = Vec::new();
    for cluster in clusters {
        match fit_rectangle(cluster, params) {
            Ok(rect) => {
                let (w, h) = rect.extents();
                let ok = |s: f64| s >= params.min_edge && s <= params.max_edge;
                if ok(w) && ok(h) {
                    stats.fitted += 1;
                    out.push(rect);
                } else {
                    stats.size_rejected += 1;
                }
            }
            Err(_) => stats.degenerate += 1,
        }
    }
    out
}
