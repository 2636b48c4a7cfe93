//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use parkloc::segmentation::{adaptive_radius, SegmentationParams};
use parkloc::Point2;

/// Result of the reference DBSCAN: core flags, and a cluster label per point
/// (`None` for outliers) with clusters numbered by their lowest core index.
pub struct OracleDbscan {
    pub core: Vec<bool>,
    pub labels: Vec<Option<usize>>,
    pub clusters: Vec<Vec<usize>>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// All-pairs DBSCAN under the mutual adaptive radius. Core points are linked
/// by union-find; each border point joins the component holding its
/// lowest-index core neighbor's component seed (the component's smallest core
/// index), which is the order-fixed assignment.
pub fn dbscan_oracle(points: &[Point2], ranges: &[f64], params: &SegmentationParams) -> OracleDbscan {
    let n = points.len();
    let radii: Vec<f64> = ranges.iter().map(|&r| adaptive_radius(r, params)).collect();
    let near = |i: usize, j: usize| {
        let r = radii[i].min(radii[j]);
        let (dx, dy) = (points[i].x - points[j].x, points[i].y - points[j].y);
        dx * dx + dy * dy <= r * r
    };
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= params.min_pts)
        .collect();

    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && near(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    // seed of a core point = smallest core index in its component
    let mut seed = vec![usize::MAX; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            seed[r] = seed[r].min(i);
        }
    }
    let mut point_seed = vec![None; n];
    for i in 0..n {
        if core[i] {
            point_seed[i] = Some(seed[find(&mut parent, i)]);
        } else {
            point_seed[i] = (0..n)
                .filter(|&j| core[j] && near(i, j))
                .map(|j| seed[find(&mut parent, j)])
                .min();
        }
    }

    let mut seeds: Vec<usize> = point_seed.iter().flatten().copied().collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut clusters: Vec<Vec<usize>> = seeds
        .iter()
        .map(|s| (0..n).filter(|&i| point_seed[i] == Some(*s)).collect())
        .collect();
    clusters.retain(|c| c.len() >= params.min_cluster_size);
    let mut labels = vec![None; n];
    for (k, c) in clusters.iter().enumerate() {
        for &i in c {
            labels[i] = Some(k);
        }
    }
    OracleDbscan { core, labels, clusters }
}

/// Closeness score recomputed from scratch for one heading.
pub fn closeness_oracle(points: &[Point2], theta: f64, d_min: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let a: Vec<f64> = points.iter().map(|p| c * p.x + s * p.y).collect();
    let b: Vec<f64> = points.iter().map(|p| -s * p.x + c * p.y).collect();
    let side = |v: &[f64]| -> Vec<f64> {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let to_lo: Vec<f64> = v.iter().map(|x| x - lo).collect();
        let to_hi: Vec<f64> = v.iter().map(|x| hi - x).collect();
        let norm = |d: &[f64]| d.iter().sum::<f64>();
        if norm(&to_hi) <= norm(&to_lo) {
            to_hi
        } else {
            to_lo
        }
    };
    let (da, db) = (side(&a), side(&b));
    da.iter()
        .zip(&db)
        .map(|(x, y)| 1.0 / x.min(*y).max(d_min))
        .sum()
}

/// Grid argmax of [`closeness_oracle`], keeping the first maximum.
pub fn best_heading_oracle(points: &[Point2], step: f64, d_min: f64) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut k = 0;
    loop {
        let theta = k as f64 * step;
        if theta >= FRAC_PI_2 - 1e-9 * step {
            break;
        }
        let q = closeness_oracle(points, theta, d_min);
        if q > best.0 {
            best = (q, theta);
        }
        k += 1;
    }
    best.1
}

/// Distance between two headings modulo pi/2.
pub fn quarter_turn_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(FRAC_PI_2);
    d.min(FRAC_PI_2 - d)
}

/// Corners of a `w` x `h` rectangle centered at `c` and rotated by `phi`, counter-clockwise.
pub fn rectangle(c: Point2, w: f64, h: f64, phi: f64) -> [Point2; 4] {
    let (s, co) = phi.sin_cos();
    let local = [(-w / 2.0, -h / 2.0), (w / 2.0, -h / 2.0), (w / 2.0, h / 2.0), (-w / 2.0, h / 2.0)];
    local.map(|(x, y)| Point2::new(c.x + co * x - s * y, c.y + s * x + co * y))
}

/// Root-mean-square corner error under the best cyclic correspondence.
pub fn corner_rmse(fitted: &[Point2; 4], truth: &[Point2; 4]) -> f64 {
    (0..4)
        .flat_map(|shift| {
            [false, true].map(move |flip| {
                let sq: f64 = (0..4)
                    .map(|i| {
                        let j = if flip { (4 + shift - i) % 4 } else { (shift + i) % 4 };
                        fitted[i].distance_squared(&truth[j])
                    })
                    .sum();
                (sq / 4.0).sqrt()
            })
        })
        .fold(f64::INFINITY, f64::min)
}

/// Points along the two faces adjacent to the corner nearest the origin,
/// as a sensor at the origin would see them.
pub fn two_face_view(corners: &[Point2; 4], spacing: f64) -> Vec<Point2> {
    let k = (0..4)
        .min_by(|&a, &b| corners[a].norm().total_cmp(&corners[b].norm()))
        .unwrap();
    let v = corners[k];
    let mut out = Vec::new();
    for other in [corners[(k + 1) % 4], corners[(k + 3) % 4]] {
        let len = v.distance(&other);
        let n = (len / spacing).round().max(2.0) as usize;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            out.push(Point2::new(v.x + t * (other.x - v.x), v.y + t * (other.y - v.y)));
        }
    }
    out
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Reads an `x,y` point file with `#` comments.
pub fn read_points(name: &str) -> Vec<Point2> {
    let text = std::fs::read_to_string(fixture(name)).expect("fixture readable");
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (x, y) = l.split_once(',').expect("x,y");
            Point2::new(x.trim().parse().unwrap(), y.trim().parse().unwrap())
        })
        .collect()
}

/// Brute-force nearest neighbor, first minimum wins.
pub fn nearest_oracle(points: &[Point2], q: &Point2) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d2 = (p.x - q.x).powi(2) + (p.y - q.y).powi(2);
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}
