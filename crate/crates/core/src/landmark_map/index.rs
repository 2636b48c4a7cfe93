//! Static 2-D KD-tree for exact nearest-neighbor queries.

use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("nearest-neighbor query on an empty index")]
    EmptyIndex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    /// Insertion index of the matched point.
    pub index: usize,
    pub point: Point2,
    pub distance: f64,
}

#[derive(Clone, Debug)]
struct Node {
    point: usize,
    axis: u8,
    left: Option<u32>,
    right: Option<u32>,
}

/// Balanced KD-tree built once over a point set.
///
/// Ties in distance resolve to the smallest insertion index, so results are
/// identical to a linear scan that keeps the first minimum.
#[derive(Clone, Debug)]
pub struct NNIndex {
    points: Vec<Point2>,
    nodes: Vec<Node>,
    root: Option<u32>,
}

fn coord(p: &Point2, axis: u8) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

impl NNIndex {
    pub fn build(points: &[Point2]) -> Self {
        let mut index = Self {
            points: points.to_vec(),
            nodes: Vec::with_capacity(points.len()),
            root: None,
        };
        let mut order: Vec<usize> = (0..points.len()).collect();
        index.root = index.build_node(&mut order);
        index
    }

    fn build_node(&mut self, order: &mut [usize]) -> Option<u32> {
        if order.is_empty() {
            return None;
        }
        // split on the axis of larger spread
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for &i in order.iter() {
            let p = self.points[i];
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
        let axis = u8::from(hi[1] - lo[1] > hi[0] - lo[0]);
        let mid = order.len() / 2;
        let points = &self.points;
        order.select_nth_unstable_by(mid, |&a, &b| {
            coord(&points[a], axis).total_cmp(&coord(&points[b], axis))
        });
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            point: order[mid],
            axis,
            left: None,
            right: None,
        });
        let (left, rest) = order.split_at_mut(mid);
        let left = self.build_node(left);
        let right = self.build_node(&mut rest[1..]);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        Some(id)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn nearest(&self, q: &Point2) -> Result<Neighbor, IndexError> {
        let root = self.root.ok_or(IndexError::EmptyIndex)?;
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(root, q, &mut best);
        let (d2, index) = best;
        Ok(Neighbor {
            index,
            point: self.points[index],
            distance: d2.sqrt(),
        })
    }

    fn search(&self, id: u32, q: &Point2, best: &mut (f64, usize)) {
        let node = &self.nodes[id as usize];
        let p = &self.points[node.point];
        let d2 = q.distance_squared(p);
        if d2 < best.0 || (d2 == best.0 && node.point < best.1) {
            *best = (d2, node.point);
        }
        let diff = coord(q, node.axis) - coord(p, node.axis);
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(n) = near {
            self.search(n, q, best);
        }
        // equal-distance points across the plane can still win on index
        if let Some(f) = far {
            if diff * diff <= best.0 {
                self.search(f, q, best);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Point2], q: &Point2) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = q.distance_squared(p);
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    #[test]
    fn empty_index_errors() {
        let idx = NNIndex::build(&[]);
        assert_eq!(idx.nearest(&Point2::default()), Err(IndexError::EmptyIndex));
    }

    #[test]
    fn single_point() {
        let idx = NNIndex::build(&[Point2::new(3.0, 4.0)]);
        let n = idx.nearest(&Point2::default()).unwrap();
        assert_eq!(n.index, 0);
        assert_eq!(n.distance, 5.0);
        assert_eq!(idx.nearest(&Point2::new(3.0, 4.0)).unwrap().distance, 0.0);
    }

    #[test]
    fn duplicate_points_resolve_to_first_inserted() {
        let pts = vec![Point2::new(1.0, 1.0); 7];
        let idx = NNIndex::build(&pts);
        assert_eq!(idx.nearest(&Point2::new(0.0, 0.0)).unwrap().index, 0);
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            pts in prop::collection::vec((-50i32..50, -50i32..50), 1..200),
            qs in prop::collection::vec((-60i32..60, -60i32..60), 1..20),
        ) {
            // integer grid coordinates produce many exact ties
            let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x as f64 * 0.5, y as f64 * 0.5)).collect();
            let idx = NNIndex::build(&pts);
            for (x, y) in qs {
                let q = Point2::new(x as f64 * 0.5, y as f64 * 0.5);
                let n = idx.nearest(&q).unwrap();
                let (bi, bd2) = brute(&pts, &q);
                prop_assert_eq!(n.index, bi);
                prop_assert_eq!(n.distance, bd2.sqrt());
            }
        }
    }
}
