mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{best_heading_oracle, closeness_oracle, corner_rmse, quarter_turn_distance, rectangle, two_face_view};
use parkloc::lshape::{closeness_score, fit_rectangle, LShapeParams};
use parkloc::segmentation::PointCluster;
use parkloc::Point2;
use proptest::prelude::*;

fn cluster(points: Vec<Point2>) -> PointCluster {
    PointCluster::from_points(points)
}

fn rotate(p: &Point2, phi: f64) -> Point2 {
    let (s, c) = phi.sin_cos();
    Point2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

fn scattered() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..50)
        .prop_map(|v| v.into_iter().map(|(x, y)| Point2::new(x, y)).collect())
}

fn non_degenerate(points: &[Point2]) -> bool {
    let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    hi.x - lo.x > 0.05 && hi.y - lo.y > 0.05
}

proptest! {
    #[test]
    fn heading_is_the_grid_argmax(pts in scattered()) {
        prop_assume!(non_degenerate(&pts));
        let params = LShapeParams::default();
        if let Ok(rect) = fit_rectangle(&cluster(pts.clone()), &params) {
            let oracle = best_heading_oracle(&pts, params.angle_step, params.d_min);
            // equal scores at different headings are legitimate ties
            let (a, b) = (closeness_oracle(&pts, rect.theta_star, params.d_min), closeness_oracle(&pts, oracle, params.d_min));
            prop_assert!(rect.theta_star == oracle || (a - b).abs() <= 1e-9 * b.abs(), "{} vs {}", rect.theta_star, oracle);
        }
    }

    #[test]
    fn every_point_is_inside(pts in scattered()) {
        prop_assume!(non_degenerate(&pts));
        if let Ok(rect) = fit_rectangle(&cluster(pts.clone()), &LShapeParams::default()) {
            for p in &pts {
                prop_assert!(rect.contains(p, 1e-9));
            }
        }
    }

    #[test]
    fn score_ignores_translation(pts in scattered(), dx in -50.0f64..50.0, dy in -50.0f64..50.0, theta in 0.0f64..FRAC_PI_2) {
        let proj = |pts: &[Point2]| -> (Vec<f64>, Vec<f64>) {
            let (s, c) = theta.sin_cos();
            (pts.iter().map(|p| c * p.x + s * p.y).collect(), pts.iter().map(|p| -s * p.x + c * p.y).collect())
        };
        let moved: Vec<Point2> = pts.iter().map(|p| Point2::new(p.x + dx, p.y + dy)).collect();
        let (a1, a2) = proj(&pts);
        let (b1, b2) = proj(&moved);
        let (x, y) = (closeness_score(&a1, &a2, 0.01), closeness_score(&b1, &b2, 0.01));
        prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
    }

    #[test]
    fn rotation_equivariance(
        (cx, cy) in (4.0f64..12.0, -6.0f64..6.0),
        (w, h) in (0.4f64..3.0, 0.4f64..3.0),
        phi0 in 0.0f64..FRAC_PI_2,
        turn in -PI..PI,
    ) {
        let params = LShapeParams::default();
        let truth = rectangle(Point2::new(cx, cy), w, h, phi0);
        let pts = two_face_view(&truth, 0.03);
        let turned: Vec<Point2> = pts.iter().map(|p| rotate(p, turn)).collect();
        let a = fit_rectangle(&cluster(pts), &params).unwrap();
        let b = fit_rectangle(&cluster(turned), &params).unwrap();
        prop_assert!(quarter_turn_distance(b.theta_star, a.theta_star + turn) <= params.angle_step + 1e-9);
        let moved = a.corners.map(|c| rotate(&c, turn));
        let diag = (w * w + h * h).sqrt();
        prop_assert!(corner_rmse(&b.corners, &moved) <= params.angle_step.tan() * diag + 1e-9);
    }
}

#[test]
fn thirty_degree_rectangle() {
    let params = LShapeParams::default();
    let truth = rectangle(Point2::new(6.0, 2.0), 2.0, 1.0, 30f64.to_radians());
    let rect = fit_rectangle(&cluster(two_face_view(&truth, 0.02)), &params).unwrap();
    assert!(quarter_turn_distance(rect.theta_star, 30f64.to_radians()) <= params.angle_step + 1e-12);
    let bound = params.angle_step.tan() * 5f64.sqrt() / 2.0;
    assert!(corner_rmse(&rect.corners, &truth) <= bound);
}

#[test]
fn l_view_completes_the_square() {
    let truth = rectangle(Point2::new(8.0, -3.0), 0.8, 0.8, 0.0);
    let rect = fit_rectangle(&cluster(two_face_view(&truth, 0.02)), &LShapeParams::default()).unwrap();
    assert!(corner_rmse(&rect.corners, &truth) < 1e-9);
}
