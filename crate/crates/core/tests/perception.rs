mod common;

use std::f64::consts::FRAC_PI_2;

use common::bridge_11;
use girder_inspect::geometry::Point3;
use girder_inspect::lidar::{simulate_scan, LidarSpec, Pose, ScanPlane};
use girder_inspect::perception::{hough_lines, HoughParams, LineEstimate, PerceptionConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn segment(a: [f64; 2], b: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// Origin-to-line distance through two points, from the cross product.
fn origin_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).abs() / ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

fn scans(pos: Point3<f64>, yaw: f64) -> (Vec<LineEstimate<f64>>, Vec<LineEstimate<f64>>) {
    let m = bridge_11();
    let spec = LidarSpec {
        range_noise_sigma: 0.0,
        ..LidarSpec::default()
    };
    let cfg = PerceptionConfig::default();
    let pose = Pose::new(pos, yaw);
    let h = simulate_scan(&m, &pose, ScanPlane::Horizontal, &spec, 0);
    let v = simulate_scan(&m, &pose, ScanPlane::Vertical, &spec, 0);
    (cfg.lines(&h), cfg.lines(&v))
}

#[test]
fn distance_matches_closed_form() {
    let p = HoughParams::default();
    for (a, b) in [([3.0, -2.0], [5.0, 2.0]), ([-4.0, 1.0], [-1.0, 6.0]), ([2.0, 3.0], [7.0, 3.5])] {
        let lines = hough_lines(&segment(a, b, 60), &p);
        assert_eq!(lines.len(), 1);
        assert!((lines[0].distance() - origin_distance(a, b)).abs() < 1e-9);
        let ext = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        assert!((lines[0].extent - ext).abs() < 1e-9);
    }
}

#[test]
fn girder_estimate_from_simulated_scan() {
    let cfg = PerceptionConfig::default();
    let (h, v) = scans(Point3::new(90.0, -4.5, 17.5), FRAC_PI_2);
    let est = cfg.estimate_girder(&v, &h).unwrap();
    assert!((est.standoff - 4.5).abs() < 1e-9);
    // Edge refinement leaves at most half a ray spacing of error.
    let spacing = 4.5 * 1f64.to_radians();
    assert!((est.along_offset - 2.5).abs() <= spacing, "{}", est.along_offset);
    assert!(est.heading_error.unwrap().abs() < 1e-9);
}

#[test]
fn tilt_shows_up_as_heading_error() {
    let cfg = PerceptionConfig::default();
    for deg in [-5.0f64, 5.0] {
        let (h, _) = scans(Point3::new(90.0, -4.5, 17.5), FRAC_PI_2 + deg.to_radians());
        let err = cfg.heading_error(&h).unwrap();
        // Turning by the error brings the heading back to the face normal.
        assert!((err + deg.to_radians()).abs() < 0.5f64.to_radians(), "{deg}: {err}");
    }
}

#[test]
fn column_lateral_offset_sign() {
    let cfg = PerceptionConfig::default();
    for dx in [-0.4, 0.0, 0.4] {
        let (h, v) = scans(Point3::new(40.0 + dx, -4.0, 8.0), FRAC_PI_2);
        let est = cfg.estimate_column(&h, &v, 0.0).unwrap();
        // Facing +y, world +x is to the right.
        assert!((est.along_offset - dx).abs() < 0.06, "dx {dx}: {}", est.along_offset);
        assert!((est.standoff - 4.5).abs() < 1e-9);
    }
}

#[test]
fn column_below_girder_only_near_columns() {
    let cfg = PerceptionConfig::default();
    let (_, at_column) = scans(Point3::new(80.0, -4.5, 17.5), FRAC_PI_2);
    let (_, mid_span) = scans(Point3::new(90.0, -4.5, 17.5), FRAC_PI_2);
    assert!(cfg.column_below_girder(&at_column));
    assert!(!cfg.column_below_girder(&mid_span));
}

#[test]
fn height_above_column_base() {
    let cfg = PerceptionConfig::default();
    let (_, v) = scans(Point3::new(60.0, -4.5, 6.0), FRAC_PI_2);
    let h = cfg.height_above_base(&v).unwrap();
    assert!((h - 6.0).abs() < 0.1, "{h}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn point_order_does_not_matter(seed in any::<u64>(), d in 2.0f64..10.0, len in 2.0f64..6.0) {
        let mut pts = segment([d, -len / 2.0], [d, len / 2.0], 40);
        pts.extend(segment([-3.0, 2.0], [-3.0 + len, 3.0], 30));
        let p = HoughParams::default();
        let a = hough_lines(&pts, &p);
        pts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = hough_lines(&pts, &p);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.inlier_count, y.inlier_count);
            prop_assert!((x.theta - y.theta).abs() < 1e-9 && (x.rho - y.rho).abs() < 1e-9);
            prop_assert!((x.extent - y.extent).abs() < 1e-9);
        }
    }

    #[test]
    fn fitted_lines_lie_near_their_inliers(theta in 0.0f64..180.0, rho in -8.0f64..8.0) {
        let a = theta.to_radians();
        let (n, dir) = ([-a.sin(), a.cos()], [a.cos(), a.sin()]);
        let at = |t: f64| [n[0] * rho + dir[0] * t, n[1] * rho + dir[1] * t];
        let pts = segment(at(-2.0), at(2.0), 41);
        let lines = hough_lines(&pts, &HoughParams::default());
        prop_assert_eq!(lines.len(), 1);
        let l = lines[0];
        prop_assert!((l.distance() - rho.abs()).abs() < 1e-9);
        for e in l.endpoints {
            let off = -e[0] * l.theta.to_radians().sin() + e[1] * l.theta.to_radians().cos();
            prop_assert!((off - l.rho).abs() < 1e-9);
        }
    }
}
