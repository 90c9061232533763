//! Synthetic 2D lidar: ray casting against the bridge rectangles.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{BridgeModel, Point3, SurfacePolygon};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub max_range: f64,
    /// Angle between consecutive rays, radians.
    pub angular_resolution: f64,
    /// Rotations per second.
    pub scan_rate: f64,
    pub range_noise_sigma: f64,
    pub min_range: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        LidarSpec {
            max_range: 40.0,
            angular_resolution: TAU / 360.0,
            scan_rate: 2.0,
            range_noise_sigma: 0.01,
            min_range: 0.3,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min_range > 0.0 && self.min_range < self.max_range) {
            return Err("lidar needs 0 < min_range < max_range".into());
        }
        if !(self.scan_rate > 0.0 && self.scan_rate <= 10.0) {
            return Err("lidar scan_rate must be in (0, 10] Hz".into());
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err("lidar range_noise_sigma must be non-negative".into());
        }
        if !(self.angular_resolution > 0.0 && self.angular_resolution <= TAU / 4.0) {
            return Err("lidar angular_resolution must be in (0, pi/2]".into());
        }
        Ok(())
    }

    pub fn rays_per_rotation(&self) -> usize {
        (TAU / self.angular_resolution).round() as usize
    }

    pub fn period(&self) -> f64 {
        1.0 / self.scan_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanPlane {
    /// World-horizontal plane at the UAV altitude. Bearing 0 is the heading,
    /// increasing counter-clockwise seen from above.
    Horizontal,
    /// Plane through the heading and world up. Bearing 0 is the heading,
    /// bearing π/2 points straight up.
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Scalar = f64> {
    pub position: Point3<T>,
    /// Heading about world z, radians, 0 along +x.
    pub yaw: T,
}

impl<T: Scalar> Pose<T> {
    pub fn new(position: Point3<T>, yaw: T) -> Self {
        Pose { position, yaw }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.yaw.is_finite()
    }

    /// World direction of a ray at `bearing` in `plane`.
    pub fn ray_direction(&self, plane: ScanPlane, bearing: T) -> Point3<T> {
        let (sy, cy) = self.yaw.sin_cos();
        let (sb, cb) = bearing.sin_cos();
        match plane {
            ScanPlane::Horizontal => {
                let (s, c) = (self.yaw + bearing).sin_cos();
                Point3::new(c, s, T::zero())
            }
            ScanPlane::Vertical => Point3::new(cb * cy, cb * sy, sb),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint<T: Scalar = f64> {
    /// Radians in `[0, 2π)`.
    pub bearing: T,
    pub range: T,
}

impl<T: Scalar> ScanPoint<T> {
    /// Cartesian coordinates in the scan plane.
    pub fn to_xy(&self) -> [T; 2] {
        let (s, c) = self.bearing.sin_cos();
        [self.range * c, self.range * s]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan<T: Scalar = f64> {
    pub plane: ScanPlane,
    pub pose: Pose<T>,
    /// Sorted by bearing.
    pub points: Vec<ScanPoint<T>>,
    pub timestamp: f64,
}

impl<T: Scalar> Scan<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Distance along the ray to the rectangle, if the ray hits it.
pub fn ray_rectangle<T: Scalar>(origin: &Point3<T>, dir: &Point3<T>, s: &SurfacePolygon<T>) -> Option<T> {
    let denom = s.plane_normal.dot(dir);
    if denom.abs() <= T::epsilon() {
        return None;
    }
    let t = s.plane_normal.dot(&(s.vertices[0] - *origin)) / denom;
    if t <= T::zero() {
        return None;
    }
    let hit = *origin + *dir * t;
    let e1 = s.vertices[1] - s.vertices[0];
    let e2 = s.vertices[3] - s.vertices[0];
    let rel = hit - s.vertices[0];
    let u = rel.dot(&e1) / e1.dot(&e1);
    let v = rel.dot(&e2) / e2.dot(&e2);
    let inside = |a: T| a >= T::zero() && a <= T::one();
    (inside(u) && inside(v)).then_some(t)
}

/// Nearest intersection of a ray with any bridge surface.
pub fn cast_ray<T: Scalar>(m: &BridgeModel<T>, origin: &Point3<T>, dir: &Point3<T>) -> Option<T> {
    m.surfaces
        .iter()
        .filter_map(|s| ray_rectangle(origin, dir, s))
        .fold(None, |best, t| Some(best.map_or(t, |b: T| b.min(t))))
}

/// One rotation of the lidar in `plane` from `pose`.
///
/// Rays that hit nothing within `max_range` (or closer than `min_range`) are
/// dropped. Range noise is Gaussian, drawn in ray order from a stream seeded
/// by `rng_seed`.
pub fn simulate_scan<T: Scalar>(
    m: &BridgeModel<T>,
    pose: &Pose<T>,
    plane: ScanPlane,
    spec: &LidarSpec,
    rng_seed: u64,
) -> Scan<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let noise = Normal::new(0.0, spec.range_noise_sigma).expect("sigma validated");
    let n = spec.rays_per_rotation();
    let (lo, hi) = (T::lit(spec.min_range), T::lit(spec.max_range));
    let mut points = Vec::new();
    for i in 0..n {
        let bearing = T::lit(i as f64 * TAU / n as f64);
        let dir = pose.ray_direction(plane, bearing);
        let Some(t) = cast_ray(m, &pose.position, &dir) else {
            continue;
        };
        if t < lo || t > hi {
            continue;
        }
        let r = if spec.range_noise_sigma > 0.0 {
            (t + T::lit(noise.sample(&mut rng))).max(lo).min(hi)
        } else {
            t
        };
        points.push(ScanPoint { bearing, range: r });
    }
    Scan {
        plane,
        pose: *pose,
        points,
        timestamp: 0.0,
    }
}
