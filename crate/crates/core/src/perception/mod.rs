//! Scan filtering, line extraction and the surface offsets fed to control.

mod hough;

pub use hough::{hough_lines, HoughParams};

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::TAU;

use crate::lidar::Scan;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerceptionError {
    #[error("line has zero extent or non-finite parameters")]
    DegenerateLine,
}

/// A line found in a scan, in scan-plane coordinates.
///
/// `theta` is the inclination in degrees, `[0, 180)`: 0 is a line along the
/// scan x axis, 90 a line along y. `rho` is the signed offset along the normal
/// `(-sin θ, cos θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineEstimate<T: Scalar = f64> {
    pub theta: T,
    pub rho: T,
    pub extent: T,
    pub inlier_count: usize,
    pub endpoints: [[T; 2]; 2],
}

impl<T: Scalar> LineEstimate<T> {
    /// Perpendicular distance from the sensor origin.
    pub fn distance(&self) -> T {
        self.rho.abs()
    }

    /// Endpoint with the larger scan y.
    pub fn upper(&self) -> [T; 2] {
        if self.endpoints[0][1] >= self.endpoints[1][1] {
            self.endpoints[0]
        } else {
            self.endpoints[1]
        }
    }

    /// Endpoint with the smaller scan y.
    pub fn lower(&self) -> [T; 2] {
        if self.endpoints[0][1] < self.endpoints[1][1] {
            self.endpoints[0]
        } else {
            self.endpoints[1]
        }
    }

    /// Mean gap between neighbouring inliers along the line.
    pub fn spacing(&self) -> T {
        if self.inlier_count < 2 {
            T::zero()
        } else {
            self.extent / T::lit((self.inlier_count - 1) as f64)
        }
    }

    fn is_degenerate(&self) -> bool {
        !(self.extent > T::zero() && self.rho.is_finite() && self.theta.is_finite())
    }
}

/// Slope and extent bounds that pick the tracked face out of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicWindow {
    /// Degrees.
    pub slope_center: f64,
    /// Degrees.
    pub slope_tolerance: f64,
    pub extent_min: f64,
    pub extent_max: f64,
}

impl CharacteristicWindow {
    pub const GIRDER: CharacteristicWindow = CharacteristicWindow {
        slope_center: 90.0,
        slope_tolerance: 15.0,
        extent_min: 3.0,
        extent_max: 5.0,
    };

    pub const COLUMN: CharacteristicWindow = CharacteristicWindow {
        slope_center: 90.0,
        slope_tolerance: 15.0,
        extent_min: 1.0,
        extent_max: 6.0,
    };

    pub fn validate(&self) -> Result<(), String> {
        if self.slope_tolerance > 0.0 && self.extent_min >= 0.0 && self.extent_min < self.extent_max {
            Ok(())
        } else {
            Err("window needs tolerance > 0 and 0 <= extent_min < extent_max".into())
        }
    }

    pub fn matches<T: Scalar>(&self, l: &LineEstimate<T>) -> bool {
        let d = (l.theta.as_f64() - self.slope_center).rem_euclid(180.0);
        let extent = l.extent.as_f64();
        d.min(180.0 - d) <= self.slope_tolerance && extent >= self.extent_min && extent <= self.extent_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceEstimate<T: Scalar = f64> {
    pub standoff: T,
    /// Girder modes: distance below the girder top. Column modes: lateral
    /// offset of the UAV from the column center, positive to the right.
    pub along_offset: T,
    pub line: LineEstimate<T>,
    pub fresh: bool,
    /// Yaw error from the horizontal scan, radians, positive when the UAV
    /// should turn counter-clockwise.
    pub heading_error: Option<T>,
}

/// Points with range in `[near, far]` as scan-plane Cartesian coordinates.
pub fn filter_points<T: Scalar>(s: &Scan<T>, near: T, far: T) -> Vec<[T; 2]> {
    s.points
        .iter()
        .filter(|p| p.range >= near && p.range <= far)
        .map(|p| p.to_xy())
        .collect()
}

fn line_order<T: Scalar>(a: &LineEstimate<T>, b: &LineEstimate<T>) -> Ordering {
    b.inlier_count
        .cmp(&a.inlier_count)
        .then(a.rho.abs().partial_cmp(&b.rho.abs()).unwrap_or(Ordering::Equal))
        .then(a.theta.partial_cmp(&b.theta).unwrap_or(Ordering::Equal))
        .then(a.rho.partial_cmp(&b.rho).unwrap_or(Ordering::Equal))
}

/// Best line inside the window: most inliers, then smallest `|rho|`.
pub fn select_surface_line<T: Scalar>(lines: &[LineEstimate<T>], w: &CharacteristicWindow) -> Option<LineEstimate<T>> {
    lines.iter().filter(|l| w.matches(*l)).min_by(|a, b| line_order(a, b)).copied()
}

/// Offsets from a girder line seen in the vertical scan.
pub fn girder_offsets<T: Scalar>(line: &LineEstimate<T>) -> Result<SurfaceEstimate<T>, PerceptionError> {
    if line.is_degenerate() {
        return Err(PerceptionError::DegenerateLine);
    }
    Ok(SurfaceEstimate {
        standoff: line.distance(),
        along_offset: line.upper()[1],
        line: *line,
        fresh: true,
        heading_error: None,
    })
}

/// Offsets from a column face line seen in the horizontal scan.
pub fn column_offsets<T: Scalar>(line: &LineEstimate<T>) -> Result<SurfaceEstimate<T>, PerceptionError> {
    if line.is_degenerate() {
        return Err(PerceptionError::DegenerateLine);
    }
    let (s, c) = line.theta.to_radians().sin_cos();
    let dir = if s > T::zero() || (s == T::zero() && c > T::zero()) {
        [c, s]
    } else {
        [-c, -s]
    };
    let [a, b] = line.endpoints;
    let mid = [(a[0] + b[0]) * T::lit(0.5), (a[1] + b[1]) * T::lit(0.5)];
    Ok(SurfaceEstimate {
        standoff: line.distance(),
        along_offset: mid[0] * dir[0] + mid[1] * dir[1],
        line: *line,
        fresh: true,
        heading_error: None,
    })
}

/// Bearing interval `[start, end]` in radians; wraps through zero when
/// `start > end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingSector {
    pub start: f64,
    pub end: f64,
}

impl BearingSector {
    pub const FULL: BearingSector = BearingSector { start: 0.0, end: TAU };

    pub fn from_degrees(start: f64, end: f64) -> Self {
        BearingSector {
            start: start.to_radians(),
            end: end.to_radians(),
        }
    }

    pub fn contains(&self, bearing: f64) -> bool {
        if self.start <= self.end {
            bearing >= self.start && bearing <= self.end
        } else {
            bearing >= self.start || bearing <= self.end
        }
    }
}

pub fn point_count_feature<T: Scalar>(s: &Scan<T>, sector: &BearingSector) -> usize {
    s.points.iter().filter(|p| sector.contains(p.bearing.as_f64())).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    pub hough: HoughParams,
    pub girder_window: CharacteristicWindow,
    pub column_window: CharacteristicWindow,
    /// Window for the horizontal line used to hold heading.
    pub heading_window: CharacteristicWindow,
    pub near: f64,
    pub far: f64,
    /// Push line ends out by half the inlier spacing before reading edge
    /// positions off them.
    pub edge_refinement: bool,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            hough: HoughParams::default(),
            girder_window: CharacteristicWindow::GIRDER,
            column_window: CharacteristicWindow::COLUMN,
            heading_window: CharacteristicWindow {
                slope_center: 90.0,
                slope_tolerance: 30.0,
                extent_min: 1.0,
                extent_max: 1.0e3,
            },
            near: 0.5,
            far: 25.0,
            edge_refinement: true,
        }
    }
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.hough.validate()?;
        self.girder_window.validate()?;
        self.column_window.validate()?;
        self.heading_window.validate()?;
        if !(self.near >= 0.0 && self.near < self.far) {
            return Err("perception needs 0 <= near < far".into());
        }
        Ok(())
    }

    pub fn lines<T: Scalar>(&self, s: &Scan<T>) -> Vec<LineEstimate<T>> {
        let pts = filter_points(s, T::lit(self.near), T::lit(self.far));
        hough_lines(&pts, &self.hough)
    }

    fn edge_pad<T: Scalar>(&self, l: &LineEstimate<T>) -> T {
        if self.edge_refinement {
            l.spacing() * T::lit(0.5)
        } else {
            T::zero()
        }
    }

    /// Yaw correction that brings the face line in the horizontal scan to 90°.
    pub fn heading_error<T: Scalar>(&self, horiz: &[LineEstimate<T>]) -> Option<T> {
        select_surface_line(horiz, &self.heading_window).map(|l| (l.theta - T::lit(90.0)).to_radians())
    }

    /// Girder standoff and depth below the top from the vertical scan.
    pub fn estimate_girder<T: Scalar>(
        &self,
        vert: &[LineEstimate<T>],
        horiz: &[LineEstimate<T>],
    ) -> Option<SurfaceEstimate<T>> {
        let line = select_surface_line(vert, &self.girder_window)?;
        let mut est = girder_offsets(&line).ok()?;
        est.along_offset += self.edge_pad(&line);
        est.heading_error = self.heading_error(horiz);
        Some(est)
    }

    /// Column standoff and lateral offset from the horizontal scan. Above the
    /// column top the horizontal plane misses the column; then the standoff
    /// comes from the vertical scan and the lateral offset reads as
    /// `along_fallback`.
    pub fn estimate_column<T: Scalar>(
        &self,
        horiz: &[LineEstimate<T>],
        vert: &[LineEstimate<T>],
        along_fallback: T,
    ) -> Option<SurfaceEstimate<T>> {
        let mut est = match select_surface_line(horiz, &self.column_window) {
            Some(line) => column_offsets(&line).ok()?,
            None => {
                let line = self.lowest_vertical(vert)?;
                let mut e = column_offsets(&line).ok()?;
                e.along_offset = along_fallback;
                e
            }
        };
        est.heading_error = self.heading_error(horiz);
        Some(est)
    }

    /// Near-vertical line reaching lowest in the vertical scan.
    fn lowest_vertical<T: Scalar>(&self, vert: &[LineEstimate<T>]) -> Option<LineEstimate<T>> {
        let w = CharacteristicWindow {
            extent_max: f64::INFINITY,
            ..self.column_window
        };
        vert.iter()
            .filter(|l| w.matches(*l))
            .min_by(|a, b| {
                a.lower()[1]
                    .partial_cmp(&b.lower()[1])
                    .unwrap_or(Ordering::Equal)
                    .then(line_order(a, b))
            })
            .copied()
    }

    /// Height of the sensor above the lowest visible end of a near-vertical
    /// line in the vertical scan.
    pub fn height_above_base<T: Scalar>(&self, vert: &[LineEstimate<T>]) -> Option<T> {
        let line = self.lowest_vertical(vert)?;
        Some(-line.lower()[1] + self.edge_pad(&line))
    }

    /// True when the vertical scan shows a column face hanging below the
    /// girder face.
    pub fn column_below_girder<T: Scalar>(&self, vert: &[LineEstimate<T>]) -> bool {
        let Some(girder) = select_surface_line(vert, &self.girder_window) else {
            return false;
        };
        let w = CharacteristicWindow {
            extent_max: f64::INFINITY,
            ..self.column_window
        };
        let limit = girder.lower()[1] + T::lit(0.5);
        vert.iter()
            .filter(|l| **l != girder && w.matches(*l))
            .any(|l| l.upper()[1] < limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::lidar::{Pose, ScanPlane, ScanPoint};

    fn line(theta: f64, rho: f64, extent: f64, n: usize) -> LineEstimate<f64> {
        let a = theta.to_radians();
        let (nx, ny) = (-a.sin(), a.cos());
        let (dx, dy) = (a.cos(), a.sin());
        let e = |t: f64| [nx * rho + dx * t, ny * rho + dy * t];
        LineEstimate {
            theta,
            rho,
            extent,
            inlier_count: n,
            endpoints: [e(-extent / 2.0), e(extent / 2.0)],
        }
    }

    fn scan(points: Vec<(f64, f64)>) -> Scan<f64> {
        Scan {
            plane: ScanPlane::Horizontal,
            pose: Pose::new(Point3::zero(), 0.0),
            points: points
                .into_iter()
                .map(|(bearing, range)| ScanPoint { bearing, range })
                .collect(),
            timestamp: 0.0,
        }
    }

    #[test]
    fn filter_keeps_band() {
        let s = scan(vec![(0.0, 0.1), (0.5, 2.0), (1.0, 35.0)]);
        let pts = filter_points(&s, 0.3, 20.0);
        assert_eq!(pts.len(), 1);
        assert!((pts[0][0] - 2.0 * 0.5f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn window_wraps_mod_180() {
        let w = CharacteristicWindow {
            slope_center: 0.0,
            slope_tolerance: 15.0,
            extent_min: 1.0,
            extent_max: 6.0,
        };
        assert!(w.matches(&line(175.0, 1.0, 2.0, 10)));
        assert!(!w.matches(&line(20.0, 1.0, 2.0, 10)));
        assert!(!w.matches(&line(0.0, 1.0, 7.0, 10)));
    }

    #[test]
    fn selection_rules() {
        let w = CharacteristicWindow::GIRDER;
        assert!(select_surface_line::<f64>(&[], &w).is_none());
        let a = line(90.0, 5.0, 4.0, 30);
        let b = line(91.0, 4.0, 4.0, 30);
        let c = line(90.0, 3.0, 4.0, 20);
        assert_eq!(select_surface_line(&[a, b, c], &w), Some(b));
        assert_eq!(select_surface_line(&[c, b, a], &w), Some(b));
    }

    #[test]
    fn girder_offsets_setpoint_geometry() {
        let l: LineEstimate<f64> = LineEstimate {
            theta: 90.0,
            rho: -4.5,
            extent: 4.0,
            inlier_count: 40,
            endpoints: [[4.5, -1.5], [4.5, 2.5]],
        };
        let e = girder_offsets(&l).unwrap();
        assert!((e.standoff - 4.5).abs() < 1e-12);
        assert!((e.along_offset - 2.5).abs() < 1e-12);
        let level = LineEstimate {
            endpoints: [[4.5, -4.0], [4.5, 0.0]],
            ..l
        };
        assert_eq!(girder_offsets(&level).unwrap().along_offset, 0.0);
        let flat = LineEstimate { extent: 0.0, ..l };
        assert_eq!(girder_offsets(&flat), Err(PerceptionError::DegenerateLine));
    }

    #[test]
    fn column_offsets_sign() {
        let centered: LineEstimate<f64> = LineEstimate {
            theta: 90.0,
            rho: -4.5,
            extent: 3.0,
            inlier_count: 30,
            endpoints: [[4.5, -1.5], [4.5, 1.5]],
        };
        let e = column_offsets(&centered).unwrap();
        assert!((e.standoff - 4.5).abs() < 1e-12);
        assert!(e.along_offset.abs() < 1e-12);
        let shifted = LineEstimate {
            endpoints: [[4.5, -1.9], [4.5, 1.1]],
            ..centered
        };
        assert!((column_offsets(&shifted).unwrap().along_offset + 0.4).abs() < 1e-12);
    }

    #[test]
    fn sector_counts() {
        let s = scan(vec![(0.1, 1.0), (3.0, 1.0), (6.0, 1.0)]);
        assert_eq!(point_count_feature(&s, &BearingSector::FULL), 3);
        assert_eq!(point_count_feature(&s, &BearingSector::from_degrees(270.0, 90.0)), 2);
        assert_eq!(point_count_feature(&scan(vec![]), &BearingSector::FULL), 0);
    }
}
