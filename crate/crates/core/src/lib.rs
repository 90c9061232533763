//! Coverage planning and lidar-driven navigation for box girder bridge
//! inspection with a UAV.
//!
//! * [`geometry`] – bridge surfaces, coverage nodes, configuration format.
//! * [`gtsp`] – planning the surface visiting order as a Generalized TSP.
//! * [`lidar`] – synthetic 2D lidar scans by ray casting.
//! * [`perception`] – Hough line extraction and surface offsets.
//! * [`control`] – per-routine PID velocity control.
//! * [`supervisor`] – routine switching from scan features.
//! * [`sim`] – closed-loop mission simulation, logs and plots.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar type for the common cases.

pub mod control;
pub mod geometry;
pub mod gtsp;
pub mod lidar;
pub mod perception;
pub mod scalar;
pub mod sim;
pub mod supervisor;

pub use scalar::Scalar;

pub type Point3d = geometry::Point3<f64>;
pub type Point3f = geometry::Point3<f32>;
pub type Bridge = geometry::BridgeModel<f64>;
pub type BridgeF32 = geometry::BridgeModel<f32>;
pub type Instance = gtsp::GtspInstance<f64>;
pub type InstanceF32 = gtsp::GtspInstance<f32>;
pub type Plan = gtsp::InspectionPlan<f64>;
pub type PlanF32 = gtsp::InspectionPlan<f32>;
pub type TourD = gtsp::Tour<f64>;
pub type ScanD = lidar::Scan<f64>;
pub type ScanF32 = lidar::Scan<f32>;
pub type LineD = perception::LineEstimate<f64>;
pub type LineF32 = perception::LineEstimate<f32>;
pub type MissionLog = sim::TrajectoryLog<f64>;
