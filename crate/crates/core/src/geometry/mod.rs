//! Bridge world model: planar rectangular surfaces with their coverage nodes.
//!
//! World frame: `x` runs along the bridge, `z` is up. Side faces are viewed
//! from `-y`, so "right" in a side view is `+x`.

mod config;
mod point;

pub use config::{load_bridge, serialize_bridge};
pub use point::Point3;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Coplanarity tolerance for surface vertices, meters.
pub const COPLANAR_TOL: f64 = 1e-6;
/// Maximum distance of a coverage node from its surface plane, meters.
pub const NODE_PLANE_TOL: f64 = 0.5;
/// Adjacent surfaces must come closer than this (scaled) distance, meters.
pub const ADJACENCY_TOL: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("parse error{}: {message}", location(*.line, *.column))]
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error("invalid bridge model (surface {}): {invariant}", surface.map(String::from).unwrap_or_else(|| "-".into()))]
    Validation {
        surface: Option<char>,
        invariant: String,
    },
    #[error("degenerate leg on surface {0}: entry and exit coincide")]
    DegenerateLeg(char),
    #[error("point is not a coverage node of surface {0}")]
    NotSurfaceNode(char),
}

fn location(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        (Some(l), None) => format!(" at line {l}"),
        _ => String::new(),
    }
}

impl BridgeError {
    fn invalid(surface: Option<char>, invariant: impl Into<String>) -> Self {
        BridgeError::Validation {
            surface,
            invariant: invariant.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Girder,
    Column,
    Top,
    Bottom,
}

/// Local navigation routines: girder right/left, column up/down,
/// bottom right/left, top right/left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoutineKind {
    GR,
    GL,
    CU,
    CD,
    BR,
    BL,
    TR,
    TL,
}

impl RoutineKind {
    pub const ALL: [RoutineKind; 8] = [
        RoutineKind::GR,
        RoutineKind::GL,
        RoutineKind::CU,
        RoutineKind::CD,
        RoutineKind::BR,
        RoutineKind::BL,
        RoutineKind::TR,
        RoutineKind::TL,
    ];

    /// The routine flying the same surface in the other direction.
    pub fn opposite(self) -> Self {
        use RoutineKind::*;
        match self {
            GR => GL,
            GL => GR,
            CU => CD,
            CD => CU,
            BR => BL,
            BL => BR,
            TR => TL,
            TL => TR,
        }
    }

    pub fn surface_kind(self) -> SurfaceKind {
        use RoutineKind::*;
        match self {
            GR | GL => SurfaceKind::Girder,
            CU | CD => SurfaceKind::Column,
            BR | BL => SurfaceKind::Bottom,
            TR | TL => SurfaceKind::Top,
        }
    }

    pub fn as_str(self) -> &'static str {
        use RoutineKind::*;
        match self {
            GR => "GR",
            GL => "GL",
            CU => "CU",
            CD => "CD",
            BR => "BR",
            BL => "BL",
            TR => "TR",
            TL => "TL",
        }
    }
}

impl fmt::Display for RoutineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoutineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoutineKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown routine `{s}`"))
    }
}

/// One planar rectangle of the bridge with its two coverage nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePolygon<T: Scalar = f64> {
    pub id: char,
    pub kind: SurfaceKind,
    /// Corners in order; the right-hand normal of (v1 - v0) x (v3 - v0)
    /// points away from the structure.
    pub vertices: [Point3<T>; 4],
    pub node_a: Point3<T>,
    pub node_b: Point3<T>,
    pub plane_normal: Point3<T>,
}

impl<T: Scalar> SurfacePolygon<T> {
    /// Builds a surface and checks every per-surface invariant.
    pub fn new(
        id: char,
        kind: SurfaceKind,
        vertices: [Point3<T>; 4],
        node_a: Point3<T>,
        node_b: Point3<T>,
    ) -> Result<Self, BridgeError> {
        if !vertices.iter().chain([&node_a, &node_b]).all(Point3::is_finite) {
            return Err(BridgeError::invalid(Some(id), "coordinates must be finite"));
        }
        let e1 = vertices[1] - vertices[0];
        let e2 = vertices[3] - vertices[0];
        let n = e1.cross(&e2);
        let len = n.norm();
        if len <= T::epsilon() {
            return Err(BridgeError::invalid(Some(id), "degenerate rectangle"));
        }
        let plane_normal = n / len;
        let tol = T::lit(COPLANAR_TOL);
        let scale = T::one().max(e1.norm()).max(e2.norm());
        for v in &vertices {
            if plane_normal.dot(&(*v - vertices[0])).abs() > tol {
                return Err(BridgeError::invalid(Some(id), "vertices are not coplanar"));
            }
        }
        if e1.dot(&e2).abs() > tol * scale * scale
            || (vertices[0] + vertices[2] - vertices[1] - vertices[3]).norm() > tol * scale
        {
            return Err(BridgeError::invalid(Some(id), "vertices do not form a rectangle"));
        }
        if node_a == node_b {
            return Err(BridgeError::invalid(Some(id), "node_a and node_b coincide"));
        }
        let plane_tol = T::lit(NODE_PLANE_TOL);
        for node in [&node_a, &node_b] {
            if plane_normal.dot(&(*node - vertices[0])).abs() > plane_tol {
                return Err(BridgeError::invalid(
                    Some(id),
                    "coverage node farther than 0.5 m from the surface plane",
                ));
            }
        }
        let d = node_b - node_a;
        let primary_ok = match kind {
            SurfaceKind::Column => d.z.abs() >= d.x.abs() && d.z.abs() >= d.y.abs(),
            _ => d.x.abs() >= d.z.abs() && d.x.abs() >= d.y.abs(),
        };
        if !primary_ok {
            return Err(BridgeError::invalid(
                Some(id),
                match kind {
                    SurfaceKind::Column => "column nodes must differ primarily along z",
                    _ => "nodes must differ primarily along the longitudinal axis",
                },
            ));
        }
        Ok(SurfacePolygon {
            id,
            kind,
            vertices,
            node_a,
            node_b,
            plane_normal,
        })
    }

    /// Partner of a coverage node, or `None` if `p` is not one of the two nodes.
    pub fn partner(&self, p: &Point3<T>) -> Option<Point3<T>> {
        if *p == self.node_a {
            Some(self.node_b)
        } else if *p == self.node_b {
            Some(self.node_a)
        } else {
            None
        }
    }

    pub fn min_z(&self) -> T {
        self.vertices.iter().map(|v| v.z).fold(T::infinity(), T::min)
    }

    pub fn max_z(&self) -> T {
        self.vertices.iter().map(|v| v.z).fold(T::neg_infinity(), T::max)
    }

    pub fn min_x(&self) -> T {
        self.vertices.iter().map(|v| v.x).fold(T::infinity(), T::min)
    }

    pub fn max_x(&self) -> T {
        self.vertices.iter().map(|v| v.x).fold(T::neg_infinity(), T::max)
    }

    /// Signed distance of `p` from the surface plane, positive on the normal side.
    pub fn plane_distance(&self, p: &Point3<T>) -> T {
        self.plane_normal.dot(&(*p - self.vertices[0]))
    }

    pub fn cast<U: Scalar>(&self) -> SurfacePolygon<U> {
        SurfacePolygon {
            id: self.id,
            kind: self.kind,
            vertices: self.vertices.map(|v| v.cast()),
            node_a: self.node_a.cast(),
            node_b: self.node_b.cast(),
            plane_normal: self.plane_normal.cast(),
        }
    }
}

/// Validated set of bridge surfaces plus declared adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeModel<T: Scalar = f64> {
    pub surfaces: Vec<SurfacePolygon<T>>,
    /// Unordered pairs stored with the smaller id first.
    pub adjacency: BTreeSet<(char, char)>,
    /// Meters per configuration unit.
    pub distance_scale: T,
}

impl<T: Scalar> BridgeModel<T> {
    pub fn new(
        surfaces: Vec<SurfacePolygon<T>>,
        adjacency: impl IntoIterator<Item = (char, char)>,
        distance_scale: T,
    ) -> Result<Self, BridgeError> {
        if !(distance_scale.is_finite() && distance_scale > T::zero()) {
            return Err(BridgeError::invalid(None, "distance_scale must be positive"));
        }
        let mut seen = BTreeSet::new();
        for s in &surfaces {
            if !seen.insert(s.id) {
                return Err(BridgeError::invalid(Some(s.id), "duplicate surface id"));
            }
        }
        let mut pairs = BTreeSet::new();
        for (a, b) in adjacency {
            if a == b {
                return Err(BridgeError::invalid(Some(a), "surface declared adjacent to itself"));
            }
            for id in [a, b] {
                if !seen.contains(&id) {
                    return Err(BridgeError::invalid(Some(id), "adjacency names an unknown surface"));
                }
            }
            pairs.insert((a.min(b), a.max(b)));
        }
        let model = BridgeModel {
            surfaces,
            adjacency: pairs,
            distance_scale,
        };
        let tol = T::lit(ADJACENCY_TOL);
        let m = &model;
        for &(a, b) in &model.adjacency {
            let sa = model.surface(a).expect("checked above");
            let sb = model.surface(b).expect("checked above");
            let closest = sa
                .vertices
                .iter()
                .flat_map(|p| sb.vertices.iter().map(move |q| m.node_distance(p, q)))
                .fold(T::infinity(), T::min);
            if closest >= tol {
                return Err(BridgeError::invalid(
                    Some(a),
                    format!("adjacent surfaces {a} and {b} are not within 1.0 m of each other"),
                ));
            }
        }
        Ok(model)
    }

    pub fn surface(&self, id: char) -> Option<&SurfacePolygon<T>> {
        self.surfaces.iter().find(|s| s.id == id)
    }

    pub fn surface_index(&self, id: char) -> Option<usize> {
        self.surfaces.iter().position(|s| s.id == id)
    }

    pub fn are_adjacent(&self, a: char, b: char) -> bool {
        self.adjacency.contains(&(a.min(b), a.max(b)))
    }

    pub fn node_count(&self) -> usize {
        2 * self.surfaces.len()
    }

    /// Euclidean distance between two points, in meters after scaling.
    pub fn node_distance(&self, p: &Point3<T>, q: &Point3<T>) -> T {
        node_distance(self, p, q)
    }

    pub fn cast<U: Scalar>(&self) -> BridgeModel<U> {
        BridgeModel {
            surfaces: self.surfaces.iter().map(SurfacePolygon::cast).collect(),
            adjacency: self.adjacency.clone(),
            distance_scale: U::lit(self.distance_scale.as_f64()),
        }
    }

    /// Same model with every coordinate multiplied by `k`.
    pub fn scaled(&self, k: T) -> Self {
        let surfaces = self
            .surfaces
            .iter()
            .map(|s| SurfacePolygon {
                vertices: s.vertices.map(|v| v * k),
                node_a: s.node_a * k,
                node_b: s.node_b * k,
                ..s.clone()
            })
            .collect();
        BridgeModel {
            surfaces,
            adjacency: self.adjacency.clone(),
            distance_scale: self.distance_scale,
        }
    }
}

/// Scaled 3D Euclidean distance between two node positions.
pub fn node_distance<T: Scalar>(m: &BridgeModel<T>, p: &Point3<T>, q: &Point3<T>) -> T {
    (*p - *q).norm() * m.distance_scale
}

/// Routine that covers `s` when entering at `entry` and leaving at `exit`.
pub fn routine_for_leg<T: Scalar>(
    s: &SurfacePolygon<T>,
    entry: &Point3<T>,
    exit: &Point3<T>,
) -> Result<RoutineKind, BridgeError> {
    if entry == exit {
        return Err(BridgeError::DegenerateLeg(s.id));
    }
    if s.partner(entry) != Some(*exit) {
        return Err(BridgeError::NotSurfaceNode(s.id));
    }
    let forward = exit.x > entry.x;
    Ok(match s.kind {
        SurfaceKind::Column if exit.z > entry.z => RoutineKind::CU,
        SurfaceKind::Column => RoutineKind::CD,
        SurfaceKind::Girder if forward => RoutineKind::GR,
        SurfaceKind::Girder => RoutineKind::GL,
        SurfaceKind::Top if forward => RoutineKind::TR,
        SurfaceKind::Top => RoutineKind::TL,
        SurfaceKind::Bottom if forward => RoutineKind::BR,
        SurfaceKind::Bottom => RoutineKind::BL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3<f64> {
        Point3::new(x, y, z)
    }

    fn girder(id: char, x0: f64, x1: f64) -> SurfacePolygon<f64> {
        SurfacePolygon::new(
            id,
            SurfaceKind::Girder,
            [p(x0, 0., 16.), p(x1, 0., 16.), p(x1, 0., 20.), p(x0, 0., 20.)],
            p(x0, 0., 17.5),
            p(x1, 0., 17.5),
        )
        .unwrap()
    }

    fn column(id: char, x: f64) -> SurfacePolygon<f64> {
        SurfacePolygon::new(
            id,
            SurfaceKind::Column,
            [
                p(x - 0.8, 0.5, 0.),
                p(x + 0.8, 0.5, 0.),
                p(x + 0.8, 0.5, 16.),
                p(x - 0.8, 0.5, 16.),
            ],
            p(x, 0.5, 3.),
            p(x, 0.5, 16.),
        )
        .unwrap()
    }

    #[test]
    fn normal_points_out_of_the_face() {
        let g = girder('B', 0., 20.);
        assert!((g.plane_normal - p(0., -1., 0.)).norm() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let m = BridgeModel::new(vec![girder('B', 0., 20.)], [], 1.0).unwrap();
        assert_eq!(m.node_distance(&p(1., 2., 3.), &p(1., 2., 3.)), 0.0);
        assert_eq!(m.node_distance(&p(0., 0., 0.), &p(3., 4., 0.)), 5.0);
        let m = BridgeModel::new(vec![girder('B', 0., 20.)], [], 2.5).unwrap();
        assert_eq!(m.node_distance(&p(0., 0., 0.), &p(1., 0., 0.)), 2.5);
    }

    #[test]
    fn routine_directions() {
        let c = column('K', 100.);
        assert_eq!(routine_for_leg(&c, &c.node_a, &c.node_b).unwrap(), RoutineKind::CU);
        assert_eq!(routine_for_leg(&c, &c.node_b, &c.node_a).unwrap(), RoutineKind::CD);
        let g = girder('J', 80., 100.);
        assert_eq!(routine_for_leg(&g, &g.node_b, &g.node_a).unwrap(), RoutineKind::GL);
        assert_eq!(routine_for_leg(&g, &g.node_a, &g.node_b).unwrap(), RoutineKind::GR);
        assert_eq!(
            routine_for_leg(&g, &g.node_a, &g.node_a),
            Err(BridgeError::DegenerateLeg('J'))
        );
        assert_eq!(
            routine_for_leg(&g, &p(1., 1., 1.), &g.node_a),
            Err(BridgeError::NotSurfaceNode('J'))
        );
    }

    #[test]
    fn top_and_bottom_routines() {
        let mk = |kind| {
            SurfacePolygon::new(
                'T',
                kind,
                [p(0., 0., 20.), p(0., -10., 20.), p(20., -10., 20.), p(20., 0., 20.)],
                p(0., -5., 20.),
                p(20., -5., 20.),
            )
            .unwrap()
        };
        let top = mk(SurfaceKind::Top);
        assert_eq!(routine_for_leg(&top, &top.node_a, &top.node_b).unwrap(), RoutineKind::TR);
        let bottom = mk(SurfaceKind::Bottom);
        assert_eq!(routine_for_leg(&bottom, &bottom.node_b, &bottom.node_a).unwrap(), RoutineKind::BL);
    }

    #[test]
    fn opposite_is_an_involution() {
        for k in RoutineKind::ALL {
            assert_ne!(k.opposite(), k);
            assert_eq!(k.opposite().opposite(), k);
            assert_eq!(k.opposite().surface_kind(), k.surface_kind());
            assert_eq!(k.as_str().parse::<RoutineKind>().unwrap(), k);
        }
    }

    #[test]
    fn rejects_bad_surfaces() {
        let err = SurfacePolygon::new(
            'X',
            SurfaceKind::Girder,
            [p(0., 0., 0.), p(1., 0., 0.), p(1., 0.1, 1.), p(0., 0., 1.)],
            p(0., 0., 0.5),
            p(1., 0., 0.5),
        )
        .unwrap_err();
        assert!(matches!(err, BridgeError::Validation { surface: Some('X'), .. }));

        let err = SurfacePolygon::new(
            'C',
            SurfaceKind::Column,
            [p(0., 0., 0.), p(2., 0., 0.), p(2., 0., 10.), p(0., 0., 10.)],
            p(0., 0., 1.),
            p(2., 0., 1.),
        )
        .unwrap_err();
        assert!(err.to_string().contains("along z"));

        let err = SurfacePolygon::new(
            'C',
            SurfaceKind::Column,
            [p(0., 0., 0.), p(2., 0., 0.), p(2., 0., 10.), p(0., 0., 10.)],
            p(1., -2., 1.),
            p(1., 0., 9.),
        )
        .unwrap_err();
        assert!(err.to_string().contains("0.5 m"));
    }

    #[test]
    fn model_invariants() {
        let dup = BridgeModel::new(vec![girder('B', 0., 20.), girder('B', 20., 40.)], [], 1.0);
        assert!(matches!(dup, Err(BridgeError::Validation { surface: Some('B'), .. })));

        let far = BridgeModel::new(vec![girder('B', 0., 20.), column('C', 40.)], [('B', 'C')], 1.0);
        assert!(far.unwrap_err().to_string().contains("not within 1.0 m"));

        let ok = BridgeModel::new(vec![girder('B', 0., 20.), column('C', 20.)], [('C', 'B')], 1.0)
            .unwrap();
        assert!(ok.are_adjacent('B', 'C') && ok.are_adjacent('C', 'B'));
        assert_eq!(ok.node_count(), 4);
    }
}
