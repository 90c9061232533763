//! Bridge configuration text format (TOML).

use serde::{Deserialize, Serialize};

use super::{BridgeError, BridgeModel, Point3, SurfaceKind, SurfacePolygon};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBridge {
    #[serde(default = "one")]
    distance_scale: f64,
    #[serde(default)]
    adjacency: Vec<[String; 2]>,
    #[serde(default, rename = "surface")]
    surfaces: Vec<RawSurface>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    id: String,
    kind: SurfaceKind,
    vertices: [[f64; 3]; 4],
    node_a: [f64; 3],
    node_b: [f64; 3],
}

fn one() -> f64 {
    1.0
}

/// Line and column (1-based) of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

pub(crate) fn toml_parse_error(text: &str, err: &toml::de::Error) -> BridgeError {
    let (line, column) = match err.span() {
        Some(span) => {
            let (l, c) = line_col(text, span.start);
            (Some(l), Some(c))
        }
        None => (None, None),
    };
    BridgeError::Parse {
        line,
        column,
        message: err.message().to_string(),
    }
}

fn single_char(id: &str) -> Result<char, BridgeError> {
    let mut chars = id.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(BridgeError::Validation {
            surface: None,
            invariant: format!("surface id `{id}` must be a single character"),
        }),
    }
}

/// Parses and validates a bridge configuration.
pub fn load_bridge<T: Scalar>(config_text: &str) -> Result<BridgeModel<T>, BridgeError> {
    let raw: RawBridge =
        toml::from_str(config_text).map_err(|e| toml_parse_error(config_text, &e))?;
    let pt = |a: [f64; 3]| Point3::new(T::lit(a[0]), T::lit(a[1]), T::lit(a[2]));
    let surfaces = raw
        .surfaces
        .into_iter()
        .map(|s| {
            SurfacePolygon::new(
                single_char(&s.id)?,
                s.kind,
                s.vertices.map(pt),
                pt(s.node_a),
                pt(s.node_b),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let adjacency = raw
        .adjacency
        .iter()
        .map(|[a, b]| Ok((single_char(a)?, single_char(b)?)))
        .collect::<Result<Vec<_>, BridgeError>>()?;
    BridgeModel::new(surfaces, adjacency, T::lit(raw.distance_scale))
}

/// Writes a model back to the configuration format.
pub fn serialize_bridge<T: Scalar>(m: &BridgeModel<T>) -> String {
    let arr = |p: &Point3<T>| [p.x.as_f64(), p.y.as_f64(), p.z.as_f64()];
    let raw = RawBridge {
        distance_scale: m.distance_scale.as_f64(),
        adjacency: m
            .adjacency
            .iter()
            .map(|&(a, b)| [a.to_string(), b.to_string()])
            .collect(),
        surfaces: m
            .surfaces
            .iter()
            .map(|s| RawSurface {
                id: s.id.to_string(),
                kind: s.kind,
                vertices: [
                    arr(&s.vertices[0]),
                    arr(&s.vertices[1]),
                    arr(&s.vertices[2]),
                    arr(&s.vertices[3]),
                ],
                node_a: arr(&s.node_a),
                node_b: arr(&s.node_b),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("bridge model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
[[surface]]
id = "B"
kind = "girder"
vertices = [[0, 0, 16], [20, 0, 16], [20, 0, 20], [0, 0, 20]]
node_a = [0, 0, 17.5]
node_b = [20, 0, 17.5]
"#;

    #[test]
    fn minimal_config() {
        let m: BridgeModel = load_bridge(SINGLE).unwrap();
        assert_eq!(m.surfaces.len(), 1);
        assert_eq!(m.distance_scale, 1.0);
        assert!(m.adjacency.is_empty());
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let text = format!("{SINGLE}{SINGLE}");
        let err = load_bridge::<f64>(&text).unwrap_err();
        assert_eq!(
            err,
            BridgeError::Validation {
                surface: Some('B'),
                invariant: "duplicate surface id".into()
            }
        );
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = SINGLE.replace("node_b", "colour = 3\nnode_b");
        match load_bridge::<f64>(&text).unwrap_err() {
            BridgeError::Parse { line, message, .. } => {
                assert_eq!(line, Some(7));
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multi_char_id_is_rejected() {
        let text = SINGLE.replace("id = \"B\"", "id = \"BB\"");
        assert!(load_bridge::<f64>(&text).unwrap_err().to_string().contains("single character"));
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
