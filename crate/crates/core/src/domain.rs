//! Domain files and built-in test domains.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundaryPartition, GeometryError, Point, Polygon};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("cannot read domain file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed domain file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("bad builtin parameters: {0}")]
    BadParameters(String),
}

/// On-disk domain description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFile {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_partition: Option<BoundaryPartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

/// A validated domain with its optional boundary partition.
#[derive(Debug, Clone)]
pub struct Domain {
    pub polygon: Polygon,
    pub partition: Option<BoundaryPartition>,
}

impl DomainFile {
    pub fn into_domain(self) -> Result<Domain, DomainError> {
        let raw: Vec<Point> = self.vertices.iter().map(|&v| Point::from(v)).collect();
        let polygon = Polygon::new(raw.clone())?;
        // a partition refers to edges of the input orientation
        let partition = match self.boundary_partition {
            None => None,
            Some(p) => {
                let p = if polygon.vertices()[..] != raw[..] { reverse_partition(&p, raw.len()) } else { p };
                p.validate(&polygon)?;
                Some(p)
            }
        };
        Ok(Domain { polygon, partition })
    }

    pub fn from_polygon(polygon: &Polygon) -> Self {
        Self {
            vertices: polygon.vertices().iter().map(|v| [v.x, v.y]).collect(),
            boundary_partition: None,
            metadata: None,
        }
    }
}

/// Partition of the same boundary after the vertex order was reversed.
fn reverse_partition(p: &BoundaryPartition, n: usize) -> BoundaryPartition {
    // input edge i (v_i -> v_{i+1}) becomes edge n - 2 - i (mod n), traversed backwards
    let arcs = p
        .arcs
        .iter()
        .map(|a| crate::geometry::BoundaryArc {
            edge_index: (2 * n - 2 - a.edge_index) % n,
            t_start: 1.0 - a.t_end,
            t_end: 1.0 - a.t_start,
            label: a.label,
        })
        .collect();
    BoundaryPartition { arcs }
}

pub fn load_domain(path: &Path) -> Result<Domain, DomainError> {
    let text = std::fs::read_to_string(path)?;
    let file: DomainFile = serde_json::from_str(&text)?;
    file.into_domain()
}

pub fn save_domain(path: &Path, file: &DomainFile) -> Result<(), DomainError> {
    let text = serde_json::to_string_pretty(file)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    UnitSquare,
    Rectangle { a: f64, b: f64 },
    /// Convex hull of two discs of radius `r`, total length `d`, `arc_n` chords per cap.
    Stadium { r: f64, d: f64, arc_n: usize },
    LShape,
}

pub fn make_builtin_domain(which: Builtin) -> Result<DomainFile, DomainError> {
    let (vertices, metadata) = match which {
        Builtin::UnitSquare => (rect(1.0, 1.0), serde_json::json!({ "name": "unit_square" })),
        Builtin::Rectangle { a, b } => {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(DomainError::BadParameters(format!("rectangle sides {a} x {b}")));
            }
            (rect(a, b), serde_json::json!({ "name": "rectangle", "a": a, "b": b }))
        }
        Builtin::Stadium { r, d, arc_n } => {
            if !(r > 0.0 && d > 2.0 * r && d.is_finite()) {
                return Err(DomainError::BadParameters(format!("stadium r = {r}, d = {d} needs d > 2r > 0")));
            }
            if arc_n < 16 {
                return Err(DomainError::BadParameters(format!("arc_n = {arc_n} is below 16")));
            }
            let c = d / 2.0 - r;
            let mut v = Vec::with_capacity(2 * (arc_n + 1));
            for (cx, start) in [(c, -PI / 2.0), (-c, PI / 2.0)] {
                for k in 0..=arc_n {
                    let th = start + PI * k as f64 / arc_n as f64;
                    v.push([cx + r * th.cos(), r * th.sin()]);
                }
            }
            let bound = r * (1.0 - (PI / arc_n as f64).cos());
            (v, serde_json::json!({ "name": "stadium", "r": r, "d": d, "arc_n": arc_n, "polygonalization_error": bound }))
        }
        Builtin::LShape => (
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]],
            serde_json::json!({ "name": "lshape" }),
        ),
    };
    let file = DomainFile { vertices, boundary_partition: None, metadata: Some(metadata) };
    file.clone().into_domain()?;
    Ok(file)
}

fn rect(a: f64, b: f64) -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]]
}

/// Validated polygon for a builtin.
pub fn builtin_polygon(which: Builtin) -> Result<Polygon, DomainError> {
    Ok(make_builtin_domain(which)?.into_domain()?.polygon)
}
