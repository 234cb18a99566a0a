use serde::{Deserialize, Serialize};

use super::{project_on_segment, GeometryError, Point, Polygon};

/// Boundary condition carried by a piece of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcLabel {
    /// Dirichlet part.
    Gamma1,
    /// Robin part.
    Gamma2,
}

/// Sub-interval `[t_start, t_end]` of polygon edge `edge_index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    #[serde(rename = "edge")]
    pub edge_index: usize,
    #[serde(rename = "t0")]
    pub t_start: f64,
    #[serde(rename = "t1")]
    pub t_end: f64,
    pub label: ArcLabel,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundaryPartition {
    pub arcs: Vec<BoundaryArc>,
}

impl BoundaryPartition {
    /// Every edge carries the same label.
    pub fn uniform(n_edges: usize, label: ArcLabel) -> Self {
        Self::from_edge_labels(&vec![label; n_edges])
    }

    pub fn from_edge_labels(labels: &[ArcLabel]) -> Self {
        let arcs = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| BoundaryArc { edge_index: i, t_start: 0.0, t_end: 1.0, label })
            .collect();
        Self { arcs }
    }

    /// Checks that the arcs tile every edge of `domain` exactly once.
    pub fn validate(&self, domain: &Polygon) -> Result<(), GeometryError> {
        let n = domain.n_vertices();
        let mut per_edge: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for (k, arc) in self.arcs.iter().enumerate() {
            if arc.edge_index >= n {
                return Err(GeometryError::InvalidPartition(format!(
                    "arc {k} references edge {} of a {n}-gon",
                    arc.edge_index
                )));
            }
            if !(0.0 <= arc.t_start && arc.t_start < arc.t_end && arc.t_end <= 1.0) {
                return Err(GeometryError::InvalidPartition(format!(
                    "arc {k} has parameters [{}, {}]",
                    arc.t_start, arc.t_end
                )));
            }
            per_edge[arc.edge_index].push((arc.t_start, arc.t_end));
        }
        const TOL: f64 = 1e-12;
        for (e, spans) in per_edge.iter_mut().enumerate() {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut reach = 0.0;
            for &(a, b) in spans.iter() {
                if (a - reach).abs() > TOL {
                    return Err(GeometryError::InvalidPartition(format!(
                        "edge {e} has a gap or overlap at t = {reach}"
                    )));
                }
                reach = b;
            }
            if (reach - 1.0).abs() > TOL {
                return Err(GeometryError::InvalidPartition(format!(
                    "edge {e} is covered only up to t = {reach}"
                )));
            }
        }
        Ok(())
    }

    pub fn has_label(&self, label: ArcLabel) -> bool {
        self.arcs.iter().any(|a| a.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceTarget {
    FullBoundary,
    Gamma1,
    Gamma2,
}

impl DistanceTarget {
    fn label(self) -> Option<ArcLabel> {
        match self {
            DistanceTarget::FullBoundary => None,
            DistanceTarget::Gamma1 => Some(ArcLabel::Gamma1),
            DistanceTarget::Gamma2 => Some(ArcLabel::Gamma2),
        }
    }
}

/// Which part of the boundary a distance is measured to.
///
/// Without a partition the whole boundary is Robin, so `Gamma1` is empty.
/// An empty target yields `+inf` unless `infinite_when_empty` is cleared.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceQuery {
    pub target: DistanceTarget,
    pub partition: Option<BoundaryPartition>,
    pub infinite_when_empty: bool,
}

impl DistanceQuery {
    pub fn full() -> Self {
        Self { target: DistanceTarget::FullBoundary, partition: None, infinite_when_empty: true }
    }

    pub fn part(target: DistanceTarget, partition: BoundaryPartition) -> Self {
        Self { target, partition: Some(partition), infinite_when_empty: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub value: f64,
    /// Set when the query point was outside the closed domain.
    pub outside: bool,
}

/// Exact Euclidean distance from `x` to the targeted boundary set.
pub fn distance_to_boundary(
    domain: &Polygon,
    x: Point,
    query: &DistanceQuery,
) -> Result<Distance, GeometryError> {
    let set = BoundarySet::for_query(domain, query)?;
    if set.is_empty() && !query.infinite_when_empty {
        return Err(GeometryError::EmptyTarget);
    }
    Ok(Distance { value: set.distance(x), outside: !domain.contains(x) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub a: Point,
    pub b: Point,
    /// Polygon edge this piece lies on.
    pub edge: usize,
    /// Inward unit normal of that edge.
    pub normal: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestFeature {
    pub distance: f64,
    pub point: Point,
    pub segment: usize,
    /// Projection parameter along the segment.
    pub t: f64,
}

/// A set of boundary pieces with fast distance queries.
#[derive(Debug, Clone)]
pub struct BoundarySet {
    segments: Vec<BoundarySegment>,
}

impl BoundarySet {
    pub fn full(domain: &Polygon) -> Self {
        let segments = (0..domain.n_vertices())
            .map(|i| {
                let (a, b) = domain.edge(i);
                BoundarySegment { a, b, edge: i, normal: domain.inward_normal(i) }
            })
            .collect();
        Self { segments }
    }

    /// Pieces carrying `label` in `partition`; an absent partition means all Robin.
    pub fn labelled(
        domain: &Polygon,
        partition: Option<&BoundaryPartition>,
        label: ArcLabel,
    ) -> Result<Self, GeometryError> {
        let Some(partition) = partition else {
            return Ok(if label == ArcLabel::Gamma2 {
                Self::full(domain)
            } else {
                Self { segments: Vec::new() }
            });
        };
        partition.validate(domain)?;
        let mut arcs: Vec<&BoundaryArc> = partition.arcs.iter().filter(|a| a.label == label).collect();
        arcs.sort_by(|p, q| p.edge_index.cmp(&q.edge_index).then(p.t_start.total_cmp(&q.t_start)));
        let segments = arcs
            .into_iter()
            .map(|arc| {
                let (a, b) = domain.edge(arc.edge_index);
                BoundarySegment {
                    a: a.lerp(b, arc.t_start),
                    b: a.lerp(b, arc.t_end),
                    edge: arc.edge_index,
                    normal: domain.inward_normal(arc.edge_index),
                }
            })
            .collect();
        Ok(Self { segments })
    }

    pub fn for_query(domain: &Polygon, query: &DistanceQuery) -> Result<Self, GeometryError> {
        match query.target.label() {
            None => Ok(Self::full(domain)),
            Some(label) => Self::labelled(domain, query.partition.as_ref(), label),
        }
    }

    pub fn segments(&self) -> &[BoundarySegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Distance to the set; `+inf` for an empty set.
    pub fn distance(&self, x: Point) -> f64 {
        let mut best2 = f64::INFINITY;
        for s in &self.segments {
            let ab = s.b - s.a;
            let ax = x - s.a;
            let len2 = ab.dot(ab);
            let t = if len2 > 0.0 { (ax.dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let d = ax - ab * t;
            best2 = best2.min(d.dot(d));
        }
        best2.sqrt()
    }

    pub fn nearest(&self, x: Point) -> Option<NearestFeature> {
        let mut best: Option<NearestFeature> = None;
        for (k, s) in self.segments.iter().enumerate() {
            let (p, t) = project_on_segment(x, s.a, s.b);
            let d = p.dist(x);
            if best.is_none_or(|b| d < b.distance) {
                best = Some(NearestFeature { distance: d, point: p, segment: k, t });
            }
        }
        best
    }

    /// Distance to segment `k` and its gradient in `x`.
    ///
    /// On the segment itself the gradient is taken to be the inward normal.
    pub fn segment_distance_grad(&self, k: usize, x: Point) -> (f64, Point) {
        let s = &self.segments[k];
        let (p, _) = project_on_segment(x, s.a, s.b);
        let v = x - p;
        let d = v.norm();
        if d <= 1e-14 * (1.0 + x.norm()) {
            (d, s.normal)
        } else {
            (d, v * (1.0 / d))
        }
    }

    /// Points along the set with arc-length gaps at most `spacing`, each with
    /// the inward normal of its edge. Piece endpoints are always included.
    pub fn samples(&self, spacing: f64) -> Vec<(Point, Point)> {
        let mut out: Vec<(Point, Point)> = Vec::new();
        for s in &self.segments {
            let len = s.a.dist(s.b);
            let pieces = ((len / spacing).ceil() as usize).max(1);
            for k in 0..=pieces {
                let p = if k == pieces { s.b } else { s.a.lerp(s.b, k as f64 / pieces as f64) };
                if out.last().is_some_and(|&(q, _)| q == p) {
                    continue;
                }
                out.push((p, s.normal));
            }
        }
        if out.len() > 1 && out.first().map(|f| f.0) == out.last().map(|l| l.0) {
            out.pop();
        }
        out
    }
}

/// Boundary sample points with gaps at most `spacing`, optionally restricted
/// to one label of a partition.
pub fn sample_boundary(
    domain: &Polygon,
    spacing: f64,
    restrict: Option<(&BoundaryPartition, ArcLabel)>,
) -> Result<Vec<Point>, GeometryError> {
    assert!(spacing > 0.0, "spacing must be positive");
    let set = match restrict {
        None => BoundarySet::full(domain),
        Some((partition, label)) => BoundarySet::labelled(domain, Some(partition), label)?,
    };
    if set.is_empty() {
        return Err(GeometryError::EmptyTarget);
    }
    Ok(set.samples(spacing).into_iter().map(|(p, _)| p).collect())
}
