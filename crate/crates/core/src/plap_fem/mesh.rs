use std::io::Write;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::FemError;
use crate::geometry::{segment_distance, BoundarySet, Point, Polygon};

/// Conforming triangulation of a polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary segments as (node pair, polygon edge).
    pub boundary_edges: Vec<([usize; 2], usize)>,
    /// Target edge length.
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub min_area: f64,
}

const MIN_ANGLE_DEG: f64 = 20.0;
const MAX_EDGE_FACTOR: f64 = 1.5;

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * (b - a).cross(c - a)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn quality(&self) -> MeshQuality {
        let mut q = MeshQuality { min_angle_deg: 180.0, max_edge: 0.0, min_area: f64::INFINITY };
        for (t, tri) in self.triangles.iter().enumerate() {
            let p = tri.map(|i| self.nodes[i]);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (u, v) = (b - a, c - a);
                let ang = u.cross(v).abs().atan2(u.dot(v)).to_degrees();
                q.min_angle_deg = q.min_angle_deg.min(ang);
                q.max_edge = q.max_edge.max(a.dist(b));
            }
            q.min_area = q.min_area.min(self.triangle_area(t));
        }
        q
    }

    /// Whether node `i` lies on the boundary.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.nodes.len()];
        for (e, _) in &self.boundary_edges {
            on[e[0]] = true;
            on[e[1]] = true;
        }
        on
    }

    /// Plain-text dump: a header line, then `nodes`, `triangles` and
    /// `boundary_edges` sections, each introduced by its name and count.
    pub fn write_text(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# infspec mesh v1 h={}", self.h)?;
        writeln!(out, "nodes {}", self.nodes.len())?;
        for p in &self.nodes {
            writeln!(out, "{:.17e} {:.17e}", p.x, p.y)?;
        }
        writeln!(out, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "boundary_edges {}", self.boundary_edges.len())?;
        for (e, k) in &self.boundary_edges {
            writeln!(out, "{} {} {}", e[0], e[1], k)?;
        }
        Ok(())
    }
}

/// Delaunay-refined triangulation with edges near `h` and angles of at least 20 degrees.
pub fn triangulate(domain: &Polygon, h: f64) -> Result<Mesh, FemError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FemError::MeshFailure(format!("target size {h} is not positive")));
    }
    let shortest = domain.min_edge_length();
    if h >= shortest {
        return Err(FemError::MeshFailure(format!("target size {h} is not below the shortest edge {shortest}")));
    }
    let mut area = 0.5 * h * h;
    let mut last = String::new();
    for _ in 0..6 {
        let mesh = build(domain, h, area)?;
        let q = mesh.quality();
        if q.min_angle_deg >= MIN_ANGLE_DEG && q.max_edge <= MAX_EDGE_FACTOR * h && q.min_area > 0.0 {
            return Ok(mesh);
        }
        last = format!("min angle {:.2} deg, max edge {:.4} for h = {h}", q.min_angle_deg, q.max_edge);
        area *= 0.7;
    }
    Err(FemError::MeshFailure(last))
}

fn build(domain: &Polygon, h: f64, max_area: f64) -> Result<Mesh, FemError> {
    let mut pts: Vec<Point> = Vec::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    for (a, b) in domain.edges() {
        let n = (a.dist(b) / h).ceil().max(1.0) as usize;
        for k in 0..n {
            pts.push(a.lerp(b, k as f64 / n as f64));
        }
    }
    let nb = pts.len();
    for i in 0..nb {
        edges.push([i, (i + 1) % nb]);
    }
    // triangular lattice centered at the centroid
    let boundary = BoundarySet::full(domain);
    let c = domain.centroid();
    let (lo, hi) = domain.bbox();
    let dy = h * 3f64.sqrt() / 2.0;
    let j0 = ((lo.y - c.y) / dy).floor() as i64;
    let j1 = ((hi.y - c.y) / dy).ceil() as i64;
    let i0 = ((lo.x - c.x) / h).floor() as i64 - 1;
    let i1 = ((hi.x - c.x) / h).ceil() as i64 + 1;
    for j in j0..=j1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 } else { 0.0 };
        for i in i0..=i1 {
            let p = Point::new(c.x + (i as f64 + shift) * h, c.y + j as f64 * dy);
            if domain.contains_strict(p) && boundary.distance(p) >= 0.5 * h {
                pts.push(p);
            }
        }
    }
    let verts: Vec<Point2<f64>> = pts.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, edges)
        .map_err(|e| FemError::MeshFailure(format!("triangulation failed: {e:?}")))?;
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(max_area)
        .with_max_additional_vertices(20 * cdt.num_vertices() + 1000);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(FemError::MeshFailure("refinement ran out of vertices".into()));
    }

    let excluded: std::collections::HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();
    let raw: Vec<Point> = cdt.vertices().map(|v| Point::new(v.position().x, v.position().y)).collect();
    // order nodes along the longer bounding-box axis to keep the matrix bandwidth small
    let along_x = hi.x - lo.x >= hi.y - lo.y;
    let key = |p: Point| if along_x { (p.x, p.y) } else { (p.y, p.x) };
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(raw[a]), key(raw[b]));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut new_index = vec![usize::MAX; raw.len()];
    let mut nodes = Vec::with_capacity(raw.len());
    let mut used = vec![false; raw.len()];

    let mut triangles_raw = Vec::new();
    for f in cdt.inner_faces() {
        if excluded.contains(&f.fix().index()) {
            continue;
        }
        let vs = f.vertices().map(|v| v.fix().index());
        let p = vs.map(|i| raw[i]);
        let centroid = (p[0] + p[1] + p[2]) * (1.0 / 3.0);
        if !domain.contains_strict(centroid) {
            continue;
        }
        let mut t = vs;
        if (p[1] - p[0]).cross(p[2] - p[0]) < 0.0 {
            t.swap(1, 2);
        }
        for &i in &t {
            used[i] = true;
        }
        triangles_raw.push(t);
    }
    for &i in &order {
        if used[i] {
            new_index[i] = nodes.len();
            nodes.push(raw[i]);
        }
    }
    let triangles: Vec<[usize; 3]> = triangles_raw.iter().map(|t| t.map(|i| new_index[i])).collect();

    let tol = 1e-9 * domain.scale();
    let mut boundary_edges = Vec::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [a, b] = e.vertices().map(|v| v.fix().index());
        let (pa, pb) = (raw[a], raw[b]);
        let owner = (0..domain.n_vertices()).find(|&k| {
            let (u, v) = domain.edge(k);
            segment_distance(pa, u, v) <= tol && segment_distance(pb, u, v) <= tol
        });
        let Some(k) = owner else {
            return Err(FemError::MeshFailure("constraint edge off the boundary".into()));
        };
        // orient along the polygon edge
        let (u, v) = domain.edge(k);
        let pair = if (pb - pa).dot(v - u) >= 0.0 { [a, b] } else { [b, a] };
        boundary_edges.push((pair.map(|i| new_index[i]), k));
    }
    boundary_edges.sort_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)));
    Ok(Mesh { nodes, triangles, boundary_edges, h })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn square_mesh_quality() {
        let sq = poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let m = triangulate(&sq, 0.1).unwrap();
        let q = m.quality();
        assert!((150..=400).contains(&m.triangles.len()), "{}", m.triangles.len());
        assert!(q.min_angle_deg >= 20.0 && q.max_edge <= 0.15, "{q:?}");
        assert!((m.area() - 1.0).abs() < 1e-12);
        let len: f64 = m.boundary_edges.iter().map(|(e, _)| m.nodes[e[0]].dist(m.nodes[e[1]])).sum();
        assert!((len - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lshape_boundary_is_exact() {
        let l = poly(&[(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]);
        let m = triangulate(&l, 0.05).unwrap();
        let mut per_edge = vec![0.0; 6];
        for (e, k) in &m.boundary_edges {
            let (a, b) = (m.nodes[e[0]], m.nodes[e[1]]);
            let (u, v) = l.edge(*k);
            assert!(segment_distance(a, u, v) < 1e-12 && segment_distance(b, u, v) < 1e-12);
            per_edge[*k] += a.dist(b);
        }
        for k in 0..6 {
            let (u, v) = l.edge(k);
            assert!((per_edge[k] - u.dist(v)).abs() < 1e-12);
        }
        assert!((m.area() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_coarse_size() {
        let sq = poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        assert!(matches!(triangulate(&sq, 1.0), Err(FemError::MeshFailure(_))));
        assert!(matches!(triangulate(&sq, -0.1), Err(FemError::MeshFailure(_))));
    }

    #[test]
    fn dump_has_sections() {
        let sq = poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let m = triangulate(&sq, 0.25).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# infspec mesh v1"));
        assert!(text.contains(&format!("nodes {}", m.nodes.len())));
        assert!(text.contains(&format!("boundary_edges {}", m.boundary_edges.len())));
    }
}
