use super::{BoundarySet, Point, Polygon};
use crate::optim::{
    maximize_multistart, MaxMinModel, MultiStartOptions, NelderMeadOptions, Piece, PolishOptions,
};

/// Largest inscribed disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inradius {
    pub r: f64,
    pub center: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameter {
    pub length: f64,
    pub pair: (Point, Point),
}

/// Relative geometric tolerance used for optimizer acceptance.
pub const TOL_GEOM_REL: f64 = 1e-9;

/// Half-plane constraints of edges near `x` that `x` currently satisfies,
/// written into coordinates `offset..offset + 2` of a `dim`-vector.
pub(crate) fn domain_constraints(
    domain: &Polygon,
    x: Point,
    margin: f64,
    offset: usize,
    dim: usize,
    out: &mut Vec<Piece>,
) {
    let tol = 1e-12 * domain.scale();
    for i in 0..domain.n_vertices() {
        let (a, b) = domain.edge(i);
        if super::segment_distance(x, a, b) > margin {
            continue;
        }
        let n = domain.inward_normal(i);
        let value = n.dot(x - a);
        if value < -tol {
            continue;
        }
        let mut grad = vec![0.0; dim];
        grad[offset] = n.x;
        grad[offset + 1] = n.y;
        out.push(Piece { value, grad });
    }
}

/// Grid over the bounding box (edges included) restricted to the closed domain.
pub(crate) fn domain_grid(domain: &Polygon, resolution: f64) -> Vec<Point> {
    let (lo, hi) = domain.bbox();
    let nx = (((hi.x - lo.x) / resolution).ceil() as usize).max(1);
    let ny = (((hi.y - lo.y) / resolution).ceil() as usize).max(1);
    let coord = |a: f64, b: f64, i: usize, n: usize| if i == n { b } else { a + (b - a) * (i as f64 / n as f64) };
    let mut pts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point::new(coord(lo.x, hi.x, i, nx), coord(lo.y, hi.y, j, ny));
            if domain.contains(p) {
                pts.push(p);
            }
        }
    }
    pts
}

struct InradiusModel<'a> {
    domain: &'a Polygon,
    boundary: BoundarySet,
}

impl MaxMinModel for InradiusModel<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let x = Point::new(z[0], z[1]);
        if self.domain.contains(x) {
            self.boundary.distance(x)
        } else {
            f64::NEG_INFINITY
        }
    }

    fn penalized(&self, z: &[f64]) -> f64 {
        let x = Point::new(z[0], z[1]);
        let d = self.boundary.distance(x);
        if self.domain.contains(x) {
            d
        } else {
            -d
        }
    }

    fn linearize(&self, z: &[f64], margin: f64, pieces: &mut Vec<Piece>, constraints: &mut Vec<Piece>) {
        let x = Point::new(z[0], z[1]);
        let d = self.boundary.distance(x);
        for k in 0..self.boundary.segments().len() {
            let (v, g) = self.boundary.segment_distance_grad(k, x);
            if v <= d + margin {
                pieces.push(Piece { value: v, grad: vec![g.x, g.y] });
            }
        }
        domain_constraints(self.domain, x, margin, 0, 2, constraints);
    }
}

/// Seeds for a 2-D search: the best-scoring grid points, kept apart.
pub(crate) fn spread_top_seeds(points: &[(Point, f64)], k: usize, separation: f64) -> Vec<Point> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].1.total_cmp(&points[a].1).then(points[a].0.lex_cmp(points[b].0)));
    let mut chosen: Vec<Point> = Vec::new();
    for i in order {
        let p = points[i].0;
        if chosen.iter().all(|c| c.dist(p) >= separation) {
            chosen.push(p);
            if chosen.len() == k {
                break;
            }
        }
    }
    chosen
}

/// Radius and center of the largest disc inside the polygon.
///
/// Ties (e.g. a rectangle's whole center segment) resolve to the
/// lexicographically smallest center among the optima found.
pub fn inradius(domain: &Polygon) -> Inradius {
    let d_e = euclidean_diameter(domain).length;
    let tol = TOL_GEOM_REL * d_e;
    let resolution = (domain.min_edge_length() / 8.0).max(d_e / 200.0);
    let boundary = BoundarySet::full(domain);
    let scored: Vec<(Point, f64)> =
        domain_grid(domain, resolution).into_iter().map(|p| (p, boundary.distance(p))).collect();
    let seeds: Vec<Vec<f64>> = spread_top_seeds(&scored, 8, 4.0 * resolution)
        .into_iter()
        .map(|p| vec![p.x, p.y])
        .collect();
    let model = InradiusModel { domain, boundary };
    let opts = MultiStartOptions {
        nm_step: resolution,
        nm: NelderMeadOptions { max_evals: 3000, x_tol: tol, restarts: 3 },
        polish: PolishOptions { initial_radius: resolution, min_radius: 1e-3 * tol, max_iters: 400 },
    };
    let best = maximize_multistart(&model, &seeds, opts);
    Inradius { r: best.value, center: Point::new(best.z[0], best.z[1]) }
}

fn ordered_pair(a: Point, b: Point) -> (Point, Point) {
    if a.lex_cmp(b).is_le() {
        (a, b)
    } else {
        (b, a)
    }
}

fn pair_less(p: (Point, Point), q: (Point, Point)) -> bool {
    p.0.lex_cmp(q.0).then(p.1.lex_cmp(q.1)).is_lt()
}

/// Largest Euclidean distance between two points of the closed polygon.
pub fn euclidean_diameter(domain: &Polygon) -> Diameter {
    let v = domain.vertices();
    let mut best = Diameter { length: -1.0, pair: (v[0], v[0]) };
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            let d = v[i].dist(v[j]);
            let pair = ordered_pair(v[i], v[j]);
            if d > best.length || (d == best.length && pair_less(pair, best.pair)) {
                best = Diameter { length: d, pair };
            }
        }
    }
    best
}

/// Largest shortest-path distance inside the closed polygon.
///
/// Candidate endpoints are the vertices plus boundary samples at spacing
/// `D_e / 512`; shortest paths bend only at reflex vertices, so the graph is
/// the visibility graph on those. For endpoints in the middle of edges the
/// value is a lower bound within the sampling spacing.
pub fn geodesic_diameter(domain: &Polygon) -> Diameter {
    let d_e = euclidean_diameter(domain);
    if domain.is_convex() {
        return d_e;
    }
    let spacing = d_e.length / 512.0;
    let candidates: Vec<Point> = BoundarySet::full(domain).samples(spacing).into_iter().map(|(p, _)| p).collect();
    let reflex: Vec<Point> = (0..domain.n_vertices())
        .filter(|&i| domain.is_reflex_vertex(i))
        .map(|i| domain.vertices()[i])
        .collect();
    let m = reflex.len();

    // all-pairs geodesics between reflex vertices
    let mut between = vec![vec![f64::INFINITY; m]; m];
    for i in 0..m {
        between[i][i] = 0.0;
        for j in (i + 1)..m {
            if domain.segment_inside(reflex[i], reflex[j]) {
                let d = reflex[i].dist(reflex[j]);
                between[i][j] = d;
                between[j][i] = d;
            }
        }
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                let via = between[i][k] + between[k][j];
                if via < between[i][j] {
                    between[i][j] = via;
                }
            }
        }
    }

    // geodesic from each candidate to each reflex vertex, and direct visibility
    let visible: Vec<Vec<bool>> = candidates
        .iter()
        .map(|&p| reflex.iter().map(|&r| domain.segment_inside(p, r)).collect())
        .collect();
    let to_reflex: Vec<Vec<f64>> = candidates
        .iter()
        .zip(&visible)
        .map(|(&p, vis)| {
            (0..m)
                .map(|j| {
                    (0..m)
                        .filter(|&i| vis[i])
                        .map(|i| p.dist(reflex[i]) + between[i][j])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();

    let mut best = Diameter { length: -1.0, pair: (candidates[0], candidates[0]) };
    for i in 0..candidates.len() {
        for j in (i + 1)..candidates.len() {
            let (p, q) = (candidates[i], candidates[j]);
            let d = if domain.segment_inside(p, q) {
                p.dist(q)
            } else {
                (0..m)
                    .filter(|&k| visible[j][k])
                    .map(|k| to_reflex[i][k] + q.dist(reflex[k]))
                    .fold(f64::INFINITY, f64::min)
            };
            let pair = ordered_pair(p, q);
            if d > best.length || (d == best.length && pair_less(pair, best.pair)) {
                best = Diameter { length: d, pair };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_polygon;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        validate_polygon(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn square_inradius() {
        let ir = inradius(&poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]));
        assert!((ir.r - 0.5).abs() < 1e-9, "{ir:?}");
        assert!(ir.center.dist(Point::new(0.5, 0.5)) < 1e-8);
    }

    #[test]
    fn rectangle_inradius_tie() {
        let ir = inradius(&poly(&[(0., 0.), (2., 0.), (2., 1.), (0., 1.)]));
        assert!((ir.r - 0.5).abs() < 1e-9);
        assert!((ir.center.y - 0.5).abs() < 1e-8);
        assert!((0.5 - 1e-8..=1.5 + 1e-8).contains(&ir.center.x));
    }

    #[test]
    fn lshape_inradius_matches_fine_grid() {
        let domain = poly(&[(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]);
        let ir = inradius(&domain);
        // brute force oracle: fine grid, then local zoom
        let b = BoundarySet::full(&domain);
        let mut best = (Point::default(), -1.0);
        for p in domain_grid(&domain, 1.0 / 400.0) {
            let d = b.distance(p);
            if d > best.1 {
                best = (p, d);
            }
        }
        let mut h = 1.0 / 200.0;
        for _ in 0..40 {
            h *= 0.7;
            let c = best.0;
            for i in -10..=10 {
                for j in -10..=10 {
                    let p = Point::new(c.x + i as f64 * h / 10.0, c.y + j as f64 * h / 10.0);
                    if domain.contains(p) && b.distance(p) > best.1 {
                        best = (p, b.distance(p));
                    }
                }
            }
        }
        assert!(ir.r >= best.1 - 1e-9, "{} vs oracle {}", ir.r, best.1);
        assert!((ir.r - best.1).abs() < 1e-6, "{ir:?} oracle {best:?}");
        assert!((b.distance(ir.center) - ir.r).abs() < 1e-12);
        // disc touching both axes and the reflex corner
        let exact = 2f64.sqrt() / (1.0 + 2f64.sqrt());
        assert!((ir.r - exact).abs() < 1e-9);
    }

    #[test]
    fn diameters() {
        let sq = poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let d = euclidean_diameter(&sq);
        assert!((d.length - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.pair, (Point::new(0., 0.), Point::new(1., 1.)));
        assert_eq!(geodesic_diameter(&sq).length, d.length);

        let l = poly(&[(0., 0.), (3., 0.), (3., 1.), (1., 1.), (1., 2.), (0., 2.)]);
        let de = euclidean_diameter(&l);
        assert!((de.length - 13f64.sqrt()).abs() < 1e-12);
        let dg = geodesic_diameter(&l);
        assert!((dg.length - (5f64.sqrt() + 2f64.sqrt())).abs() < 1e-9, "{dg:?}");
    }
}
