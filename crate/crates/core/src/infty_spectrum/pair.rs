use super::cone::{cone_boundary_sup, Cone};
use super::InftyError;
use crate::geometry::extent::{domain_constraints, domain_grid};
use crate::geometry::{euclidean_diameter, BoundarySet, Point, Polygon};
use crate::optim::{maximize_multistart, MaxMinModel, MultiStartOptions, NelderMeadOptions, Piece, PolishOptions};

/// Relative optimizer tolerance for pair placements, in units of the diameter.
pub const TOL_OPT_REL: f64 = 1e-7;

const SEED_POINTS: usize = 141;
const SEED_PAIRS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActiveConstraint {
    PairDistance,
    Trace1,
    Trace2,
}

impl ActiveConstraint {
    pub fn name(self) -> &'static str {
        match self {
            ActiveConstraint::PairDistance => "pair_distance",
            ActiveConstraint::Trace1 => "trace1",
            ActiveConstraint::Trace2 => "trace2",
        }
    }
}

/// The optimal two-cone placement for a Robin parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SOmegaResult {
    pub s: f64,
    pub x1: Point,
    pub x2: Point,
    pub beta: f64,
    pub active: Vec<ActiveConstraint>,
    /// Largest disagreement between the reduced trace term and its sampled
    /// evaluation at the optimizers.
    pub objective_gap: f64,
    /// Tolerance the optimum was certified to.
    pub tol: f64,
}

impl SOmegaResult {
    pub fn cones(&self) -> (Cone, Cone) {
        (Cone::new(self.x1, self.s), Cone::new(self.x2, self.s))
    }
}

/// Two disjoint equal discs of maximal radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBallRadius {
    pub r2: f64,
    pub pair: (Point, Point),
}

/// `min(|x1 - x2| / 2, d(x1) + offset, d(x2) + offset)` for points of the closed domain.
pub fn pair_objective(domain: &Polygon, offset: f64, x1: Point, x2: Point) -> f64 {
    if !domain.contains(x1) || !domain.contains(x2) {
        return f64::NEG_INFINITY;
    }
    let b = BoundarySet::full(domain);
    (0.5 * x1.dist(x2)).min(b.distance(x1) + offset).min(b.distance(x2) + offset)
}

struct PairModel<'a> {
    domain: &'a Polygon,
    boundary: BoundarySet,
    offset: f64,
}

impl PairModel<'_> {
    fn signed(&self, x: Point) -> f64 {
        let d = self.boundary.distance(x);
        if self.domain.contains(x) {
            d
        } else {
            -d
        }
    }
}

impl MaxMinModel for PairModel<'_> {
    fn dim(&self) -> usize {
        4
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let (x1, x2) = (Point::new(z[0], z[1]), Point::new(z[2], z[3]));
        if !self.domain.contains(x1) || !self.domain.contains(x2) {
            return f64::NEG_INFINITY;
        }
        (0.5 * x1.dist(x2)).min(self.boundary.distance(x1) + self.offset).min(self.boundary.distance(x2) + self.offset)
    }

    fn penalized(&self, z: &[f64]) -> f64 {
        let (x1, x2) = (Point::new(z[0], z[1]), Point::new(z[2], z[3]));
        let (d1, d2) = (self.signed(x1), self.signed(x2));
        let f = (0.5 * x1.dist(x2)).min(d1 + self.offset).min(d2 + self.offset);
        f + 2.0 * (d1.min(0.0) + d2.min(0.0))
    }

    fn linearize(&self, z: &[f64], margin: f64, pieces: &mut Vec<Piece>, constraints: &mut Vec<Piece>) {
        let (x1, x2) = (Point::new(z[0], z[1]), Point::new(z[2], z[3]));
        let f = self.objective(z);
        let half = 0.5 * x1.dist(x2);
        if half <= f + margin {
            let u = if half > 0.0 { (x1 - x2) * (0.5 / (2.0 * half)) } else { Point::new(0.5, 0.0) };
            pieces.push(Piece { value: half, grad: vec![u.x, u.y, -u.x, -u.y] });
        }
        for (offset, x) in [(0, x1), (2, x2)] {
            for k in 0..self.boundary.segments().len() {
                let (v, g) = self.boundary.segment_distance_grad(k, x);
                if v + self.offset <= f + margin {
                    let mut grad = vec![0.0; 4];
                    grad[offset] = g.x;
                    grad[offset + 1] = g.y;
                    pieces.push(Piece { value: v + self.offset, grad });
                }
            }
            domain_constraints(self.domain, x, margin, offset, 4, constraints);
        }
    }
}

/// Greedy farthest-point subset, started from the lexicographically smallest point.
fn farthest_points(points: &[Point], k: usize) -> Vec<Point> {
    if points.len() <= k {
        return points.to_vec();
    }
    let first = (0..points.len()).min_by(|&a, &b| points[a].lex_cmp(points[b])).unwrap_or(0);
    let mut chosen = vec![points[first]];
    let mut gap: Vec<f64> = points.iter().map(|p| p.dist(points[first])).collect();
    while chosen.len() < k {
        let (i, _) = gap
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        let p = points[i];
        chosen.push(p);
        for (g, q) in gap.iter_mut().zip(points) {
            *g = g.min(q.dist(p));
        }
    }
    chosen
}

fn pair_seeds(domain: &Polygon, boundary: &BoundarySet, offset: f64, d_e: f64) -> Vec<Vec<f64>> {
    let res = d_e / 64.0;
    let mut cands = domain_grid(domain, res);
    cands.extend(boundary.samples(res).into_iter().map(|(p, _)| p));
    let pts = farthest_points(&cands, SEED_POINTS);
    let dist: Vec<f64> = pts.iter().map(|&p| boundary.distance(p)).collect();
    let mut scored = Vec::with_capacity(pts.len() * pts.len() / 2);
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let f = (0.5 * pts[i].dist(pts[j])).min(dist[i] + offset).min(dist[j] + offset);
            scored.push((f, i, j));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let sep = 2.0 * res;
    let mut seeds: Vec<(Point, Point)> = Vec::new();
    for (_, i, j) in scored {
        let (p, q) = (pts[i], pts[j]);
        let near = |&(a, b): &(Point, Point)| {
            (a.dist(p) < sep && b.dist(q) < sep) || (a.dist(q) < sep && b.dist(p) < sep)
        };
        if !seeds.iter().any(near) {
            seeds.push((p, q));
            if seeds.len() == SEED_PAIRS {
                break;
            }
        }
    }
    seeds.into_iter().map(|(p, q)| vec![p.x, p.y, q.x, q.y]).collect()
}

struct PairOptimum {
    value: f64,
    x1: Point,
    x2: Point,
    converged: bool,
}

fn maximize_pair(domain: &Polygon, offset: f64) -> PairOptimum {
    let d_e = euclidean_diameter(domain).length;
    let boundary = BoundarySet::full(domain);
    let seeds = pair_seeds(domain, &boundary, offset, d_e);
    let model = PairModel { domain, boundary, offset };
    let opts = MultiStartOptions {
        nm_step: d_e / 64.0,
        nm: NelderMeadOptions { max_evals: 3000, x_tol: 1e-7 * d_e, restarts: 1 },
        polish: PolishOptions { initial_radius: d_e / 64.0, min_radius: 1e-12 * d_e, max_iters: 500 },
    };
    let best = maximize_multistart(&model, &seeds, opts);
    let (mut x1, mut x2) = (Point::new(best.z[0], best.z[1]), Point::new(best.z[2], best.z[3]));
    if x2.lex_cmp(x1).is_lt() {
        std::mem::swap(&mut x1, &mut x2);
    }
    PairOptimum { value: best.value, x1, x2, converged: best.converged }
}

fn check_beta(beta: f64) -> Result<(), InftyError> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(InftyError::InvalidBeta(beta))
    }
}

/// Largest `t` admitting two cones of radius `t` with disjoint supports and
/// boundary trace at most `1 / (beta t)`.
pub fn s_omega(domain: &Polygon, beta: f64) -> Result<SOmegaResult, InftyError> {
    check_beta(beta)?;
    let d_e = euclidean_diameter(domain).length;
    let tol = TOL_OPT_REL * d_e;
    let offset = 1.0 / beta;
    let opt = maximize_pair(domain, offset);
    let s = opt.value;
    let boundary = BoundarySet::full(domain);
    let mut active = Vec::new();
    if 0.5 * opt.x1.dist(opt.x2) <= s + tol {
        active.push(ActiveConstraint::PairDistance);
    }
    if boundary.distance(opt.x1) + offset <= s + tol {
        active.push(ActiveConstraint::Trace1);
    }
    if boundary.distance(opt.x2) + offset <= s + tol {
        active.push(ActiveConstraint::Trace2);
    }
    let mut objective_gap: f64 = 0.0;
    for x in [opt.x1, opt.x2] {
        let trace = cone_boundary_sup(domain, Cone::new(x, s))?;
        objective_gap = objective_gap.max(trace.sup - trace.sampled);
    }
    let result = SOmegaResult { s, x1: opt.x1, x2: opt.x2, beta, active, objective_gap, tol };
    if !opt.converged {
        return Err(InftyError::OptimizationStalled(Box::new(result)));
    }
    Ok(result)
}

/// `1 / s(domain, beta)`.
pub fn lambda2_infty(domain: &Polygon, beta: f64) -> Result<f64, InftyError> {
    Ok(1.0 / s_omega(domain, beta)?.s)
}

/// Radius of the two largest disjoint equal discs inside the domain.
pub fn r2(domain: &Polygon) -> Result<TwoBallRadius, InftyError> {
    let opt = maximize_pair(domain, 0.0);
    let found = TwoBallRadius { r2: opt.value, pair: (opt.x1, opt.x2) };
    if !opt.converged {
        let d_e = euclidean_diameter(domain).length;
        let result = SOmegaResult {
            s: opt.value,
            x1: opt.x1,
            x2: opt.x2,
            beta: f64::INFINITY,
            active: Vec::new(),
            objective_gap: 0.0,
            tol: TOL_OPT_REL * d_e,
        };
        return Err(InftyError::OptimizationStalled(Box::new(result)));
    }
    Ok(found)
}
