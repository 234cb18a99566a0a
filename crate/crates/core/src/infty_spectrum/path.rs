use std::sync::Arc;

use super::field::{DistanceProfile, Field};
use super::pair::{s_omega, SOmegaResult};
use super::InftyError;
use crate::geometry::{inradius, BoundarySet, Point, Polygon};
use rayon::prelude::*;

/// Sup-norm tolerance for path functions.
pub const TOL_PATH: f64 = 1e-9;

/// The normalized distance profile together with its checked properties.
#[derive(Debug, Clone)]
pub struct FirstProfile {
    pub field: Field,
    pub lambda1: f64,
    /// Largest sampled value (expected 1).
    pub sup: f64,
    /// Largest sampled difference quotient (expected at most `lambda1`).
    pub lipschitz: f64,
    /// `beta` times the largest boundary value (expected `lambda1`).
    pub boundary_weighted: f64,
}

/// `(1/beta + d(x)) / (1/beta + r)`, which attains the first eigenvalue.
pub fn first_eigenfunction_profile(domain: &Polygon, beta: f64) -> Result<FirstProfile, InftyError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(InftyError::InvalidBeta(beta));
    }
    let ir = inradius(domain);
    let offset = 1.0 / beta;
    let profile = DistanceProfile { boundary: BoundarySet::full(domain), offset, peak: offset + ir.r, top: ir.center };
    let field = Field::Profile(Arc::new(profile));
    let lambda1 = 1.0 / (offset + ir.r);
    let probe = Probe::new(domain, domain.scale() / 100.0);
    let values = probe.values(&field);
    let sup = values.iter().copied().fold(field.value(ir.center), f64::max);
    let lipschitz = probe.lipschitz(&values);
    let boundary_weighted = beta * probe.boundary.iter().map(|&p| field.value_with(p, Some(0.0)).abs()).fold(0.0, f64::max);
    Ok(FirstProfile { field, lambda1, sup, lipschitz, boundary_weighted })
}

/// A path of fields, sampled segment by segment.
#[derive(Debug, Clone)]
pub struct PathFunction {
    pub segments: Vec<Vec<Field>>,
    /// Path parameter of each sample within its segment.
    pub params: Vec<f64>,
}

impl PathFunction {
    pub fn functions(&self) -> impl Iterator<Item = &Field> {
        self.segments.iter().flatten()
    }

    pub fn first(&self) -> Option<&Field> {
        self.segments.first().and_then(|s| s.first())
    }

    pub fn last(&self) -> Option<&Field> {
        self.segments.last().and_then(|s| s.last())
    }
}

/// The min-max path from the profile to its negative through the cone pair.
#[derive(Debug, Clone)]
pub struct MinmaxPath {
    pub path: PathFunction,
    pub profile: FirstProfile,
    pub placement: SOmegaResult,
}

pub fn build_minmax_path(domain: &Polygon, beta: f64, n_steps: usize) -> Result<MinmaxPath, InftyError> {
    let placement = s_omega(domain, beta)?;
    let profile = first_eigenfunction_profile(domain, beta)?;
    let n = n_steps.max(1);
    let params: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let (c1, c2) = placement.cones();
    let (u, c1, c2) = (profile.field.clone(), Field::Cone(c1), Field::Cone(c2));
    let seg = |f: &dyn Fn(f64) -> Field| params.iter().map(|&t| f(t)).collect::<Vec<_>>();
    let segments = vec![
        seg(&|t| u.clone().max(c1.clone().scale(t))),
        seg(&|t| u.clone().scale(1.0 - t).max(c1.clone())),
        seg(&|t| c1.clone().disjoint_sum(c2.clone().scale(-t))),
        seg(&|t| c1.clone().scale(1.0 - t).disjoint_sum(c2.clone().scale(-1.0))),
        seg(&|t| c2.clone().scale(-1.0).min(u.clone().scale(-t))),
        seg(&|t| c2.clone().scale(-(1.0 - t)).min(u.clone().scale(-1.0))),
    ];
    Ok(MinmaxPath { path: PathFunction { segments, params }, profile, placement })
}

/// Estimate of the sup along a path of `max(Lip(u), beta * sup_boundary |u|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSup {
    /// Sampled estimate.
    pub value: f64,
    /// Bound from the construction: Lipschitz bounds of the pieces.
    pub analytic: f64,
    /// Resolution-based uncertainty of the sampled estimate.
    pub error_bar: f64,
    /// Index (in path order) of the function realizing `value`.
    pub argmax: usize,
}

pub fn path_functional_sup(
    domain: &Polygon,
    path: &PathFunction,
    beta: f64,
    probe_resolution: f64,
) -> Result<PathSup, InftyError> {
    if !(beta > 0.0) {
        return Err(InftyError::InvalidBeta(beta));
    }
    let funcs: Vec<&Field> = path.functions().collect();
    if funcs.is_empty() {
        return Err(InftyError::EmptyPath);
    }
    let probe = Probe::new(domain, probe_resolution);
    let rows: Vec<(f64, f64, f64)> = funcs
        .par_iter()
        .map(|f| {
            let values = probe.values(f);
            let mut norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for p in f.peaks() {
                if domain.contains(p) {
                    norm = norm.max(f.value(p).abs());
                }
            }
            let lip = probe.lipschitz(&values);
            let bsup = probe.boundary.iter().map(|&p| f.value_with(p, Some(0.0)).abs()).fold(0.0, f64::max);
            let analytic = f.lipschitz_bound().max(beta * analytic_boundary_sup(f, &probe, bsup));
            (norm, lip.max(beta * bsup), analytic)
        })
        .collect();
    for (index, &(norm, _, _)) in rows.iter().enumerate() {
        if !(norm >= 1.0 - TOL_PATH && norm <= 1.0 + TOL_PATH) {
            return Err(InftyError::PathOffSphere { index, norm });
        }
    }
    let mut argmax = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.1 > rows[argmax].1 {
            argmax = i;
        }
    }
    let analytic = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    // boundary samples and the eight probe directions both undershoot
    let angle_loss = 1.0 - (std::f64::consts::PI / 16.0).cos();
    let error_bar = analytic * (beta * probe_resolution / 2.0 + angle_loss);
    Ok(PathSup { value: rows[argmax].1, analytic, error_bar, argmax })
}

/// Boundary sup bound: exact for cones and the profile, sampled otherwise.
fn analytic_boundary_sup(f: &Field, probe: &Probe, sampled: f64) -> f64 {
    match f {
        Field::Profile(p) => p.offset / p.peak,
        Field::Cone(c) => ((c.radius - probe.dist_to_boundary(c.apex)) / c.radius).max(0.0),
        Field::Scale(c, g) => c.abs() * analytic_boundary_sup(g, probe, sampled),
        Field::Max(a, b) | Field::Min(a, b) | Field::DisjointSum(a, b) => {
            analytic_boundary_sup(a, probe, sampled).max(analytic_boundary_sup(b, probe, sampled))
        }
    }
}

/// Grid samples of the domain with neighbour pairs for difference quotients.
pub(crate) struct Probe {
    points: Vec<Point>,
    dist: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    boundary: Vec<Point>,
    full: BoundarySet,
}

impl Probe {
    pub(crate) fn new(domain: &Polygon, resolution: f64) -> Self {
        let full = BoundarySet::full(domain);
        let (lo, hi) = domain.bbox();
        let nx = ((hi.x - lo.x) / resolution).ceil() as i64;
        let ny = ((hi.y - lo.y) / resolution).ceil() as i64;
        let mut index = vec![usize::MAX; ((nx + 1) * (ny + 1)) as usize];
        let mut points = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                let p = Point::new(lo.x + i as f64 * resolution, lo.y + j as f64 * resolution);
                if domain.contains(p) {
                    index[(j * (nx + 1) + i) as usize] = points.len();
                    points.push(p);
                }
            }
        }
        let convex = domain.is_convex();
        let offsets = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)];
        let mut pairs = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                let a = index[(j * (nx + 1) + i) as usize];
                if a == usize::MAX {
                    continue;
                }
                for (di, dj) in offsets {
                    let (i2, j2) = (i + di, j + dj);
                    if i2 < 0 || i2 > nx || j2 < 0 || j2 > ny {
                        continue;
                    }
                    let b = index[(j2 * (nx + 1) + i2) as usize];
                    if b != usize::MAX && (convex || domain.segment_inside(points[a], points[b])) {
                        pairs.push((a, b));
                    }
                }
            }
        }
        let dist = points.iter().map(|&p| full.distance(p)).collect();
        let boundary = full.samples(resolution).into_iter().map(|(p, _)| p).collect();
        Self { points, dist, pairs, boundary, full }
    }

    fn values(&self, f: &Field) -> Vec<f64> {
        self.points.iter().zip(&self.dist).map(|(&p, &d)| f.value_with(p, Some(d))).collect()
    }

    fn lipschitz(&self, values: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(a, b)| (values[a] - values[b]).abs() / self.points[a].dist(self.points[b]))
            .fold(0.0, f64::max)
    }

    fn dist_to_boundary(&self, x: Point) -> f64 {
        self.full.distance(x)
    }
}
