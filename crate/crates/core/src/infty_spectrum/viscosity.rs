use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{Field, Jet};
use super::InftyError;
use crate::geometry::{BoundarySet, Point, Polygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Positive,
    Zero,
    Negative,
}

impl Branch {
    fn of(u: f64) -> Branch {
        if u > 0.0 {
            Branch::Positive
        } else if u < 0.0 {
            Branch::Negative
        } else {
            Branch::Zero
        }
    }
}

fn infinity_laplacian(grad: [f64; 2], hess: [[f64; 2]; 2]) -> f64 {
    let hg = [hess[0][0] * grad[0] + hess[0][1] * grad[1], hess[1][0] * grad[0] + hess[1][1] * grad[1]];
    hg[0] * grad[0] + hg[1] * grad[1]
}

/// Interior operator of the limit eigenvalue problem.
pub fn eval_f_operator(u: f64, grad: [f64; 2], hess: [[f64; 2]; 2], lambda: f64) -> (f64, Branch) {
    let branch = Branch::of(u);
    let g = grad[0].hypot(grad[1]);
    let neg_lap = -infinity_laplacian(grad, hess);
    let value = match branch {
        Branch::Positive => (g - lambda * u.abs()).min(neg_lap),
        Branch::Negative => (lambda * u.abs() - g).max(neg_lap),
        Branch::Zero => neg_lap,
    };
    (value, branch)
}

/// Boundary operator; `normal` is the outward unit normal.
pub fn eval_g_operator(u: f64, grad: [f64; 2], normal: [f64; 2], beta: f64) -> Result<(f64, Branch), InftyError> {
    let len = normal[0].hypot(normal[1]);
    if (len - 1.0).abs() > 1e-9 {
        return Err(InftyError::NonUnitNormal(len));
    }
    let branch = Branch::of(u);
    let g = grad[0].hypot(grad[1]);
    let dn = grad[0] * normal[0] + grad[1] * normal[1];
    let value = match branch {
        Branch::Positive => -(g - beta * u).min(-dn),
        Branch::Negative => -(beta * u.abs() - g).max(-dn),
        Branch::Zero => dn,
    };
    Ok((value, branch))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSample {
    pub point: Point,
    pub u: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub f_value: f64,
    /// Present on boundary samples.
    pub g_value: Option<f64>,
    pub branch: Branch,
}

/// A field to check: analytic, or sampled through a closure with finite differences.
pub enum Candidate<'a> {
    Analytic(&'a Field),
    Sampled { eval: &'a (dyn Fn(Point) -> f64 + Sync), step: f64 },
}

impl Candidate<'_> {
    fn jet(&self, x: Point, guard: f64) -> Option<Jet> {
        match self {
            Candidate::Analytic(f) => f.jet(x, guard),
            Candidate::Sampled { eval, step } => {
                let h = *step;
                let f = |dx: f64, dy: f64| eval(Point::new(x.x + dx, x.y + dy));
                let c = f(0.0, 0.0);
                let (px, mx, py, my) = (f(h, 0.0), f(-h, 0.0), f(0.0, h), f(0.0, -h));
                let grad = Point::new((px - mx) / (2.0 * h), (py - my) / (2.0 * h));
                let hxx = (px - 2.0 * c + mx) / (h * h);
                let hyy = (py - 2.0 * c + my) / (h * h);
                let hxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                Some(Jet { u: c, grad, hess: [[hxx, hxy], [hxy, hyy]] })
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpotCheckOptions {
    pub interior_samples: usize,
    pub boundary_samples: usize,
    /// Distance from kinks (apex, support rim, ridges, gluing seams) inside which samples are skipped.
    pub guard: f64,
    /// Operator values within this of zero count as consistent.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SpotCheckOptions {
    fn default() -> Self {
        Self { interior_samples: 2000, boundary_samples: 400, guard: 1e-3, tol: 1e-9, seed: 7 }
    }
}

/// Largest positive and negative operator values seen on one branch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Excursion {
    pub max_positive: f64,
    pub max_negative: f64,
    pub count: usize,
}

impl Excursion {
    fn record(&mut self, v: f64) {
        self.max_positive = self.max_positive.max(v);
        self.max_negative = self.max_negative.min(v);
        self.count += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpotCheckReport {
    pub interior: [Excursion; 3],
    pub boundary: [Excursion; 3],
    pub skipped: usize,
    pub interior_violations: Vec<OperatorSample>,
    pub boundary_violations: Vec<OperatorSample>,
}

impl SpotCheckReport {
    pub fn interior_consistent(&self) -> bool {
        self.interior_violations.is_empty()
    }

    pub fn boundary_consistent(&self) -> bool {
        self.boundary_violations.is_empty()
    }

    fn slot(b: Branch) -> usize {
        match b {
            Branch::Positive => 0,
            Branch::Zero => 1,
            Branch::Negative => 2,
        }
    }
}

/// Samples the interior and boundary operators at smooth points of the candidate.
pub fn viscosity_spot_check(
    domain: &Polygon,
    candidate: &Candidate<'_>,
    lambda: f64,
    beta: f64,
    opts: SpotCheckOptions,
) -> Result<SpotCheckReport, InftyError> {
    if !(beta > 0.0) {
        return Err(InftyError::InvalidBeta(beta));
    }
    let mut report = SpotCheckReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (lo, hi) = domain.bbox();
    let full = BoundarySet::full(domain);
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < opts.interior_samples && attempts < 100 * opts.interior_samples.max(1) {
        attempts += 1;
        let x = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if !domain.contains_strict(x) || full.distance(x) < opts.guard {
            continue;
        }
        drawn += 1;
        let Some(j) = candidate.jet(x, opts.guard) else {
            report.skipped += 1;
            continue;
        };
        let grad = [j.grad.x, j.grad.y];
        let (f_value, branch) = eval_f_operator(j.u, grad, j.hess, lambda);
        report.interior[SpotCheckReport::slot(branch)].record(f_value);
        if f_value.abs() > opts.tol {
            report.interior_violations.push(OperatorSample {
                point: x,
                u: j.u,
                grad,
                hess: j.hess,
                f_value,
                g_value: None,
                branch,
            });
        }
    }
    let perimeter = domain.perimeter();
    let samples = full.samples(perimeter / opts.boundary_samples.max(1) as f64);
    for (x, inward) in samples.into_iter().take(opts.boundary_samples) {
        let Some(j) = candidate.jet(x, opts.guard) else {
            report.skipped += 1;
            continue;
        };
        let grad = [j.grad.x, j.grad.y];
        let (f_value, _) = eval_f_operator(j.u, grad, j.hess, lambda);
        let (g_value, branch) = eval_g_operator(j.u, grad, [-inward.x, -inward.y], beta)?;
        report.boundary[SpotCheckReport::slot(branch)].record(g_value);
        if g_value.abs() > opts.tol {
            report.boundary_violations.push(OperatorSample {
                point: x,
                u: j.u,
                grad,
                hess: j.hess,
                f_value,
                g_value: Some(g_value),
                branch,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infty_spectrum::{first_eigenfunction_profile, s_omega};

    fn square() -> Polygon {
        Polygon::new(vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)]).unwrap()
    }

    #[test]
    fn operator_examples() {
        let t = 0.8;
        let (v, b) = eval_f_operator(0.5, [1.0 / t, 0.0], [[0.0, 0.0], [0.0, -1.0]], 1.0 / t);
        assert_eq!((v, b), (0.0, Branch::Positive));
        assert_eq!(eval_f_operator(0.0, [3.0, 1.0], [[0.0; 2]; 2], 2.0), (0.0, Branch::Zero));
        assert_eq!(eval_f_operator(-1.0, [0.0, 0.0], [[0.0; 2]; 2], 1.0), (1.0, Branch::Negative));

        let beta = 1.7;
        let n = [0.6, 0.8];
        let (v, b) = eval_g_operator(1.0, [-beta * n[0], -beta * n[1]], n, beta).unwrap();
        assert!(v.abs() < 1e-15 && b == Branch::Positive);
        assert_eq!(eval_g_operator(0.0, [2.0, 0.0], [1.0, 0.0], beta).unwrap(), (2.0, Branch::Zero));
        let (v, _) = eval_g_operator(-1.0, [beta * n[0], beta * n[1]], n, beta).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(matches!(eval_g_operator(1.0, [0.0, 0.0], [1.0, 1.0], beta), Err(InftyError::NonUnitNormal(_))));
    }

    #[test]
    fn cone_pair_is_interior_solution() {
        let sq = square();
        let res = s_omega(&sq, 2.0).unwrap();
        let (c1, c2) = res.cones();
        let field = Field::Cone(c1).disjoint_sum(Field::Cone(c2).scale(-1.0));
        let rep =
            viscosity_spot_check(&sq, &Candidate::Analytic(&field), 1.0 / res.s, 2.0, SpotCheckOptions::default())
                .unwrap();
        assert!(rep.interior_consistent(), "{:?}", rep.interior_violations.first());
        assert!(rep.interior[0].count > 100 && rep.interior[2].count > 100);
    }

    #[test]
    fn profile_checks() {
        let sq = square();
        let p = first_eigenfunction_profile(&sq, 2.0).unwrap();
        let opts = SpotCheckOptions::default();
        let rep = viscosity_spot_check(&sq, &Candidate::Analytic(&p.field), p.lambda1, 2.0, opts).unwrap();
        assert!(rep.interior_consistent() && rep.boundary_consistent());
        let rep = viscosity_spot_check(&sq, &Candidate::Analytic(&p.field), 2.0 * p.lambda1, 2.0, opts).unwrap();
        assert!(!rep.interior_consistent());
        assert!(rep.interior_violations.iter().all(|s| s.u > 0.5 && s.f_value < 0.0));
    }

    #[test]
    fn sampled_candidate_matches_analytic() {
        let sq = square();
        let p = first_eigenfunction_profile(&sq, 2.0).unwrap();
        let eval = |x: Point| p.field.value(x);
        let opts = SpotCheckOptions { tol: 1e-5, guard: 0.02, ..Default::default() };
        let cand = Candidate::Sampled { eval: &eval, step: 1e-4 };
        let rep = viscosity_spot_check(&sq, &cand, p.lambda1, 2.0, opts).unwrap();
        // finite differences straddle the ridges, so only count the smooth majority
        let bad = rep.interior_violations.len() as f64 / rep.interior.iter().map(|e| e.count).sum::<usize>() as f64;
        assert!(bad < 0.1, "{bad}");
    }
}
