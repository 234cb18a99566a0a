use rayon::prelude::*;

use super::mesh::{triangulate, Mesh};
use super::quotient::{DiscreteField, PQuotient};
use super::solver::{SolverOptions, Workspace};
use super::{EigenResult, FemError};
use crate::geometry::Polygon;
use crate::infty_spectrum::{cone_value, lambda1_infty, s_omega, SOmegaResult};

/// First eigenvalue at exponent `p`.
pub fn minimize_first(mesh: &Mesh, p: f64, beta: f64, opts: &SolverOptions) -> Result<EigenResult, FemError> {
    Workspace::new(mesh, beta)?.first(p, opts)
}

#[derive(Debug, Clone, Default)]
pub struct SecondOptions {
    pub solver: SolverOptions,
    /// Interpolated cone pair, tried as an extra start.
    pub cone_seed: Option<DiscreteField>,
    /// First eigenfunction, for the orthogonality diagnostic.
    pub first: Option<DiscreteField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondStart {
    /// The linear second eigenvector, or the supplied warm start.
    Linear,
    ConePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondResult {
    pub result: EigenResult,
    pub start: SecondStart,
    /// Quotients of the positive and negative parts alone.
    pub r_pos: f64,
    pub r_neg: f64,
    /// Largest values of the positive and negative parts, relative to the max norm.
    pub pos_sup: f64,
    pub neg_sup: f64,
    /// Cosine between the field and the first eigenfunction in `L^2`.
    pub first_projection: Option<f64>,
}

/// Second level over the sign-balanced class, best of the linear and cone starts.
pub fn minimize_second(mesh: &Mesh, p: f64, beta: f64, opts: &SecondOptions) -> Result<SecondResult, FemError> {
    let ws = Workspace::new(mesh, beta)?;
    second_in(&ws, p, opts)
}

/// Iterations a cone-pair start gets before it must beat the linear start.
const CONE_SCREEN: usize = 150;

fn second_in(ws: &Workspace<'_>, p: f64, opts: &SecondOptions) -> Result<SecondResult, FemError> {
    let mut best: Option<(SecondStart, EigenResult)> = None;
    let mut first_err = None;
    match ws.second_ladder(p, &opts.solver) {
        Ok(r) => best = Some((SecondStart::Linear, r)),
        Err(e) => first_err = Some(e),
    }
    if let Some(seed) = &opts.cone_seed {
        let screen = SolverOptions { max_iters: CONE_SCREEN.min(opts.solver.max_iters), ..opts.solver.clone() };
        let cone = match ws.second_from(p, seed.values.clone(), &screen) {
            Err(FemError::NonConvergence(partial)) => {
                let ahead = best.as_ref().is_none_or(|(_, b)| partial.lambda < b.lambda);
                if ahead {
                    let rest = SolverOptions {
                        max_iters: opts.solver.max_iters.saturating_sub(CONE_SCREEN),
                        ..opts.solver.clone()
                    };
                    Some(ws.second_from(p, partial.field.values.clone(), &rest))
                } else {
                    None
                }
            }
            other => Some(other),
        };
        match cone {
            Some(Ok(r)) if best.as_ref().is_none_or(|(_, b)| r.lambda < b.lambda) => best = Some((SecondStart::ConePair, r)),
            Some(Err(e)) if best.is_none() => first_err = Some(e),
            _ => {}
        }
    }
    let Some((start, result)) = best else {
        return Err(first_err.expect("a failed run"));
    };
    let mut q = PQuotient::new(ws.mesh, p, ws.beta)?;
    let u = &result.field.values;
    q.fit_rule(u);
    let part = |sign: f64| -> Vec<f64> { u.iter().map(|&v| (sign * v).max(0.0)).collect() };
    let quotient = |f: &[f64]| -> f64 {
        match q.check_field(f) {
            Ok(()) => {
                let parts = q.parts(f);
                (parts.grad_term + parts.boundary_term) / parts.mass_term
            }
            Err(_) => f64::INFINITY,
        }
    };
    let (pos, neg) = (part(1.0), part(-1.0));
    let max = result.field.max_abs();
    let pos_sup = pos.iter().fold(0.0f64, |a, &v| a.max(v)) / max;
    let neg_sup = neg.iter().fold(0.0f64, |a, &v| a.max(v)) / max;
    let first_projection = opts.first.as_ref().map(|f| l2_cosine(ws.mesh, u, &f.values));
    Ok(SecondResult { r_pos: quotient(&pos), r_neg: quotient(&neg), pos_sup, neg_sup, first_projection, start, result })
}

fn l2_cosine(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.triangle_area(t) / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                let c = if i == j { 2.0 * w } else { w };
                ab += c * a[tri[i]] * b[tri[j]];
                aa += c * a[tri[i]] * a[tri[j]];
                bb += c * b[tri[i]] * b[tri[j]];
            }
        }
    }
    ab / (aa * bb).sqrt()
}

/// Interpolant of `C1 - C2` for a cone placement.
pub fn cone_pair_field(mesh: &Mesh, sres: &SOmegaResult) -> DiscreteField {
    let (c1, c2) = sres.cones();
    DiscreteField::interpolate(mesh, |x| cone_value(c1, x) - cone_value(c2, x))
}

/// Largest quotient over combinations of the two placed cones.
pub fn cone_span_upper_bound(
    mesh: &Mesh,
    _domain: &Polygon,
    beta: f64,
    p: f64,
    sres: &SOmegaResult,
) -> Result<f64, FemError> {
    let (c1, c2) = sres.cones();
    let mut q = PQuotient::new(mesh, p, beta)?;
    let v1: Vec<f64> = mesh.nodes.iter().map(|&x| cone_value(c1, x)).collect();
    let v2: Vec<f64> = mesh.nodes.iter().map(|&x| cone_value(c2, x)).collect();
    let mut worst: f64 = 0.0;
    for (a1, a2) in [(1.0, 1.0), (1.0, -1.0), (1.0, 0.0), (0.0, 1.0)] {
        let u: Vec<f64> = v1.iter().zip(&v2).map(|(x, y)| a1 * x + a2 * y).collect();
        q.check_field(&u)?;
        q.fit_rule(&u);
        worst = worst.max(q.log_quotient(&u).exp());
    }
    Ok(worst)
}

/// Volume of the unit ball in dimension `n`.
fn unit_ball_volume(n: u32) -> f64 {
    // pi^(n/2) / Gamma(n/2 + 1), with Gamma at integers and half integers
    let half = n as f64 / 2.0;
    let mut gamma = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < half + 1.0 - 1e-12 {
        gamma *= x;
        x += 1.0;
    }
    std::f64::consts::PI.powf(half) / gamma
}

/// Volume-only lower bound for the `p`-th root of the first eigenvalue.
pub fn dlg_lower_bound(volume: f64, p: f64, beta: f64, n: u32) -> f64 {
    let nf = n as f64;
    let w = unit_ball_volume(n).powf(1.0 / nf);
    let inner = w * beta.powf(-p / (p - 1.0)) + volume.powf(1.0 / nf);
    (p - 1.0) / p * w / (volume.powf(1.0 / (nf * p)) * inner.powf((p - 1.0) / p))
}

/// One exponent of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub p: f64,
    pub h: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub lambda1_root: f64,
    pub lambda2: f64,
    pub lambda2_root: f64,
    pub target1: f64,
    pub target2: f64,
    pub gap1: f64,
    pub gap2: f64,
    pub iterations1: usize,
    pub iterations2: usize,
    pub residual1: f64,
    pub residual2: f64,
    /// `p`-th root of the cone-span bound.
    pub cone_bound_root: f64,
    pub dlg_bound: f64,
    pub pos_sup: f64,
    pub neg_sup: f64,
    pub start: Option<SecondStart>,
    pub error: Option<String>,
}

/// First and second levels along an ascending list of exponents, each warm
/// started from the previous one.
pub fn convergence_study(domain: &Polygon, beta: f64, p_list: &[f64], h: f64) -> Result<Vec<StudyRow>, FemError> {
    let mesh = triangulate(domain, h)?;
    let ws = Workspace::new(&mesh, beta)?;
    let target1 = lambda1_infty(domain, beta)?;
    let sres = s_omega(domain, beta)?;
    let target2 = 1.0 / sres.s;
    let cone = cone_pair_field(&mesh, &sres);
    let area = domain.area();

    // per-p bound evaluations are independent
    let bounds: Vec<Result<f64, FemError>> =
        p_list.par_iter().map(|&p| cone_span_upper_bound(&mesh, domain, beta, p, &sres)).collect();

    let mut rows = Vec::with_capacity(p_list.len());
    let mut warm1: Option<DiscreteField> = None;
    let mut warm2: Option<DiscreteField> = None;
    for (k, &p) in p_list.iter().enumerate() {
        let mut row = StudyRow {
            p,
            h,
            beta,
            lambda1: f64::NAN,
            lambda1_root: f64::NAN,
            lambda2: f64::NAN,
            lambda2_root: f64::NAN,
            target1,
            target2,
            gap1: f64::NAN,
            gap2: f64::NAN,
            iterations1: 0,
            iterations2: 0,
            residual1: f64::NAN,
            residual2: f64::NAN,
            cone_bound_root: bounds[k].as_ref().map(|b| b.powf(1.0 / p)).unwrap_or(f64::NAN),
            dlg_bound: dlg_lower_bound(area, p, beta, 2),
            pos_sup: f64::NAN,
            neg_sup: f64::NAN,
            start: None,
            error: None,
        };
        let mut errors = Vec::new();
        let opts1 = SolverOptions { warm_start: warm1.clone(), ladder: false, ..Default::default() };
        match ws.first(p, &opts1) {
            Ok(r) => {
                row.lambda1 = r.lambda;
                row.lambda1_root = r.lambda_root;
                row.gap1 = (r.lambda_root - target1).abs();
                row.iterations1 = r.iterations;
                row.residual1 = r.residual;
                warm1 = Some(r.field);
            }
            Err(e) => errors.push(format!("first: {e}")),
        }
        let opts2 = SecondOptions {
            solver: SolverOptions { warm_start: warm2.clone(), ladder: false, ..Default::default() },
            cone_seed: Some(cone.clone()),
            first: warm1.clone(),
        };
        match second_in(&ws, p, &opts2) {
            Ok(s) => {
                row.lambda2 = s.result.lambda;
                row.lambda2_root = s.result.lambda_root;
                row.gap2 = (s.result.lambda_root - target2).abs();
                row.iterations2 = s.result.iterations;
                row.residual2 = s.result.residual;
                row.pos_sup = s.pos_sup;
                row.neg_sup = s.neg_sup;
                row.start = Some(s.start);
                warm2 = Some(s.result.field);
            }
            Err(e) => errors.push(format!("second: {e}")),
        }
        if let Err(e) = &bounds[k] {
            errors.push(format!("bound: {e}"));
        }
        if !errors.is_empty() {
            row.error = Some(errors.join("; "));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dlg_value() {
        let pi = std::f64::consts::PI;
        let expect = 0.75 * pi.sqrt() / (pi.sqrt() + 1.0).powf(0.75);
        assert!((dlg_lower_bound(1.0, 4.0, 1.0, 2) - expect).abs() < 1e-15);
        assert!((dlg_lower_bound(1.0, 4.0, 1.0, 2) - 0.6187111681402158).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * pi).abs() < 1e-14);
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
    }
}
