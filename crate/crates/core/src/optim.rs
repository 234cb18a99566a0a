//! Derivative-free maximization of piecewise-smooth max-min objectives.
//!
//! The geometric quantities here (inradius, s, r2, mixed eigenvalues) all
//! maximize a pointwise minimum of smooth distance-like pieces over the closed
//! domain. A multi-start Nelder-Mead search locates the basin; a trust-region
//! sequential-LP step then polishes to the kink where the active pieces meet.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once the simplex diameter falls below this.
    pub x_tol: f64,
    /// Fresh-simplex restarts from the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 4000, x_tol: 1e-10, restarts: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Maximizes `f` from `x0` with an adaptive-parameter Nelder-Mead simplex.
pub fn nelder_mead_max(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    opts: NelderMeadOptions,
) -> NmOutcome {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let cost = |x: &[f64]| -f(x);

    let mut best_x = x0.to_vec();
    let mut best_v = cost(x0);
    let mut evals = 1;
    let mut converged = false;
    let mut simplex_step = step;

    for _round in 0..=opts.restarts {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best_v));
        for i in 0..n {
            let mut x = best_x.clone();
            x[i] += simplex_step;
            let v = cost(&x);
            evals += 1;
            simplex.push((x, v));
        }
        let start_best = best_v;
        converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diam = simplex[1..]
                .iter()
                .map(|(x, _)| dist(x, &simplex[0].0))
                .fold(0.0, f64::max);
            if diam < opts.x_tol {
                converged = true;
                break;
            }
            if evals >= opts.max_evals {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xr = along(alpha);
            let vr = cost(&xr);
            evals += 1;
            if vr < simplex[0].1 {
                let xe = along(alpha * beta);
                let ve = cost(&xe);
                evals += 1;
                simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            } else if vr < simplex[n - 1].1 {
                simplex[n] = (xr, vr);
            } else {
                let (xc, vc) = if vr < worst.1 {
                    let xc = along(alpha * gamma);
                    let vc = cost(&xc);
                    (xc, vc)
                } else {
                    let xc = along(-gamma);
                    let vc = cost(&xc);
                    (xc, vc)
                };
                evals += 1;
                if vc < worst.1.min(vr) {
                    simplex[n] = (xc, vc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for (x, v) in simplex.iter_mut().skip(1) {
                        for (xi, bi) in x.iter_mut().zip(&x0) {
                            *xi = bi + delta * (*xi - bi);
                        }
                        *v = cost(x);
                        evals += 1;
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_v {
            best_v = simplex[0].1;
            best_x = simplex[0].0.clone();
        }
        if evals >= opts.max_evals || best_v >= start_best {
            break;
        }
        simplex_step = (simplex_step * 0.1).max(opts.x_tol * 10.0);
    }
    NmOutcome { x: best_x, value: -best_v, evals, converged }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One linearized smooth piece: `value + grad . dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// A maximization target `min_j piece_j(z)` subject to `constraint_k(z) >= 0`.
pub trait MaxMinModel: Sync {
    fn dim(&self) -> usize;

    /// Exact objective; `-inf` at infeasible points.
    fn objective(&self, z: &[f64]) -> f64;

    /// Continuous surrogate for the simplex search: the objective inside,
    /// decreasing with the distance to the feasible set outside.
    fn penalized(&self, z: &[f64]) -> f64;

    /// Pieces within `margin` of the current minimum, and the constraints
    /// that may become active within a step of that size.
    fn linearize(&self, z: &[f64], margin: f64, pieces: &mut Vec<Piece>, constraints: &mut Vec<Piece>);
}

#[derive(Debug, Clone, Copy)]
pub struct PolishOptions {
    pub initial_radius: f64,
    pub min_radius: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct PolishOutcome {
    pub z: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Trust-region sequential linear programming on a max-min model.
pub fn polish_maxmin<M: MaxMinModel + ?Sized>(model: &M, z0: &[f64], opts: PolishOptions) -> PolishOutcome {
    let n = model.dim();
    let mut z = z0.to_vec();
    let mut f = model.objective(&z);
    let mut rho = opts.initial_radius;
    let mut pieces = Vec::new();
    let mut constraints = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    if !f.is_finite() {
        return PolishOutcome { z, value: f, iterations, converged };
    }
    while iterations < opts.max_iters {
        iterations += 1;
        if rho < opts.min_radius {
            converged = true;
            break;
        }
        pieces.clear();
        constraints.clear();
        let margin = 2.0 * (n as f64).sqrt() * rho;
        model.linearize(&z, margin, &mut pieces, &mut constraints);
        if pieces.is_empty() {
            break;
        }
        let model_now = pieces.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
        let Some((dz, tau)) = solve_step(n, rho, &pieces, &constraints) else {
            rho *= 0.25;
            continue;
        };
        let predicted = tau - model_now;
        if predicted <= 1e-15 * (1.0 + f.abs()) {
            converged = true;
            break;
        }
        let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + b).collect();
        let ft = model.objective(&trial);
        if ft > f {
            let ratio = (ft - f) / predicted;
            let at_edge = dz.iter().any(|d| d.abs() > 0.99 * rho);
            z = trial;
            f = ft;
            if ratio > 0.75 && at_edge {
                rho = (rho * 2.0).min(4.0 * opts.initial_radius);
            } else if ratio < 0.25 {
                rho *= 0.5;
            }
        } else {
            rho *= 0.25;
        }
    }
    PolishOutcome { z, value: f, iterations, converged }
}

fn solve_step(n: usize, rho: f64, pieces: &[Piece], constraints: &[Piece]) -> Option<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (-rho, rho))).collect();
    let lo = pieces.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    // tau is measured relative to the current model value to keep the LP well scaled
    let tau = lp.add_var(1.0, (-1e3 * rho.max(1e-300) - 1.0, 1e3 * rho + 1.0));
    for p in pieces {
        let mut expr: Vec<_> = vars.iter().zip(&p.grad).map(|(&v, &g)| (v, g)).collect();
        expr.push((tau, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, lo - p.value);
    }
    for c in constraints {
        let expr: Vec<_> = vars.iter().zip(&c.grad).map(|(&v, &g)| (v, g)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, -c.value.max(0.0));
    }
    let sol = lp.solve().ok()?;
    let dz = vars.iter().map(|&v| sol[v]).collect();
    Some((dz, lo + sol[tau]))
}

#[derive(Debug, Clone, Copy)]
pub struct MultiStartOptions {
    pub nm_step: f64,
    pub nm: NelderMeadOptions,
    pub polish: PolishOptions,
}

#[derive(Debug, Clone)]
pub struct MaximizeOutcome {
    pub z: Vec<f64>,
    pub value: f64,
    /// Whether the winning start's polish converged.
    pub converged: bool,
    pub starts: usize,
}

/// Nelder-Mead from every seed, polish each result, keep the best.
///
/// Starts run in parallel; ties resolve to the lexicographically smallest
/// optimizer so the outcome is independent of scheduling.
pub fn maximize_multistart<M: MaxMinModel>(model: &M, seeds: &[Vec<f64>], opts: MultiStartOptions) -> MaximizeOutcome {
    assert!(!seeds.is_empty(), "at least one seed is required");
    let results: Vec<(Vec<f64>, f64, bool)> = seeds
        .par_iter()
        .map(|seed| {
            let nm = nelder_mead_max(|z| model.penalized(z), seed, opts.nm_step, opts.nm);
            let start = if model.objective(&nm.x).is_finite() { nm.x.clone() } else { seed.clone() };
            let polished = polish_maxmin(model, &start, opts.polish);
            let nm_value = model.objective(&nm.x);
            if polished.value >= nm_value {
                (polished.z, polished.value, polished.converged)
            } else {
                (nm.x, nm_value, nm.converged)
            }
        })
        .collect();
    let tie = 1e-12 * (1.0 + results.iter().map(|r| r.1.abs()).fold(0.0, f64::max));
    let mut best = 0;
    for (i, r) in results.iter().enumerate().skip(1) {
        let b = &results[best];
        if r.1 > b.1 + tie || (r.1 >= b.1 - tie && lex_less(&r.0, &b.0)) {
            best = i;
        }
    }
    let (z, value, converged) = results[best].clone();
    MaximizeOutcome { z, value, converged, starts: seeds.len() }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}
