use std::collections::VecDeque;

use super::linear::{assemble, combine, orient_and_normalize, solve_p2_reference, Factor};
use super::mesh::Mesh;
use super::quotient::{DiscreteField, PQuotient};
use super::{EigenLabel, EigenResult, FemError};

/// Relative quotient decrease per sweep accepted as converged: `1e-9` at
/// `p = 2`, relaxed geometrically to `1e-6` at `p = 128`.
pub fn solver_tolerance(p: f64) -> f64 {
    let t = ((p / 2.0).log2() / 6.0).clamp(0.0, 1.0);
    10f64.powf(-9.0 + 3.0 * t)
}

const SWEEP: usize = 10;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Overrides [`solver_tolerance`].
    pub tol: Option<f64>,
    /// L-BFGS memory.
    pub memory: usize,
    /// Continue from `p = 2` by doubling `p` when no warm start is given.
    pub ladder: bool,
    pub warm_start: Option<DiscreteField>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 4000, tol: None, memory: 8, ladder: true, warm_start: None }
    }
}

/// Preconditioner and linear reference shared by the solves on one mesh.
pub struct Workspace<'m> {
    pub mesh: &'m Mesh,
    pub beta: f64,
    factor: Factor,
    reference: Vec<EigenResult>,
}

impl<'m> Workspace<'m> {
    pub fn new(mesh: &'m Mesh, beta: f64) -> Result<Self, FemError> {
        let asm = assemble(mesh);
        let b2 = beta * beta;
        let pre = combine(&[(1.0, &asm.stiffness), (b2, &asm.boundary_mass), (1.0, &asm.mass)]);
        let factor = Factor::new(&pre)?;
        let reference = solve_p2_reference(mesh, beta, 2)?;
        Ok(Self { mesh, beta, factor, reference })
    }

    pub fn reference(&self) -> &[EigenResult] {
        &self.reference
    }

    fn ladder(p: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut q = 4.0;
        while q < p {
            out.push(q);
            q *= 2.0;
        }
        out.push(p);
        out
    }

    pub fn first(&self, p: f64, opts: &SolverOptions) -> Result<EigenResult, FemError> {
        let (mut u, steps) = match &opts.warm_start {
            Some(w) => (w.values.clone(), vec![p]),
            None if p == 2.0 => (self.reference[0].field.values.clone(), vec![2.0]),
            None if opts.ladder => (self.reference[0].field.values.clone(), Self::ladder(p)),
            None => (self.reference[0].field.values.clone(), vec![p]),
        };
        let mut last = None;
        for q in steps {
            let r = self.descend(q, u, EigenLabel::First, opts)?;
            u = r.field.values.clone();
            last = Some(r);
        }
        Ok(last.expect("at least one step"))
    }

    /// Descent from an explicit start at one exponent.
    pub fn second_from(&self, p: f64, start: Vec<f64>, opts: &SolverOptions) -> Result<EigenResult, FemError> {
        self.descend(p, start, EigenLabel::Second, opts)
    }

    /// Second level from the linear second eigenvector, continued along the ladder.
    pub fn second_ladder(&self, p: f64, opts: &SolverOptions) -> Result<EigenResult, FemError> {
        let (mut u, steps) = match &opts.warm_start {
            Some(w) => (w.values.clone(), vec![p]),
            None if opts.ladder && p > 2.0 => (self.reference[1].field.values.clone(), Self::ladder(p)),
            None => (self.reference[1].field.values.clone(), vec![p]),
        };
        let mut last = None;
        for q in steps {
            let r = self.descend(q, u, EigenLabel::Second, opts)?;
            u = r.field.values.clone();
            last = Some(r);
        }
        Ok(last.expect("at least one step"))
    }

    fn descend(&self, p: f64, u0: Vec<f64>, label: EigenLabel, opts: &SolverOptions) -> Result<EigenResult, FemError> {
        let mut q = PQuotient::new(self.mesh, p, self.beta)?;
        q.check_field(&u0)?;
        q.fit_rule(&u0);
        let tol = opts.tol.unwrap_or_else(|| solver_tolerance(p));
        let balanced = label == EigenLabel::Second;
        let mut u = u0;
        if balanced {
            rebalance(&q, &mut u)?;
        }
        let mut eval = Eval::at(&q, &u, balanced, &self.factor)?;
        let mut history = vec![eval.f];
        let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        while iterations < opts.max_iters {
            iterations += 1;
            let mut d = self.lbfgs_direction(&eval.g, &mem, &u);
            if balanced {
                eval.project(&mut d);
            }
            let mut slope = dot(&eval.g, &d);
            if !(slope < 0.0) {
                mem.clear();
                d = self.lbfgs_direction(&eval.g, &mem, &u);
                if balanced {
                    eval.project(&mut d);
                }
                slope = dot(&eval.g, &d);
                if !(slope < 0.0) {
                    converged = true;
                    residual = 0.0;
                    break;
                }
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let ok = !balanced || rebalance(&q, &mut trial).is_ok();
                if ok && trial.iter().any(|&v| v != 0.0) {
                    if let Ok(e) = Eval::at(&q, &trial, balanced, &self.factor) {
                        if e.f <= eval.f + 1e-4 * t * slope {
                            accepted = Some((trial, e));
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            let Some((new_u, new_eval)) = accepted else {
                if mem.is_empty() {
                    converged = true;
                    residual = 0.0;
                    break;
                }
                mem.clear();
                continue;
            };
            let s: Vec<f64> = new_u.iter().zip(&u).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = new_eval.g.iter().zip(&eval.g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                mem.push_back((s, y, 1.0 / sy));
                if mem.len() > opts.memory {
                    mem.pop_front();
                }
            }
            u = new_u;
            eval = new_eval;
            history.push(eval.f);
            // the quotient is scale invariant; keep the iterate near unit size
            let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !(0.5..=2.0).contains(&m) {
                for v in u.iter_mut() {
                    *v /= m;
                }
                eval = Eval::at(&q, &u, balanced, &self.factor)?;
                mem.clear();
            }
            if history.len() > SWEEP {
                let k = history.len() - 1;
                residual = history[k - SWEEP] - history[k];
                if residual < tol {
                    converged = true;
                    break;
                }
            }
        }
        let mut values = u;
        orient_and_normalize(&mut values);
        let lambda = eval.f.exp();
        let result = EigenResult {
            p,
            beta: self.beta,
            lambda,
            lambda_root: (eval.f / p).exp(),
            field: DiscreteField::new(values),
            iterations,
            residual,
            label,
            h: self.mesh.h,
            history,
        };
        if converged {
            Ok(result)
        } else {
            Err(FemError::NonConvergence(Box::new(result)))
        }
    }

    /// Two-loop recursion with the preconditioner as the initial inverse Hessian.
    fn lbfgs_direction(&self, g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, u: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let mut r = self.factor.solve(&q);
        if let Some((s, y, _)) = mem.back() {
            let hy = self.factor.solve(y);
            let gamma = dot(s, y) / dot(y, &hy);
            for v in r.iter_mut() {
                *v *= gamma;
            }
        } else {
            // first step: move at most five percent of the current size
            let umax = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if rmax > 0.0 {
                let c = 0.05 * umax / rmax;
                for v in r.iter_mut() {
                    *v *= c;
                }
            }
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += (a - b) * si;
            }
        }
        for v in r.iter_mut() {
            *v = -*v;
        }
        r
    }
}

/// Objective `ln num - ln mass`, its gradient and the balance constraint data.
struct Eval {
    f: f64,
    g: Vec<f64>,
    /// Gradient of `ln mass_pos - ln mass_neg` and its preconditioned image.
    constraint: Option<(Vec<f64>, Vec<f64>, f64)>,
}

impl Eval {
    fn at(q: &PQuotient<'_>, u: &[f64], balanced: bool, factor: &Factor) -> Result<Eval, FemError> {
        let (lp, gn, gpos, gneg) = q.log_gradients(u);
        let f = lp.ln_num - lp.ln_mass;
        if !f.is_finite() {
            return Err(FemError::NonFiniteField);
        }
        let wp = (lp.ln_mass_pos - lp.ln_mass).exp();
        let wn = (lp.ln_mass_neg - lp.ln_mass).exp();
        let g: Vec<f64> = (0..u.len())
            .map(|i| {
                let gp = if wp > 0.0 { wp * gpos[i] } else { 0.0 };
                let gm = if wn > 0.0 { wn * gneg[i] } else { 0.0 };
                gn[i] - gp - gm
            })
            .collect();
        let constraint = if balanced {
            let c: Vec<f64> = gpos.iter().zip(&gneg).map(|(a, b)| a - b).collect();
            let pc = factor.solve(&c);
            let cpc = dot(&c, &pc);
            Some((c, pc, cpc))
        } else {
            None
        };
        Ok(Eval { f, g, constraint })
    }

    /// Removes the component of `d` that changes the balance to first order.
    fn project(&self, d: &mut [f64]) {
        if let Some((c, pc, cpc)) = &self.constraint {
            if *cpc > 0.0 {
                let mu = dot(c, d) / cpc;
                for (di, pi) in d.iter_mut().zip(pc) {
                    *di -= mu * pi;
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scales the positive part so both signs carry the same `L^p` mass.
fn rebalance(q: &PQuotient<'_>, u: &mut [f64]) -> Result<(), FemError> {
    let lp = q.log_parts(u);
    if !(lp.ln_mass_pos.is_finite() && lp.ln_mass_neg.is_finite()) {
        return Err(FemError::DegenerateSign);
    }
    let alpha = ((lp.ln_mass_neg - lp.ln_mass_pos) / q.p).exp();
    for v in u.iter_mut() {
        if *v > 0.0 {
            *v *= alpha;
        }
    }
    Ok(())
}
