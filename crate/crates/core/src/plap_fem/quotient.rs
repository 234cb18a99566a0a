use rayon::prelude::*;

use super::mesh::Mesh;
use super::quadrature::{composite_triangle_rule, line_rule, subdivisions, TriPoint, MAX_SUBDIVISIONS};
use super::FemError;
use crate::geometry::Point;

/// Nodal values of a P1 field; the mesh is passed alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Interpolates `f` at the nodes.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> f64 + Sync) -> Self {
        Self { values: mesh.nodes.par_iter().map(|&p| f(p)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The three integrals of the Robin p-Rayleigh quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientParts {
    /// Integral of `|grad u|^p`.
    pub grad_term: f64,
    /// `beta^p` times the boundary integral of `|u|^p`.
    pub boundary_term: f64,
    /// Integral of `|u|^p`.
    pub mass_term: f64,
}

/// Robin p-Rayleigh quotient of a field and its three parts.
pub fn rayleigh_quotient_p(mesh: &Mesh, u: &DiscreteField, p: f64, beta: f64) -> Result<(f64, QuotientParts), FemError> {
    let mut q = PQuotient::new(mesh, p, beta)?;
    q.check_field(&u.values)?;
    q.fit_rule(&u.values);
    let parts = q.parts(&u.values);
    Ok(((parts.grad_term + parts.boundary_term) / parts.mass_term, parts))
}

/// Logarithms of the quotient pieces; the quotient is `exp(ln_num - ln_mass)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogParts {
    pub ln_num: f64,
    pub ln_mass: f64,
    pub ln_mass_pos: f64,
    pub ln_mass_neg: f64,
}

/// Precomputed element data for repeated quotient evaluation at fixed `(p, beta)`.
pub struct PQuotient<'m> {
    pub mesh: &'m Mesh,
    pub p: f64,
    pub beta: f64,
    areas: Vec<f64>,
    grads: Vec<[Point; 3]>,
    lengths: Vec<f64>,
    tri_rule: Vec<TriPoint>,
    line: Vec<(f64, f64)>,
}

const CHUNK: usize = 2048;

impl<'m> PQuotient<'m> {
    pub fn new(mesh: &'m Mesh, p: f64, beta: f64) -> Result<Self, FemError> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(FemError::InvalidExponent(p));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(FemError::InvalidBeta(beta));
        }
        let mut areas = Vec::with_capacity(mesh.triangles.len());
        let mut grads = Vec::with_capacity(mesh.triangles.len());
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.nodes[i]);
            let area2 = (b - a).cross(c - a);
            // gradient of the hat function at each corner: rotated opposite edge over twice the area
            let g = [(b - c).perp() * (-1.0 / area2), (c - a).perp() * (-1.0 / area2), (a - b).perp() * (-1.0 / area2)];
            areas.push(0.5 * area2);
            grads.push(g);
        }
        let lengths = mesh.boundary_edges.iter().map(|(e, _)| mesh.nodes[e[0]].dist(mesh.nodes[e[1]])).collect();
        let m = MAX_SUBDIVISIONS;
        Ok(Self { mesh, p, beta, areas, grads, lengths, tri_rule: composite_triangle_rule(m), line: line_rule(m) })
    }

    /// Picks the quadrature level from the oscillation of `u` over elements.
    pub fn fit_rule(&mut self, u: &[f64]) {
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(umax > 0.0) || u.len() != self.mesh.nodes.len() {
            return;
        }
        let osc = self
            .mesh
            .triangles
            .iter()
            .map(|t| {
                let v = t.map(|i| u[i]);
                v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        let m = subdivisions(self.p, osc / umax);
        self.tri_rule = composite_triangle_rule(m);
        self.line = line_rule(m);
    }

    /// Current subdivision level of the quadrature.
    pub fn rule_points(&self) -> usize {
        self.tri_rule.len()
    }

    pub fn check_field(&self, u: &[f64]) -> Result<(), FemError> {
        if u.len() != self.mesh.nodes.len() {
            return Err(FemError::FieldLength { expected: self.mesh.nodes.len(), got: u.len() });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(FemError::NonFiniteField);
        }
        if u.iter().all(|&v| v == 0.0) {
            return Err(FemError::ZeroField);
        }
        Ok(())
    }

    fn elem_grad(&self, t: usize, u: &[f64]) -> Point {
        let tri = self.mesh.triangles[t];
        let g = &self.grads[t];
        g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]]
    }

    fn scales(&self, u: &[f64]) -> (f64, f64) {
        let gmax = (0..self.areas.len()).map(|t| self.elem_grad(t, u).norm()).fold(0.0, f64::max);
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (gmax.max(self.beta * umax), umax)
    }

    /// Sums in a fixed chunk order so results do not depend on scheduling.
    fn chunked_sum<F>(n: usize, f: F) -> [f64; 3]
    where
        F: Fn(usize) -> [f64; 3] + Sync,
    {
        let chunks: Vec<[f64; 3]> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = [0.0; 3];
                for i in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                    let v = f(i);
                    acc[0] += v[0];
                    acc[1] += v[1];
                    acc[2] += v[2];
                }
                acc
            })
            .collect();
        chunks.iter().fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }

    /// Numerator and mass pieces after dividing by `c^p` and `umax^p`.
    fn scaled_sums(&self, u: &[f64], c: f64, umax: f64) -> ([f64; 3], [f64; 3]) {
        let p = self.p;
        let tris = &self.mesh.triangles;
        let interior = Self::chunked_sum(tris.len(), |t| {
            let g = self.elem_grad(t, u).norm() / c;
            let tri = tris[t];
            let (mut pos, mut neg) = (0.0, 0.0);
            for q in &self.tri_rule {
                let v = (q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]]) / umax;
                let w = q.weight * v.abs().powf(p);
                if v > 0.0 {
                    pos += w;
                } else {
                    neg += w;
                }
            }
            let a = self.areas[t];
            [a * g.powf(p), a * pos, a * neg]
        });
        let edges = &self.mesh.boundary_edges;
        let bscale = self.beta / c;
        let boundary = Self::chunked_sum(edges.len(), |k| {
            let ([i, j], _) = edges[k];
            let mut s = 0.0;
            for &(x, w) in &self.line {
                let v = (1.0 - x) * u[i] + x * u[j];
                s += w * (bscale * v.abs()).powf(p);
            }
            [s * self.lengths[k], 0.0, 0.0]
        });
        ([interior[0], boundary[0], 0.0], [interior[1], interior[2], 0.0])
    }

    pub fn parts(&self, u: &[f64]) -> QuotientParts {
        let (c, umax) = self.scales(u);
        let (num, mass) = self.scaled_sums(u, c, umax);
        let cp = c.powf(self.p);
        QuotientParts {
            grad_term: num[0] * cp,
            boundary_term: num[1] * cp,
            mass_term: (mass[0] + mass[1]) * umax.powf(self.p),
        }
    }

    pub fn log_parts(&self, u: &[f64]) -> LogParts {
        let (c, umax) = self.scales(u);
        let (num, mass) = self.scaled_sums(u, c, umax);
        let (lc, lu) = (self.p * c.ln(), self.p * umax.ln());
        LogParts {
            ln_num: lc + (num[0] + num[1]).ln(),
            ln_mass: lu + (mass[0] + mass[1]).ln(),
            ln_mass_pos: lu + mass[0].ln(),
            ln_mass_neg: lu + mass[1].ln(),
        }
    }

    /// `ln` of the quotient.
    pub fn log_quotient(&self, u: &[f64]) -> f64 {
        let l = self.log_parts(u);
        l.ln_num - l.ln_mass
    }

    /// Gradients of `ln num`, `ln mass_pos` and `ln mass_neg` with respect to the nodal values.
    pub fn log_gradients(&self, u: &[f64]) -> (LogParts, Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.p;
        let (c, umax) = self.scales(u);
        let n = u.len();
        let tris = &self.mesh.triangles;
        // per-triangle values and corner derivatives, summed sequentially afterwards
        let contrib: Vec<([f64; 3], [[f64; 3]; 3])> = (0..tris.len())
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|t| {
                let tri = tris[t];
                let a = self.areas[t];
                let gvec = self.elem_grad(t, u) * (1.0 / c);
                let gn = gvec.norm();
                let gp2 = if gn > 0.0 { gn.powf(p - 2.0) } else { 0.0 };
                let coef = p * a * gp2 / c;
                let mut vals = [a * gp2 * gn * gn, 0.0, 0.0];
                let mut out = [[0.0; 3]; 3];
                for k in 0..3 {
                    out[0][k] = coef * gvec.dot(self.grads[t][k]);
                }
                for q in &self.tri_rule {
                    let v = (q.bary[0] * u[tri[0]] + q.bary[1] * u[tri[1]] + q.bary[2] * u[tri[2]]) / umax;
                    if v == 0.0 {
                        continue;
                    }
                    let pm1 = v.abs().powf(p - 1.0);
                    let slot = if v > 0.0 { 1 } else { 2 };
                    vals[slot] += a * q.weight * pm1 * v.abs();
                    let w = p * a * q.weight * pm1 / umax * v.signum();
                    for k in 0..3 {
                        out[slot][k] += w * q.bary[k];
                    }
                }
                (vals, out)
            })
            .collect();
        let mut sums = [0.0; 3];
        let mut g_num = vec![0.0; n];
        let mut g_pos = vec![0.0; n];
        let mut g_neg = vec![0.0; n];
        for (t, (vals, c3)) in contrib.iter().enumerate() {
            for k in 0..3 {
                sums[k] += vals[k];
                let i = tris[t][k];
                g_num[i] += c3[0][k];
                g_pos[i] += c3[1][k];
                g_neg[i] += c3[2][k];
            }
        }
        let bscale = self.beta / c;
        let mut boundary = 0.0;
        for (k, ([i, j], _)) in self.mesh.boundary_edges.iter().enumerate() {
            for &(x, w) in &self.line {
                let v = (1.0 - x) * u[*i] + x * u[*j];
                if v == 0.0 {
                    continue;
                }
                let pm1 = (bscale * v.abs()).powf(p - 1.0);
                boundary += w * self.lengths[k] * pm1 * bscale * v.abs();
                let d = w * self.lengths[k] * p * pm1 * bscale * v.signum();
                g_num[*i] += d * (1.0 - x);
                g_num[*j] += d * x;
            }
        }
        let sn = sums[0] + boundary;
        for g in &mut g_num {
            *g /= sn;
        }
        for g in &mut g_pos {
            *g /= sums[1];
        }
        for g in &mut g_neg {
            *g /= sums[2];
        }
        let (lc, lu) = (p * c.ln(), p * umax.ln());
        let parts = LogParts {
            ln_num: lc + sn.ln(),
            ln_mass: lu + (sums[1] + sums[2]).ln(),
            ln_mass_pos: lu + sums[1].ln(),
            ln_mass_neg: lu + sums[2].ln(),
        };
        (parts, g_num, g_pos, g_neg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use crate::plap_fem::triangulate;

    fn square_mesh(h: f64) -> Mesh {
        let sq = Polygon::new(vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)])
            .unwrap();
        triangulate(&sq, h).unwrap()
    }

    #[test]
    fn constants() {
        let m = square_mesh(0.1);
        let one = DiscreteField::new(vec![1.0; m.n_nodes()]);
        let (v, parts) = rayleigh_quotient_p(&m, &one, 4.0, 1.0).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!(parts.grad_term < 1e-30);
    }

    #[test]
    fn linear_field_neumann_limit() {
        let m = square_mesh(0.05);
        let x = DiscreteField::interpolate(&m, |p| p.x);
        let (v, parts) = rayleigh_quotient_p(&m, &x, 2.0, 1e-8).unwrap();
        assert!((parts.mass_term - 1.0 / 3.0).abs() < 1e-12);
        assert!((parts.grad_term - 1.0).abs() < 1e-12);
        assert!((v - 3.0).abs() < 1e-10);
    }

    #[test]
    fn homogeneous() {
        let m = square_mesh(0.1);
        let u = DiscreteField::interpolate(&m, |p| (3.0 * p.x).sin() + p.y * p.y - 0.4);
        let (a, _) = rayleigh_quotient_p(&m, &u, 8.0, 1.3).unwrap();
        let cu = DiscreteField::new(u.values.iter().map(|v| -2.5 * v).collect());
        let (b, _) = rayleigh_quotient_p(&m, &cu, 8.0, 1.3).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn rejects_zero_field() {
        let m = square_mesh(0.25);
        let z = DiscreteField::new(vec![0.0; m.n_nodes()]);
        assert!(matches!(rayleigh_quotient_p(&m, &z, 2.0, 1.0), Err(FemError::ZeroField)));
    }

    #[test]
    fn gradients_match_differences() {
        let m = square_mesh(0.2);
        let u: Vec<f64> = m.nodes.iter().map(|p| (2.0 * p.x).cos() - p.y + 0.3).collect();
        for p in [2.0, 4.0, 8.0] {
            let q = PQuotient::new(&m, p, 1.5).unwrap();
            let (_, gn, gp, gneg) = q.log_gradients(&u);
            let dir: Vec<f64> = (0..u.len()).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
            let eps = 1e-6;
            let shifted = |s: f64| -> Vec<f64> { u.iter().zip(&dir).map(|(a, b)| a + s * b).collect() };
            let (lp, lm) = (q.log_parts(&shifted(eps)), q.log_parts(&shifted(-eps)));
            let dot = |g: &[f64]| g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
            for (fd, an) in [
                ((lp.ln_num - lm.ln_num) / (2.0 * eps), dot(&gn)),
                ((lp.ln_mass_pos - lm.ln_mass_pos) / (2.0 * eps), dot(&gp)),
                ((lp.ln_mass_neg - lm.ln_mass_neg) / (2.0 * eps), dot(&gneg)),
            ] {
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "p={p}: fd {fd} analytic {an}");
            }
        }
    }
}
