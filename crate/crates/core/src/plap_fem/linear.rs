use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use super::mesh::Mesh;
use super::quotient::DiscreteField;
use super::{EigenLabel, EigenResult, FemError};

/// Stiffness, boundary mass and mass matrices of the P1 space.
pub struct Assembled {
    pub stiffness: CsrMatrix<f64>,
    pub boundary_mass: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
}

pub fn assemble(mesh: &Mesh) -> Assembled {
    let n = mesh.n_nodes();
    let mut k = CooMatrix::new(n, n);
    let mut m = CooMatrix::new(n, n);
    let mut b = CooMatrix::new(n, n);
    for tri in &mesh.triangles {
        let p = tri.map(|i| mesh.nodes[i]);
        let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
        let g = [(p[1] - p[2]).perp(), (p[2] - p[0]).perp(), (p[0] - p[1]).perp()];
        let area = 0.5 * area2;
        for i in 0..3 {
            for j in 0..3 {
                k.push(tri[i], tri[j], g[i].dot(g[j]) / (area2 * area2) * area);
                m.push(tri[i], tri[j], area / if i == j { 6.0 } else { 12.0 });
            }
        }
    }
    for ([i, j], _) in &mesh.boundary_edges {
        let len = mesh.nodes[*i].dist(mesh.nodes[*j]);
        b.push(*i, *i, len / 3.0);
        b.push(*j, *j, len / 3.0);
        b.push(*i, *j, len / 6.0);
        b.push(*j, *i, len / 6.0);
    }
    Assembled { stiffness: CsrMatrix::from(&k), boundary_mass: CsrMatrix::from(&b), mass: CsrMatrix::from(&m) }
}

pub(crate) fn spmv(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    let (offsets, cols, vals) = (a.row_offsets(), a.col_indices(), a.values());
    for (r, yr) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in offsets[r]..offsets[r + 1] {
            s += vals[k] * x[cols[k]];
        }
        *yr = s;
    }
}

/// `a * k1 + b * k2 + ...` for matrices of the same size.
pub(crate) fn combine(terms: &[(f64, &CsrMatrix<f64>)]) -> CscMatrix<f64> {
    let n = terms[0].1.nrows();
    let mut coo = CooMatrix::new(n, n);
    for (c, a) in terms {
        for (i, j, v) in a.triplet_iter() {
            coo.push(i, j, c * v);
        }
    }
    CscMatrix::from(&coo)
}

/// Sparse Cholesky factor used as a solver.
pub(crate) struct Factor(CscCholesky<f64>);

impl Factor {
    pub(crate) fn new(a: &CscMatrix<f64>) -> Result<Self, FemError> {
        CscCholesky::factor(a).map(Factor).map_err(|e| FemError::LinearSolveFailure(format!("{e:?}")))
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(b);
        self.0.solve(&rhs).as_slice().to_vec()
    }

    pub(crate) fn solve_block(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.solve(b)
    }
}

const BLOCK: usize = 6;

/// Lowest eigenpairs of the linear Robin problem by shift-invert subspace iteration.
pub fn solve_p2_reference(mesh: &Mesh, beta: f64, k: usize) -> Result<Vec<EigenResult>, FemError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(FemError::InvalidBeta(beta));
    }
    let k = k.clamp(1, 2);
    let n = mesh.n_nodes();
    let asm = assemble(mesh);
    let a = combine(&[(1.0, &asm.stiffness), (beta * beta, &asm.boundary_mass)]);
    let a_csr = CsrMatrix::from(&a);
    let shift = 1.0;
    let op = combine(&[(1.0, &a_csr), (shift, &asm.mass)]);
    let factor = Factor::new(&op)?;

    let block = BLOCK.min(n);
    let mut x = DMatrix::from_fn(n, block, |i, j| {
        let p = mesh.nodes[i];
        ((j as f64 + 1.0) * (p.x * 1.3 + 0.7) + (j as f64) * p.y * 2.1).cos() + if j == 0 { 1.0 } else { 0.0 }
    });
    let apply = |m: &CsrMatrix<f64>, v: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(v.nrows(), v.ncols());
        let mut col = vec![0.0; v.nrows()];
        for c in 0..v.ncols() {
            spmv(m, v.column(c).as_slice(), &mut col);
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    };
    let mut prev = vec![f64::INFINITY; k];
    let mut ritz = vec![0.0; block];
    let mut vecs = x.clone();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for it in 0..500 {
        iterations = it + 1;
        let y = factor.solve_block(&apply(&asm.mass, &x));
        let ay = apply(&a_csr, &y);
        let my = apply(&asm.mass, &y);
        let ar = y.transpose() * &ay;
        let mr = y.transpose() * &my;
        let (vals, v) = generalized_eigen(&ar, &mr)?;
        vecs = &y * &v;
        // normalize columns in the mass norm to keep the block well scaled
        for c in 0..block {
            let nrm = vecs.column(c).norm();
            vecs.column_mut(c).scale_mut(1.0 / nrm);
        }
        ritz = vals;
        residual = (0..k).map(|i| ((ritz[i] - prev[i]) / ritz[i]).abs()).fold(0.0, f64::max);
        prev.copy_from_slice(&ritz[..k]);
        x = vecs.clone();
        if residual < 1e-14 {
            break;
        }
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut values: Vec<f64> = vecs.column(i).iter().copied().collect();
        orient_and_normalize(&mut values);
        out.push(EigenResult {
            p: 2.0,
            beta,
            lambda: ritz[i],
            lambda_root: ritz[i].sqrt(),
            field: DiscreteField::new(values),
            iterations,
            residual,
            label: if i == 0 { EigenLabel::First } else { EigenLabel::Second },
            h: mesh.h,
            history: Vec::new(),
        });
    }
    Ok(out)
}

/// Scale to unit max norm with the larger excursion positive.
pub(crate) fn orient_and_normalize(u: &mut [f64]) {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = u.iter().copied().fold(f64::INFINITY, f64::min);
    let s = if max >= -min { 1.0 / max } else { 1.0 / min };
    for v in u.iter_mut() {
        *v *= s;
    }
}

/// Eigenpairs of `a v = lambda m v` for small dense symmetric `a`, positive definite `m`, ascending.
fn generalized_eigen(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), FemError> {
    let msym = (m + m.transpose()) * 0.5;
    let chol = msym
        .cholesky()
        .ok_or_else(|| FemError::LinearSolveFailure("Ritz mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| FemError::LinearSolveFailure("singular Ritz factor".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = linv.transpose() * &eig.eigenvectors;
    let v = DMatrix::from_fn(w.nrows(), w.ncols(), |r, c| w[(r, order[c])]);
    Ok((vals, v))
}
