/// Barycentric point and weight (weights sum to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Seven-point rule, exact for polynomials of degree 5.
pub fn triangle_rule() -> Vec<TriPoint> {
    let s = 15f64.sqrt();
    let mut out = vec![TriPoint { bary: [1.0 / 3.0; 3], weight: 9.0 / 40.0 }];
    for (a, w) in [((6.0 - s) / 21.0, (155.0 - s) / 1200.0), ((6.0 + s) / 21.0, (155.0 + s) / 1200.0)] {
        let b = 1.0 - 2.0 * a;
        out.push(TriPoint { bary: [b, a, a], weight: w });
        out.push(TriPoint { bary: [a, b, a], weight: w });
        out.push(TriPoint { bary: [a, a, b], weight: w });
    }
    out
}

/// The seven-point rule on each of the `m * m` similar subtriangles.
pub fn composite_triangle_rule(m: usize) -> Vec<TriPoint> {
    let base = triangle_rule();
    if m <= 1 {
        return base;
    }
    let mf = m as f64;
    let mut out = Vec::with_capacity(base.len() * m * m);
    let w = 1.0 / (mf * mf);
    // subtriangles in a lattice of barycentric steps 1/m
    let mut push = |corners: [[f64; 3]; 3]| {
        for q in &base {
            let mut b = [0.0; 3];
            for (c, &l) in corners.iter().zip(&q.bary) {
                for k in 0..3 {
                    b[k] += l * c[k];
                }
            }
            out.push(TriPoint { bary: b, weight: q.weight * w });
        }
    };
    let node = |i: usize, j: usize| [1.0 - (i + j) as f64 / mf, i as f64 / mf, j as f64 / mf];
    for i in 0..m {
        for j in 0..(m - i) {
            push([node(i, j), node(i + 1, j), node(i, j + 1)]);
            if i + j + 1 < m {
                push([node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
            }
        }
    }
    out
}

/// Five-point Gauss-Legendre rule on `[0, 1]`, composite over `m` pieces.
pub fn line_rule(m: usize) -> Vec<(f64, f64)> {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
    let base = [(-b, wb), (-a, wa), (0.0, 128.0 / 225.0), (a, wa), (b, wb)];
    let m = m.max(1);
    let mut out = Vec::with_capacity(5 * m);
    for k in 0..m {
        for &(x, w) in &base {
            out.push(((k as f64 + 0.5 * (x + 1.0)) / m as f64, 0.5 * w / m as f64));
        }
    }
    out
}

/// Subdivision level for `|u|^p` when `u` changes by at most `oscillation`
/// (relative to its max norm) across one element.
pub fn subdivisions(p: f64, oscillation: f64) -> usize {
    ((p * oscillation).ceil() as usize).clamp(1, MAX_SUBDIVISIONS)
}

pub const MAX_SUBDIVISIONS: usize = 8;
