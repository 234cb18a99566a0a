//! Shared domains, random inputs and invariant checks for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use infspec::domain::{builtin_polygon, Builtin};
use infspec::geometry::{
    distance_to_boundary, euclidean_diameter, geodesic_diameter, inradius, ArcLabel, BoundaryPartition, BoundarySet,
    DistanceQuery, Point, Polygon, TOL_GEOM_REL,
};
use infspec::infty_spectrum::{
    build_minmax_path, lambda1_infty, lambda2_infty, mixed_lambda_infty,
    path_functional_sup, r2, s_omega, Cone,
};
use infspec::plap_fem::{
    cone_span_upper_bound, dlg_lower_bound, minimize_second, solver_tolerance, triangulate, DiscreteField, Mesh,
    PQuotient, SecondOptions, SolverOptions, Workspace,
};
use rand::{Rng, RngExt};

pub type Check = Result<(), String>;

/// Fails with a formatted message unless `cond` holds.
#[macro_export]
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn square() -> Polygon {
    builtin_polygon(Builtin::UnitSquare).unwrap()
}

pub fn rectangle() -> Polygon {
    builtin_polygon(Builtin::Rectangle { a: 2.0, b: 1.0 }).unwrap()
}

pub fn lshape() -> Polygon {
    builtin_polygon(Builtin::LShape).unwrap()
}

pub fn stadium(arc_n: usize) -> Polygon {
    builtin_polygon(Builtin::Stadium { r: 1.0, d: 6.0, arc_n }).unwrap()
}

pub fn named_domains(arc_n: usize) -> Vec<(&'static str, Polygon)> {
    vec![("square", square()), ("rectangle", rectangle()), ("lshape", lshape()), ("stadium", stadium(arc_n))]
}

/// Convex polygon with vertices on a rotated ellipse at the given sorted angle fractions.
pub fn convex_polygon(fractions: &[f64], a: f64, b: f64, tilt: f64) -> Polygon {
    let mut ang: Vec<f64> = fractions.iter().map(|f| 2.0 * PI * f).collect();
    ang.sort_by(f64::total_cmp);
    let pts = ang
        .iter()
        .map(|&t| {
            let (x, y) = (a * t.cos(), b * t.sin());
            Point::new(x * tilt.cos() - y * tilt.sin(), x * tilt.sin() + y * tilt.cos())
        })
        .collect();
    Polygon::new(pts).unwrap()
}

/// Star-shaped polygon with one vertex per radius at evenly spaced angles.
pub fn star_polygon(radii: &[f64]) -> Polygon {
    let n = radii.len() as f64;
    let pts = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let t = 2.0 * PI * k as f64 / n;
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    Polygon::new(pts).unwrap()
}

/// Angle fractions at least `gap` apart after sorting, built from cumulative spacings.
pub fn spaced_fractions(spacings: &[f64]) -> Vec<f64> {
    let total: f64 = spacings.iter().sum();
    let mut acc = 0.0;
    spacings
        .iter()
        .map(|s| {
            let f = acc / total;
            acc += s;
            f
        })
        .collect()
}

pub fn random_convex(rng: &mut impl Rng) -> Polygon {
    let n = rng.random_range(3..9);
    let spacings: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    convex_polygon(&spaced_fractions(&spacings), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0), rng.random_range(0.0..PI))
}

pub fn random_star(rng: &mut impl Rng) -> Polygon {
    let n = rng.random_range(5..10);
    let radii: Vec<f64> = (0..n).map(|_| rng.random_range(0.4..1.0)).collect();
    star_polygon(&radii)
}

/// Rotation by `angle` followed by translation.
#[derive(Debug, Clone, Copy)]
pub struct Motion {
    pub angle: f64,
    pub shift: Point,
}

impl Motion {
    pub fn apply(&self, x: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        Point::new(c * x.x - s * x.y, s * x.x + c * x.y) + self.shift
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Motion {
            angle: rng.random_range(0.0..2.0 * PI),
            shift: Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)),
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn grid_points(domain: &Polygon, n: usize) -> Vec<Point> {
    let (lo, hi) = domain.bbox();
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let p = Point::new(
                lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                lo.y + (hi.y - lo.y) * j as f64 / n as f64,
            );
            if domain.contains(p) {
                out.push(p);
            }
        }
    }
    out
}

fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.lex_cmp(*b));
    let mut hull: Vec<Point> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b - a).cross(q - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

// ---- geometry ----

pub fn check_distance_lipschitz(domain: &Polygon, x: Point, y: Point) -> Check {
    let q = DistanceQuery::full();
    let dx = distance_to_boundary(domain, x, &q).map_err(|e| e.to_string())?.value;
    let dy = distance_to_boundary(domain, y, &q).map_err(|e| e.to_string())?.value;
    ensure!((dx - dy).abs() <= x.dist(y) * (1.0 + 1e-12) + 1e-15, "|d(x) - d(y)| = {} > |x - y| = {}", (dx - dy).abs(), x.dist(y));
    Ok(())
}

pub fn check_inradius(domain: &Polygon) -> Check {
    let ir = inradius(domain);
    let tol = TOL_GEOM_REL * euclidean_diameter(domain).length;
    let d = BoundarySet::full(domain);
    ensure!(domain.contains(ir.center), "incenter outside");
    ensure!((d.distance(ir.center) - ir.r).abs() <= tol, "d(center) = {} vs r = {}", d.distance(ir.center), ir.r);
    for p in grid_points(domain, 80) {
        ensure!(d.distance(p) <= ir.r + tol, "grid point {p:?} at distance {} beyond r = {}", d.distance(p), ir.r);
    }
    Ok(())
}

pub fn check_rigid_geometry(domain: &Polygon, m: Motion) -> Check {
    let moved = domain.map(|x| m.apply(x)).map_err(|e| e.to_string())?;
    let pairs = [
        ("r", inradius(domain).r, inradius(&moved).r),
        ("D_e", euclidean_diameter(domain).length, euclidean_diameter(&moved).length),
        ("D_g", geodesic_diameter(domain).length, geodesic_diameter(&moved).length),
    ];
    for (name, a, b) in pairs {
        ensure!(rel_diff(a, b) <= 1e-9, "{name}: {a} vs {b} after motion");
    }
    Ok(())
}

pub fn check_convex_diameters(domain: &Polygon) -> Check {
    let (de, dg) = (euclidean_diameter(domain).length, geodesic_diameter(domain).length);
    ensure!(rel_diff(de, dg) <= 1e-9, "convex domain with D_e = {de}, D_g = {dg}");
    Ok(())
}

pub fn check_diameter_on_hull(domain: &Polygon) -> Check {
    let hull = convex_hull(domain.vertices());
    let d = euclidean_diameter(domain);
    for e in [d.pair.0, d.pair.1] {
        ensure!(hull.iter().any(|h| h.dist(e) <= 1e-12 * domain.scale()), "endpoint {e:?} is not a hull vertex");
    }
    Ok(())
}

// ---- infinity spectrum ----

fn tol_opt(domain: &Polygon, lambda: f64) -> f64 {
    // optimizer tolerance on s, carried to 1 / s
    1e-7 * euclidean_diameter(domain).length * lambda * lambda + 1e-12
}

pub fn check_beta_monotone(domain: &Polygon, betas: &[f64]) -> Check {
    let vals: Vec<f64> = betas.iter().map(|&b| lambda2_infty(domain, b)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    for k in 1..vals.len() {
        let tol = tol_opt(domain, vals[k]);
        ensure!(vals[k] >= vals[k - 1] - tol, "lambda2 drops from {} to {} between beta {} and {}", vals[k - 1], vals[k], betas[k - 1], betas[k]);
    }
    Ok(())
}

pub fn check_sandwich(domain: &Polygon, beta: f64) -> Check {
    let l2 = lambda2_infty(domain, beta).map_err(|e| e.to_string())?;
    let de = euclidean_diameter(domain).length;
    let inv_r2 = 1.0 / r2(domain).map_err(|e| e.to_string())?.r2;
    let tol = tol_opt(domain, l2);
    ensure!(2.0 / de <= l2 + tol, "lambda2 = {l2} below 2 / D_e = {}", 2.0 / de);
    ensure!(l2 <= inv_r2 + tol.max(1e-6), "lambda2 = {l2} above 1 / r2 = {inv_r2}");
    Ok(())
}

pub fn check_small_beta_lock(domain: &Polygon, fraction: f64) -> Check {
    let de = euclidean_diameter(domain).length;
    let beta = fraction * 2.0 / de;
    let l2 = lambda2_infty(domain, beta).map_err(|e| e.to_string())?;
    ensure!((l2 - 2.0 / de).abs() <= tol_opt(domain, l2).max(1e-6 * l2), "beta = {beta}: lambda2 = {l2} vs 2 / D_e = {}", 2.0 / de);
    Ok(())
}

pub fn check_large_beta(domain: &Polygon) -> Check {
    let inv_r2 = 1.0 / r2(domain).map_err(|e| e.to_string())?.r2;
    let mut prev = 0.0;
    let mut gaps = Vec::new();
    for k in 1..=6 {
        let b = 10f64.powi(k);
        let l = lambda2_infty(domain, b).map_err(|e| e.to_string())?;
        ensure!(l >= prev - tol_opt(domain, l), "lambda2 decreases at beta = {b}");
        prev = l;
        gaps.push((b, inv_r2 - l));
    }
    for &(b, g) in &gaps {
        // the gap is at most of order 1 / beta
        ensure!(g >= -1e-6 && g * b <= 2.0 * inv_r2 * inv_r2 + 1e-3, "gap {g} at beta = {b}");
    }
    ensure!(gaps[5].1.abs() <= 1e-4, "gap at beta = 1e6 is {}", gaps[5].1);
    Ok(())
}

pub fn check_first_below_second(domain: &Polygon, beta: f64) -> Check {
    let l1 = lambda1_infty(domain, beta).map_err(|e| e.to_string())?;
    let l2 = lambda2_infty(domain, beta).map_err(|e| e.to_string())?;
    ensure!(l1 <= l2 + tol_opt(domain, l2), "lambda1 = {l1} > lambda2 = {l2}");
    Ok(())
}

pub fn check_path(domain: &Polygon, beta: f64, tol: f64) -> Check {
    let mp = build_minmax_path(domain, beta, 12).map_err(|e| e.to_string())?;
    let sup = path_functional_sup(domain, &mp.path, beta, 1.0 / 64.0).map_err(|e| e.to_string())?;
    let l2 = 1.0 / mp.placement.s;
    ensure!(sup.value <= l2 + tol, "path sup {} above lambda2 = {l2}", sup.value);
    let (first, last) = (mp.path.first().unwrap(), mp.path.last().unwrap());
    for p in grid_points(domain, 40) {
        let u = mp.profile.field.value(p);
        ensure!(first.value(p) == u && last.value(p) == -u, "endpoint differs from the profile at {p:?}");
    }
    Ok(())
}

/// Dirichlet data on the edges whose index is in `dirichlet`.
pub fn edge_partition(n: usize, dirichlet: &[usize]) -> BoundaryPartition {
    let labels: Vec<ArcLabel> =
        (0..n).map(|i| if dirichlet.contains(&i) { ArcLabel::Gamma1 } else { ArcLabel::Gamma2 }).collect();
    BoundaryPartition::from_edge_labels(&labels)
}

pub fn check_rigid_spectral(domain: &Polygon, partition: &BoundaryPartition, beta: f64, m: Motion) -> Check {
    let moved = domain.map(|x| m.apply(x)).map_err(|e| e.to_string())?;
    let e = |x: infspec::infty_spectrum::InftyError| x.to_string();
    let (s0, s1) = (s_omega(domain, beta).map_err(e)?.s, s_omega(&moved, beta).map_err(e)?.s);
    ensure!(rel_diff(s0, s1) <= 1e-8, "s: {s0} vs {s1}");
    let (m0, m1) = (
        mixed_lambda_infty(domain, partition, beta).map_err(e)?,
        mixed_lambda_infty(&moved, partition, beta).map_err(e)?,
    );
    let bar = m0.error_bar.max(m1.error_bar);
    ensure!(rel_diff(m0.lambda, m1.lambda) <= 1e-8 || (m0.lambda - m1.lambda).abs() <= bar, "mixed: {} vs {}", m0.lambda, m1.lambda);
    Ok(())
}

pub fn check_cone_calculus(apex: Point, t: f64, x: Point) -> Check {
    let c = Cone::new(apex, t);
    let rho = x.dist(apex);
    if rho < 1e-6 * t || rho >= t {
        return Ok(());
    }
    let (g, h) = c.derivatives(x).ok_or("no derivatives inside the support")?;
    ensure!((g.norm() - 1.0 / t).abs() <= 1e-12 / t, "|grad C| = {} vs 1 / t = {}", g.norm(), 1.0 / t);
    let lap = h[0][0] * g.x * g.x + 2.0 * h[0][1] * g.x * g.y + h[1][1] * g.y * g.y;
    ensure!(lap.abs() <= 1e-10 / (t * t * rho), "infinity Laplacian {lap}");
    Ok(())
}

// ---- finite p ----

pub fn mesh(domain: &Polygon, h: f64) -> Mesh {
    triangulate(domain, h).unwrap()
}

pub fn check_homogeneity(mesh: &Mesh, u: &[f64], c: f64, p: f64, beta: f64) -> Check {
    let q = PQuotient::new(mesh, p, beta).map_err(|e| e.to_string())?;
    let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
    let (a, b) = (q.log_quotient(u), q.log_quotient(&cu));
    ensure!((a - b).abs() <= 1e-11 * a.abs().max(1.0), "log quotient {a} vs {b} for c = {c}");
    Ok(())
}

/// Directional derivative of the numerator against central differences.
pub fn check_gradient(mesh: &Mesh, u: &[f64], dir: &[f64], p: f64, beta: f64) -> Check {
    let q = PQuotient::new(mesh, p, beta).map_err(|e| e.to_string())?;
    let (parts, g_num, _, _) = q.log_gradients(u);
    let num = parts.ln_num.exp();
    let analytic = num * g_num.iter().zip(dir).map(|(a, b)| a * b).sum::<f64>();
    let numerator = |t: f64| {
        let v: Vec<f64> = u.iter().zip(dir).map(|(a, b)| a + t * b).collect();
        let parts = q.parts(&v);
        parts.grad_term + parts.boundary_term
    };
    let eps = 1e-5;
    let fd = (numerator(eps) - numerator(-eps)) / (2.0 * eps);
    ensure!(rel_diff(analytic, fd) <= 1e-5, "p = {p}: directional derivative {analytic} vs differences {fd}");
    Ok(())
}

/// Descent, ordering, bracketing and sign checks for one solved configuration.
pub fn check_solved(domain: &Polygon, h: f64, p: f64, beta: f64) -> Check {
    let e = |x: infspec::plap_fem::FemError| x.to_string();
    let mesh = mesh(domain, h);
    let ws = Workspace::new(&mesh, beta).map_err(e)?;
    let opts = SolverOptions::default();
    let first = ws.first(p, &opts).map_err(e)?;
    let sres = s_omega(domain, beta).map_err(|x| x.to_string())?;
    let cone = infspec::plap_fem::cone_pair_field(&mesh, &sres);
    let second = minimize_second(
        &mesh,
        p,
        beta,
        &SecondOptions { solver: opts, cone_seed: Some(cone), first: Some(first.field.clone()) },
    )
    .map_err(e)?;
    let tol = solver_tolerance(p);
    for r in [&first, &second.result] {
        ensure!(r.history.windows(2).all(|w| w[1] <= w[0]), "quotient increased during descent at p = {p}");
    }
    ensure!(first.lambda <= second.result.lambda * (1.0 + tol), "lambda1 = {} > lambda2 = {}", first.lambda, second.result.lambda);
    let upper = cone_span_upper_bound(&mesh, domain, beta, p, &sres).map_err(e)?;
    ensure!(second.result.lambda <= upper * (1.0 + 1e-6), "lambda2 = {} above the cone-span bound {upper}", second.result.lambda);
    let lower = dlg_lower_bound(domain.area(), p, beta, 2);
    ensure!(first.lambda_root >= lower - tol, "lambda1^(1/p) = {} below the volume bound {lower}", first.lambda_root);
    ensure!(first.field.values.iter().all(|&v| v > 0.0), "first eigenfunction changes sign");
    let pos = second.result.field.values.iter().any(|&v| v > 0.0);
    let neg = second.result.field.values.iter().any(|&v| v < 0.0);
    ensure!(pos && neg, "second eigenfunction has one sign");
    Ok(())
}

/// Successive differences of the second level under halving of `h` shrink.
pub fn check_refinement(domain: &Polygon, p: f64, beta: f64, h: f64) -> Check {
    let mut vals = Vec::new();
    for k in 0..3 {
        let m = mesh(domain, h / 2f64.powi(k));
        let ws = Workspace::new(&m, beta).map_err(|e| e.to_string())?;
        vals.push(ws.second_ladder(p, &SolverOptions::default()).map_err(|e| e.to_string())?.lambda);
    }
    let (d1, d2) = ((vals[0] - vals[1]).abs(), (vals[1] - vals[2]).abs());
    ensure!(d2 < d1, "differences {d1} then {d2} for h = {h}");
    Ok(())
}

pub fn random_field(mesh: &Mesh, rng: &mut impl Rng) -> DiscreteField {
    DiscreteField::new((0..mesh.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect())
}

