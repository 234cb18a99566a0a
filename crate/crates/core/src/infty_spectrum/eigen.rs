use super::pair::{lambda2_infty, r2, TOL_OPT_REL};
use super::InftyError;
use crate::geometry::extent::domain_grid;
use crate::geometry::{
    euclidean_diameter, geodesic_diameter, inradius, ArcLabel, BoundaryPartition, BoundarySet, Point, Polygon,
};
use crate::optim::{nelder_mead_max, NelderMeadOptions};
use rayon::prelude::*;

/// `1 / (1/beta + r)` with `r` the inradius.
pub fn lambda1_infty(domain: &Polygon, beta: f64) -> Result<f64, InftyError> {
    if !(beta > 0.0) {
        return Err(InftyError::InvalidBeta(beta));
    }
    Ok(1.0 / (1.0 / beta + inradius(domain).r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedEigenvalue {
    pub lambda: f64,
    /// Point realizing the minimum in the defining formula.
    pub argmin: Point,
    /// Whether the set where the Dirichlet part is far enough was found nonempty.
    pub far_set_nonempty: bool,
    /// Resolution of the set classification; zero for the exact reductions.
    pub error_bar: f64,
}

/// First eigenvalue with Dirichlet data on `Gamma1` and Robin data on `Gamma2`.
pub fn mixed_lambda_infty(
    domain: &Polygon,
    partition: &BoundaryPartition,
    beta: f64,
) -> Result<MixedEigenvalue, InftyError> {
    if !(beta > 0.0) {
        return Err(InftyError::InvalidBeta(beta));
    }
    let dirichlet = BoundarySet::labelled(domain, Some(partition), ArcLabel::Gamma1)?;
    let robin = BoundarySet::labelled(domain, Some(partition), ArcLabel::Gamma2)?;
    if dirichlet.is_empty() {
        let ir = inradius(domain);
        return Ok(MixedEigenvalue {
            lambda: 1.0 / (1.0 / beta + ir.r),
            argmin: ir.center,
            far_set_nonempty: true,
            error_bar: 0.0,
        });
    }
    if robin.is_empty() {
        let ir = inradius(domain);
        return Ok(MixedEigenvalue { lambda: 1.0 / ir.r, argmin: ir.center, far_set_nonempty: false, error_bar: 0.0 });
    }

    let offset = 1.0 / beta;
    let d_e = euclidean_diameter(domain).length;
    let res = d_e / 256.0;
    let tol = 1e-12 * domain.scale();
    let slack = |x: Point| dirichlet.distance(x) - offset - robin.distance(x);
    let grid = domain_grid(domain, res);
    let classified: Vec<(Point, f64, f64)> =
        grid.par_iter().map(|&x| (x, slack(x), robin.distance(x))).collect();

    let inside: Vec<&(Point, f64, f64)> = classified.iter().filter(|c| c.1 >= -tol).collect();
    if inside.is_empty() {
        let (x, d1) = classified
            .iter()
            .map(|c| (c.0, dirichlet.distance(c.0)))
            .fold((Point::default(), f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let refined = nelder_mead_max(
            |z| {
                let p = Point::new(z[0], z[1]);
                if domain.contains(p) {
                    dirichlet.distance(p)
                } else {
                    f64::NEG_INFINITY
                }
            },
            &[x.x, x.y],
            res,
            NelderMeadOptions { x_tol: 1e-9 * d_e, ..Default::default() },
        );
        let (x, d1) = if refined.value > d1 { (Point::new(refined.x[0], refined.x[1]), refined.value) } else { (x, d1) };
        return Ok(MixedEigenvalue { lambda: 1.0 / d1, argmin: x, far_set_nonempty: false, error_bar: res / (d1 * d1) });
    }

    let mut best = inside
        .iter()
        .map(|c| (c.0, c.2))
        .fold((Point::default(), f64::NEG_INFINITY), |b, c| if c.1 > b.1 || (c.1 == b.1 && c.0.lex_cmp(b.0).is_lt()) { c } else { b });
    // one bisection pass toward excluded neighbours of the best grid point
    let x0 = best.0;
    for k in 0..8 {
        let ang = k as f64 * std::f64::consts::FRAC_PI_4;
        let y = x0 + Point::new(ang.cos(), ang.sin()) * res;
        if !domain.contains(y) || slack(y) >= -tol {
            if domain.contains(y) && robin.distance(y) > best.1 {
                best = (y, robin.distance(y));
            }
            continue;
        }
        let (mut lo, mut hi) = (x0, y);
        for _ in 0..50 {
            let mid = lo.lerp(hi, 0.5);
            if slack(mid) >= -tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let d2 = robin.distance(lo);
        if d2 > best.1 {
            best = (lo, d2);
        }
    }
    Ok(MixedEigenvalue {
        lambda: 1.0 / (offset + best.1),
        argmin: best.0,
        far_set_nonempty: true,
        error_bar: res / (offset + best.1).powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The second eigenvalue sits at the lower bound `2 / D`.
    NeumannLocked,
    Intermediate,
    /// Within ten percent (relative to the two-ball radius) of the Dirichlet limit.
    DirichletLimitApproaching,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::NeumannLocked => "neumann_locked",
            Regime::Intermediate => "intermediate",
            Regime::DirichletLimitApproaching => "dirichlet_limit_approaching",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub two_over_dg: f64,
    pub two_over_de: f64,
    pub inv_r2: f64,
    pub regime: Regime,
    pub continuity_probe: Vec<(f64, f64)>,
}

/// Distance to the Dirichlet limit, relative to it, below which a report
/// calls the regime Dirichlet-like.
const DIRICHLET_BAND: f64 = 0.1;

pub fn regime_report(domain: &Polygon, beta: f64, probe: &[f64]) -> Result<RegimeReport, InftyError> {
    let lambda1 = lambda1_infty(domain, beta)?;
    let lambda2 = lambda2_infty(domain, beta)?;
    let d_e = euclidean_diameter(domain).length;
    let two_over_de = 2.0 / d_e;
    let two_over_dg = 2.0 / geodesic_diameter(domain).length;
    let inv_r2 = 1.0 / r2(domain)?.r2;
    let tol = TOL_OPT_REL * d_e * lambda2 * lambda2;
    let regime = if (lambda2 - two_over_de).abs() <= tol.max(1e-9 * lambda2) {
        Regime::NeumannLocked
    } else if (inv_r2 - lambda2) / inv_r2 <= DIRICHLET_BAND {
        Regime::DirichletLimitApproaching
    } else {
        Regime::Intermediate
    };
    let continuity_probe = probe
        .par_iter()
        .map(|&b| lambda2_infty(domain, b).map(|l| (b, l)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RegimeReport { beta, lambda1, lambda2, two_over_dg, two_over_de, inv_r2, regime, continuity_probe })
}

/// Closed form of the second eigenvalue on the convex hull of two discs of
/// radius `r` whose outer extent is `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StadiumValue {
    pub lambda: f64,
    /// Set when `d <= 4r`, where the first branch never applies.
    pub short: bool,
}

pub fn closed_form_stadium(r: f64, d: f64, beta: f64) -> Result<StadiumValue, InftyError> {
    if !(r > 0.0 && d > 2.0 * r && d.is_finite()) {
        return Err(InftyError::InvalidStadium { r, d });
    }
    if !(beta > 0.0) {
        return Err(InftyError::InvalidBeta(beta));
    }
    let short = d <= 4.0 * r;
    let lambda = if beta < 2.0 / d {
        2.0 / d
    } else if !short && beta >= 2.0 / (d - 4.0 * r) {
        1.0 / (1.0 / beta + r)
    } else {
        2.0 * beta / (1.0 + beta * d / 2.0)
    };
    Ok(StadiumValue { lambda, short })
}

/// Closed form of the second eigenvalue on a square of side `side`.
pub fn closed_form_square(side: f64, beta: f64) -> Result<f64, InftyError> {
    if !(beta > 0.0) {
        return Err(InftyError::InvalidBeta(beta));
    }
    let d = side * std::f64::consts::SQRT_2;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(if beta >= 2.0 / d { (1.0 + h) * beta / (1.0 + h * beta * d / 2.0) } else { 2.0 / d })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap()
    }

    fn square() -> Polygon {
        poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])
    }

    #[test]
    fn first_eigenvalue() {
        assert!((lambda1_infty(&square(), 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((lambda1_infty(&square(), 1e9).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn stadium_formula() {
        let v = |b| closed_form_stadium(1.0, 6.0, b).unwrap().lambda;
        assert!((v(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((v(0.5) - 0.4).abs() < 1e-15);
        assert!((v(1.0 / 3.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((v(0.25) - 1.0 / 3.0).abs() < 1e-15);
        // both sides of the upper branch point agree
        assert!((v(1.0) - 0.5).abs() < 1e-15 && (v(1.0 - 1e-12) - 0.5).abs() < 1e-11);
        assert!(matches!(closed_form_stadium(1.0, 2.0, 1.0), Err(InftyError::InvalidStadium { .. })));
        let short = closed_form_stadium(1.0, 3.0, 10.0).unwrap();
        assert!(short.short && (short.lambda - 20.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn square_formula() {
        let s2 = 2f64.sqrt();
        assert!((closed_form_square(1.0, 2.0).unwrap() - (2.0 + s2) / 2.0).abs() < 1e-15);
        assert!((closed_form_square(1.0, 1.0).unwrap() - s2).abs() < 1e-15);
        assert!((closed_form_square(1.0, s2).unwrap() - s2).abs() < 1e-14);
        assert!((closed_form_square(1.0, s2 * (1.0 - 1e-12)).unwrap() - s2).abs() < 1e-14);
    }

    #[test]
    fn mixed_reductions() {
        let sq = square();
        let all = |l| BoundaryPartition::uniform(4, l);
        let robin = mixed_lambda_infty(&sq, &all(ArcLabel::Gamma2), 2.0).unwrap();
        assert!((robin.lambda - 1.0).abs() < 1e-9);
        let dir = mixed_lambda_infty(&sq, &all(ArcLabel::Gamma1), 2.0).unwrap();
        assert!((dir.lambda - 2.0).abs() < 1e-9);
        // left edge (edge 3 runs from (0,1) to (0,0)) Dirichlet
        let left = BoundaryPartition::from_edge_labels(&[ArcLabel::Gamma2, ArcLabel::Gamma2, ArcLabel::Gamma2, ArcLabel::Gamma1]);
        let m = mixed_lambda_infty(&sq, &left, 1.0).unwrap();
        assert!(m.far_set_nonempty);
        assert!((m.lambda - 1.0).abs() < 1e-3, "{m:?}");
        assert!((m.argmin.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn regime_on_square() {
        let rep = regime_report(&square(), 0.5, &[]).unwrap();
        assert_eq!(rep.regime, Regime::NeumannLocked);
        let rep = regime_report(&square(), 1e4, &[1.0, 2.0]).unwrap();
        assert_eq!(rep.regime, Regime::DirichletLimitApproaching);
        assert!(rep.lambda1 < rep.lambda2);
        assert_eq!(rep.continuity_probe.len(), 2);
    }
}
