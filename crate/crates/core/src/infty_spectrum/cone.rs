use super::InftyError;
use crate::geometry::{BoundarySet, Point, Polygon};

/// Unit-height tent `(t - |x - apex|)_+ / t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub apex: Point,
    pub radius: f64,
}

impl Cone {
    pub fn new(apex: Point, radius: f64) -> Self {
        assert!(radius > 0.0, "cone radius must be positive");
        Self { apex, radius }
    }

    pub fn value(&self, x: Point) -> f64 {
        ((self.radius - x.dist(self.apex)) / self.radius).max(0.0)
    }

    pub fn lipschitz(&self) -> f64 {
        1.0 / self.radius
    }

    /// Gradient and Hessian inside the support, away from the apex.
    pub fn derivatives(&self, x: Point) -> Option<(Point, [[f64; 2]; 2])> {
        let v = x - self.apex;
        let rho = v.norm();
        if rho == 0.0 || rho >= self.radius {
            return None;
        }
        let n = v * (1.0 / rho);
        let k = 1.0 / (self.radius * rho);
        let hess = [[-(1.0 - n.x * n.x) * k, n.x * n.y * k], [n.x * n.y * k, -(1.0 - n.y * n.y) * k]];
        Some((-n * (1.0 / self.radius), hess))
    }
}

pub fn cone_value(c: Cone, x: Point) -> f64 {
    c.value(x)
}

/// Sup of the cone over the boundary, with a sampled cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeTrace {
    pub sup: f64,
    pub sampled: f64,
    /// Upper bound on `sup - sampled` from the sampling spacing.
    pub sample_error: f64,
}

/// `(t - d(apex, boundary))_+ / t`, checked against dense boundary sampling.
pub fn cone_boundary_sup(domain: &Polygon, c: Cone) -> Result<ConeTrace, InftyError> {
    if !domain.contains(c.apex) {
        return Err(InftyError::ApexOutside);
    }
    let boundary = BoundarySet::full(domain);
    let sup = c.value_at_distance(boundary.distance(c.apex));
    let spacing = (c.radius.min(domain.scale()) * 1e-3).max(domain.scale() * 1e-5);
    let sampled = boundary.samples(spacing).into_iter().map(|(p, _)| c.value(p)).fold(0.0, f64::max);
    Ok(ConeTrace { sup, sampled, sample_error: spacing / (2.0 * c.radius) })
}

impl Cone {
    fn value_at_distance(&self, d: f64) -> f64 {
        ((self.radius - d) / self.radius).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::new(vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)]).unwrap()
    }

    #[test]
    fn values() {
        let o = Point::new(0., 0.);
        assert_eq!(cone_value(Cone::new(o, 1.0), o), 1.0);
        assert_eq!(cone_value(Cone::new(o, 1.0), Point::new(2., 0.)), 0.0);
        assert_eq!(cone_value(Cone::new(o, 2.0), Point::new(1., 0.)), 0.5);
    }

    #[test]
    fn boundary_sup() {
        let sq = square();
        let c = Point::new(0.5, 0.5);
        let tr = cone_boundary_sup(&sq, Cone::new(c, 0.7)).unwrap();
        assert!((tr.sup - 2.0 / 7.0).abs() < 1e-15);
        assert!(tr.sup - tr.sampled <= tr.sample_error && tr.sampled <= tr.sup + 1e-15);
        assert_eq!(cone_boundary_sup(&sq, Cone::new(c, 0.4)).unwrap().sup, 0.0);
        for t in [0.1, 1.0, 3.0] {
            assert_eq!(cone_boundary_sup(&sq, Cone::new(Point::new(0., 0.), t)).unwrap().sup, 1.0);
        }
        assert!(matches!(
            cone_boundary_sup(&sq, Cone::new(Point::new(2., 0.), 1.0)),
            Err(InftyError::ApexOutside)
        ));
    }

    #[test]
    fn derivatives_are_radial() {
        let c = Cone::new(Point::new(0.2, 0.3), 0.8);
        let x = Point::new(0.5, 0.1);
        let (g, h) = c.derivatives(x).unwrap();
        assert!((g.norm() - 1.0 / 0.8).abs() < 1e-14);
        let dinf = g.x * (h[0][0] * g.x + h[0][1] * g.y) + g.y * (h[1][0] * g.x + h[1][1] * g.y);
        assert!(dinf.abs() < 1e-13);
        assert!(c.derivatives(c.apex).is_none());
        assert!(c.derivatives(Point::new(5., 5.)).is_none());
    }
}
