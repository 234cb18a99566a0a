use std::sync::Arc;

use super::cone::Cone;
use crate::geometry::{project_on_segment, BoundarySet, Point};

/// Value, gradient and Hessian of a field at a point where it is smooth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub u: f64,
    pub grad: Point,
    pub hess: [[f64; 2]; 2],
}

impl Jet {
    const ZERO: Jet = Jet { u: 0.0, grad: Point::new(0.0, 0.0), hess: [[0.0; 2]; 2] };

    fn scaled(self, c: f64) -> Jet {
        let h = self.hess;
        Jet { u: c * self.u, grad: self.grad * c, hess: [[c * h[0][0], c * h[0][1]], [c * h[1][0], c * h[1][1]]] }
    }

    fn plus(self, o: Jet) -> Jet {
        let (a, b) = (self.hess, o.hess);
        Jet {
            u: self.u + o.u,
            grad: self.grad + o.grad,
            hess: [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]],
        }
    }
}

/// `(offset + d(x)) / peak`, with `d` the distance to the boundary.
#[derive(Debug, Clone)]
pub struct DistanceProfile {
    pub boundary: BoundarySet,
    pub offset: f64,
    pub peak: f64,
    /// A point where the profile equals one.
    pub top: Point,
}

/// Fields built from the distance profile and cones by scaling and
/// pointwise max/min.
#[derive(Debug, Clone)]
pub enum Field {
    Profile(Arc<DistanceProfile>),
    Cone(Cone),
    Scale(f64, Box<Field>),
    Max(Box<Field>, Box<Field>),
    Min(Box<Field>, Box<Field>),
    /// Sum of two fields whose supports do not overlap.
    DisjointSum(Box<Field>, Box<Field>),
}

impl Field {
    pub fn scale(self, c: f64) -> Field {
        Field::Scale(c, Box::new(self))
    }

    pub fn max(self, o: Field) -> Field {
        Field::Max(Box::new(self), Box::new(o))
    }

    pub fn min(self, o: Field) -> Field {
        Field::Min(Box::new(self), Box::new(o))
    }

    pub fn disjoint_sum(self, o: Field) -> Field {
        Field::DisjointSum(Box::new(self), Box::new(o))
    }

    pub fn value(&self, x: Point) -> f64 {
        self.value_with(x, None)
    }

    /// Value, reusing an already computed boundary distance at `x`.
    pub fn value_with(&self, x: Point, dist: Option<f64>) -> f64 {
        match self {
            Field::Profile(p) => (p.offset + dist.unwrap_or_else(|| p.boundary.distance(x))) / p.peak,
            Field::Cone(c) => c.value(x),
            Field::Scale(c, f) => c * f.value_with(x, dist),
            Field::Max(a, b) => a.value_with(x, dist).max(b.value_with(x, dist)),
            Field::Min(a, b) => a.value_with(x, dist).min(b.value_with(x, dist)),
            Field::DisjointSum(a, b) => a.value_with(x, dist) + b.value_with(x, dist),
        }
    }

    /// Lipschitz bound from the construction.
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            Field::Profile(p) => 1.0 / p.peak,
            Field::Cone(c) => c.lipschitz(),
            Field::Scale(c, f) => c.abs() * f.lipschitz_bound(),
            Field::Max(a, b) | Field::Min(a, b) | Field::DisjointSum(a, b) => {
                a.lipschitz_bound().max(b.lipschitz_bound())
            }
        }
    }

    /// Points where the leaves reach their maximum.
    pub fn peaks(&self) -> Vec<Point> {
        match self {
            Field::Profile(p) => vec![p.top],
            Field::Cone(c) => vec![c.apex],
            Field::Scale(_, f) => f.peaks(),
            Field::Max(a, b) | Field::Min(a, b) | Field::DisjointSum(a, b) => {
                let mut v = a.peaks();
                v.extend(b.peaks());
                v
            }
        }
    }

    /// Derivatives at `x`, or `None` within `guard` of a kink.
    pub fn jet(&self, x: Point, guard: f64) -> Option<Jet> {
        match self {
            Field::Profile(p) => profile_jet(p, x, guard),
            Field::Cone(c) => {
                let rho = x.dist(c.apex);
                if rho < guard || (rho - c.radius).abs() < guard {
                    None
                } else if rho > c.radius {
                    Some(Jet::ZERO)
                } else {
                    let (grad, hess) = c.derivatives(x)?;
                    Some(Jet { u: c.value(x), grad, hess })
                }
            }
            Field::Scale(c, f) => f.jet(x, guard).map(|j| j.scaled(*c)),
            Field::Max(a, b) | Field::Min(a, b) => {
                let (ja, jb) = (a.jet(x, guard)?, b.jet(x, guard)?);
                let gap = guard * (a.lipschitz_bound() + b.lipschitz_bound());
                if (ja.u - jb.u).abs() < gap {
                    return None;
                }
                let take_a = if matches!(self, Field::Max(..)) { ja.u > jb.u } else { ja.u < jb.u };
                Some(if take_a { ja } else { jb })
            }
            Field::DisjointSum(a, b) => Some(a.jet(x, guard)?.plus(b.jet(x, guard)?)),
        }
    }
}

fn profile_jet(p: &DistanceProfile, x: Point, guard: f64) -> Option<Jet> {
    let near = p.boundary.nearest(x)?;
    let d = near.distance;
    // a second, different nearest point means x is on the ridge of d
    for (k, s) in p.boundary.segments().iter().enumerate() {
        if k == near.segment {
            continue;
        }
        let (q, _) = project_on_segment(x, s.a, s.b);
        if q.dist(near.point) > guard && x.dist(q) < d + guard {
            return None;
        }
    }
    let k = 1.0 / p.peak;
    let u = (p.offset + d) * k;
    if d <= 1e-14 * (1.0 + x.norm()) {
        let n = p.boundary.segments()[near.segment].normal;
        return Some(Jet { u, grad: n * k, hess: [[0.0; 2]; 2] });
    }
    let n = (x - near.point) * (1.0 / d);
    let at_corner = near.t <= 0.0 || near.t >= 1.0;
    let hess = if at_corner {
        let c = k / d;
        [[(1.0 - n.x * n.x) * c, -n.x * n.y * c], [-n.x * n.y * c, (1.0 - n.y * n.y) * c]]
    } else {
        [[0.0; 2]; 2]
    };
    Some(Jet { u, grad: n * k, hess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use crate::infty_spectrum::first_eigenfunction_profile;

    fn square() -> Polygon {
        Polygon::new(vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(1., 1.), Point::new(0., 1.)]).unwrap()
    }

    fn check_against_differences(f: &Field, points: &[Point]) {
        let e = 1e-5;
        for &x in points {
            let j = f.jet(x, 1e-3).expect("smooth point");
            let dx = Point::new(e, 0.0);
            let dy = Point::new(0.0, e);
            let gx = (f.value(x + dx) - f.value(x - dx)) / (2.0 * e);
            let gy = (f.value(x + dy) - f.value(x - dy)) / (2.0 * e);
            assert!((j.grad.x - gx).abs() < 1e-7 && (j.grad.y - gy).abs() < 1e-7, "{x:?}");
            assert!((j.u - f.value(x)).abs() < 1e-14);
            let hxx = (f.value(x + dx) - 2.0 * f.value(x) + f.value(x - dx)) / (e * e);
            assert!((j.hess[0][0] - hxx).abs() < 1e-3, "{x:?} {} {hxx}", j.hess[0][0]);
        }
    }

    #[test]
    fn jets_match_differences() {
        let prof = first_eigenfunction_profile(&square(), 2.0).unwrap();
        let cone = Field::Cone(Cone::new(Point::new(0.3, 0.4), 0.25));
        let pts = [Point::new(0.2, 0.45), Point::new(0.41, 0.33), Point::new(0.15, 0.55)];
        check_against_differences(&prof.field, &pts);
        check_against_differences(&cone, &pts);
        let glued = prof.field.clone().scale(0.5).max(cone.clone());
        check_against_differences(&glued, &pts);
    }

    #[test]
    fn kinks_have_no_jet() {
        let cone = Field::Cone(Cone::new(Point::new(0.5, 0.5), 0.25));
        assert!(cone.jet(Point::new(0.5, 0.5), 1e-3).is_none());
        assert!(cone.jet(Point::new(0.75, 0.5), 1e-3).is_none());
        let prof = first_eigenfunction_profile(&square(), 1.0).unwrap();
        // the diagonal is a ridge of the distance function
        assert!(prof.field.jet(Point::new(0.2, 0.2), 1e-3).is_none());
    }

    #[test]
    fn lipschitz_bounds_hold() {
        let prof = first_eigenfunction_profile(&square(), 2.0).unwrap();
        let cone = Field::Cone(Cone::new(Point::new(0.3, 0.4), 0.25));
        let f = prof.field.clone().min(cone.scale(-2.0));
        let l = f.lipschitz_bound();
        let pts: Vec<Point> = (0..20).flat_map(|i| (0..20).map(move |j| Point::new(i as f64 / 19.0, j as f64 / 19.0))).collect();
        for a in &pts {
            for b in &pts {
                if a != b {
                    assert!((f.value(*a) - f.value(*b)).abs() <= l * a.dist(*b) * (1.0 + 1e-12));
                }
            }
        }
    }
}
