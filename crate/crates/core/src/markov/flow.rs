use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use super::{ode, MarkovError};
use crate::geometry::Point;

type ClosedFn = Arc<dyn Fn(f64, f64, &Point) -> Point + Send + Sync>;
type FieldFn = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Closed(ClosedFn),
    Field(FieldFn),
}

/// A two-parameter input map `u(s, t; ξ)` with `u(s, s; ξ) = ξ` and
/// `u(s, t; u(r, s; ξ)) = u(r, t; ξ)`.
#[derive(Clone)]
pub struct SemiFlow {
    dim: usize,
    kind: Kind,
}

impl std::fmt::Debug for SemiFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            Kind::Closed(_) => "closed-form",
            Kind::Field(_) => "velocity-field",
        };
        f.debug_struct("SemiFlow")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .finish()
    }
}

impl SemiFlow {
    /// A flow given in closed form `(s, t, ξ) ↦ u(s, t; ξ)`.
    pub fn closed_form<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, f64, &Point) -> Point + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: Kind::Closed(Arc::new(f)),
        }
    }

    /// The flow of `dx/dt = v(t, x)`, integrated numerically.
    pub fn velocity_field<F>(dim: usize, v: F) -> Self
    where
        F: Fn(f64, &Point) -> Point + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: Kind::Field(Arc::new(v)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_field(&self) -> bool {
        matches!(self.kind, Kind::Field(_))
    }

    /// `v(t, x)` for velocity-field flows; zero for closed-form ones.
    pub fn velocity(&self, t: f64, x: &Point) -> Point {
        match &self.kind {
            Kind::Field(v) => v(t, x),
            Kind::Closed(_) => DVector::zeros(self.dim),
        }
    }

    pub fn eval(&self, s: f64, t: f64, xi: &Point) -> Result<Point, MarkovError> {
        if xi.len() != self.dim {
            return Err(MarkovError::DimensionMismatch {
                expected: self.dim,
                found: xi.len(),
            });
        }
        if !(s <= t) {
            return Err(MarkovError::BadInterval { s, t });
        }
        match &self.kind {
            Kind::Closed(f) => Ok(f(s, t, xi)),
            Kind::Field(v) => ode::integrate(|tau, x| Ok(v(tau, x)), s, t, xi),
        }
    }

    /// `u(s, t; ξ)` given a known point `x_r = u(s, r; ξ)`: closed forms are
    /// evaluated from `s`, velocity fields are integrated from `r`.
    pub(crate) fn advance(&self, s: f64, xi: &Point, r: f64, x_r: &Point, t: f64) -> Result<Point, MarkovError> {
        match &self.kind {
            Kind::Closed(_) => self.eval(s, t, xi),
            Kind::Field(_) => self.eval(r, t, x_r),
        }
    }

    /// Largest residual of the identity and composition axioms over random
    /// triples `r ≤ s ≤ t` in `[t0, t1]` and points in `[-radius, radius]^n`.
    pub fn axiom_residual<R: Rng>(
        &self,
        rng: &mut R,
        samples: usize,
        (t0, t1): (f64, f64),
        radius: f64,
    ) -> Result<f64, MarkovError> {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let mut ts = [
                rng.random_range(t0..=t1),
                rng.random_range(t0..=t1),
                rng.random_range(t0..=t1),
            ];
            ts.sort_by(f64::total_cmp);
            let [r, s, t] = ts;
            let xi = Point::from_fn(self.dim, |_, _| rng.random_range(-radius..=radius));
            worst = worst.max((self.eval(s, s, &xi)? - &xi).amax());
            let lhs = self.eval(s, t, &self.eval(r, s, &xi)?)?;
            let rhs = self.eval(r, t, &xi)?;
            worst = worst.max((lhs - rhs).amax());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn field_and_closed_form_agree() {
        let closed = SemiFlow::closed_form(1, |s, t, x: &Point| x * (t - s).exp());
        let field = SemiFlow::velocity_field(1, |_, x: &Point| x.clone());
        let xi = Point::from_element(1, 0.7);
        let a = closed.eval(0.2, 1.1, &xi).unwrap();
        let b = field.eval(0.2, 1.1, &xi).unwrap();
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn axioms_hold_for_rotation_field() {
        let field = SemiFlow::velocity_field(2, |_, x: &Point| Point::from_row_slice(&[-x[1], x[0]]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let res = field.axiom_residual(&mut rng, 20, (0.0, 2.0), 1.0).unwrap();
        assert!(res < 1e-8, "{res}");
    }
}
