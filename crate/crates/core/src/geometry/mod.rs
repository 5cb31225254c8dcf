//! Continuation sets, switching facets and piecewise-linear input signals.
//!
//! Regions are open convex polytopes `{x : n_i·x < c_i}` in R^n. Half-spaces
//! are stored with unit normals so that slacks are signed Euclidean distances
//! and the boundary tolerance `EPS_GEO·(1 + |c|)` is scale-aware.

mod facet;
mod planar;
mod signal;

pub use facet::{BoundaryFacet, ClipConstraint};
pub use signal::{exit_time, Signal, TimeMap};

use nalgebra::DVector;
use thiserror::Error;

/// Points in input space.
pub type Point = DVector<f64>;

/// Relative tolerance for "on the hyperplane" tests.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("half-space normal must be finite and nonzero")]
    DegenerateNormal,
    #[error("region has empty interior")]
    EmptyRegion,
    #[error("witness {0:?} is not an interior point of the region")]
    BadWitness(Vec<f64>),
    #[error("region has no half-space with index {0}")]
    NoSuchHalfSpace(usize),
    #[error("operation not supported in dimension {0}")]
    UnsupportedDimension(usize),
    #[error("signal value at t = {0} is not inside the region")]
    NotInside(f64),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("time {t} outside [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, x: &Point) -> Result<()> {
    if x.len() != expected {
        return Err(GeometryError::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Open half-space `{x : normal·x < offset}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Point,
    offset: f64,
}

impl HalfSpace {
    /// Builds `{x : normal·x < offset}`; the pair is rescaled to a unit normal.
    pub fn new(normal: &[f64], offset: f64) -> Result<Self> {
        let normal = Point::from_row_slice(normal);
        let norm = normal.norm();
        if !(norm.is_finite() && norm > 0.0) || !offset.is_finite() {
            return Err(GeometryError::DegenerateNormal);
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    /// `{x : x < hi}` in one dimension.
    pub fn below(hi: f64) -> Self {
        Self::new(&[1.0], hi).expect("finite bound")
    }

    /// `{x : x > lo}` in one dimension.
    pub fn above(lo: f64) -> Self {
        Self::new(&[-1.0], -lo).expect("finite bound")
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed distance `normal·x − offset`; negative inside.
    pub fn slack(&self, x: &Point) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn tolerance(&self) -> f64 {
        EPS_GEO * (1.0 + self.offset.abs())
    }

    pub fn on_boundary(&self, x: &Point) -> bool {
        self.slack(x).abs() <= self.tolerance()
    }

    /// Strict membership: the point must clear the boundary band.
    pub fn contains(&self, x: &Point) -> bool {
        self.slack(x) < -self.tolerance()
    }

    pub fn closure_contains(&self, x: &Point) -> bool {
        self.slack(x) <= self.tolerance()
    }

    /// The complementary open half-space `{x : normal·x > offset}`.
    pub fn flipped(&self) -> Self {
        Self {
            normal: -&self.normal,
            offset: -self.offset,
        }
    }

    /// Orthogonal projection onto the supporting hyperplane.
    pub fn project(&self, x: &Point) -> Point {
        x - &self.normal * self.slack(x)
    }
}

/// Open convex polytope given as a finite intersection of open half-spaces.
///
/// Nonemptiness is certified by an interior witness point stored alongside
/// the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    witness: Point,
}

impl Region {
    /// All of R^n.
    pub fn whole(dim: usize) -> Self {
        Self {
            dim,
            halfspaces: Vec::new(),
            witness: Point::zeros(dim),
        }
    }

    /// Builds a region and searches for an interior witness (dimensions 1 and 2).
    pub fn new(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        for h in &halfspaces {
            if h.dim() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: h.dim(),
                });
            }
        }
        let witness = match dim {
            1 => planar::interval_witness(&halfspaces),
            2 => planar::polygon_witness(&halfspaces),
            _ if halfspaces.is_empty() => Some(Point::zeros(dim)),
            _ => return Err(GeometryError::UnsupportedDimension(dim)),
        }
        .ok_or(GeometryError::EmptyRegion)?;
        Self::with_witness(halfspaces, witness)
    }

    /// Builds a region in any dimension from a caller-supplied interior point.
    pub fn with_witness(halfspaces: Vec<HalfSpace>, witness: Point) -> Result<Self> {
        let dim = witness.len();
        for h in &halfspaces {
            if h.dim() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: h.dim(),
                });
            }
        }
        if !halfspaces.iter().all(|h| h.contains(&witness)) {
            return Err(GeometryError::BadWitness(witness.iter().copied().collect()));
        }
        Ok(Self {
            dim,
            halfspaces,
            witness,
        })
    }

    /// One-dimensional open interval; `None` bounds are infinite.
    pub fn interval(lo: Option<f64>, hi: Option<f64>) -> Result<Self> {
        let mut hs = Vec::new();
        if let Some(hi) = hi {
            hs.push(HalfSpace::new(&[1.0], hi)?);
        }
        if let Some(lo) = lo {
            hs.push(HalfSpace::new(&[-1.0], -lo)?);
        }
        Self::new(1, hs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn witness(&self) -> &Point {
        &self.witness
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        check_dim(self.dim, x)?;
        Ok(self.halfspaces.iter().all(|h| h.contains(x)))
    }

    pub fn closure_contains(&self, x: &Point) -> Result<bool> {
        check_dim(self.dim, x)?;
        Ok(self.halfspaces.iter().all(|h| h.closure_contains(x)))
    }

    /// Intersection with another region, `None` when the interior is empty.
    pub fn intersect(&self, other: &Region) -> Result<Option<Region>> {
        if other.dim != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let hs: Vec<_> = self.halfspaces.iter().chain(other.halfspaces.iter()).cloned().collect();
        if self.contains(&other.witness)? {
            return Region::with_witness(hs, other.witness.clone()).map(Some);
        }
        if other.contains(&self.witness)? {
            return Region::with_witness(hs, self.witness.clone()).map(Some);
        }
        match Region::new(self.dim, hs) {
            Ok(r) => Ok(Some(r)),
            Err(GeometryError::EmptyRegion) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Largest absolute offset among the constraints, a scale for bounding boxes.
    pub(crate) fn scale(&self) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.offset.abs())
            .fold(self.witness.amax(), f64::max)
    }

    /// Vertices of the closure clipped to the box `[-bound, bound]^n` (n ≤ 2).
    pub fn vertices(&self, bound: f64) -> Result<Vec<Point>> {
        match self.dim {
            1 => {
                let (lo, hi) = planar::interval_bounds(&self.halfspaces);
                Ok([lo.max(-bound), hi.min(bound)]
                    .into_iter()
                    .map(|v| Point::from_element(1, v))
                    .collect())
            }
            2 => Ok(planar::clipped_polygon(&self.halfspaces, bound)
                .into_iter()
                .map(|p| Point::from_row_slice(&p))
                .collect()),
            d => Err(GeometryError::UnsupportedDimension(d)),
        }
    }
}

/// Decides `(r1 ∩ window) ⊆ (r2 ∩ window)` exactly for dimensions 1 and 2.
///
/// The clipped polytope `r1 ∩ window` is enumerated by its vertices inside a
/// box far larger than every constraint offset; an open convex set lies in an
/// open half-space iff the supremum of the linear form over its closure does
/// not exceed the offset.
pub fn region_subset_within(r1: &Region, r2: &Region, window: &Region) -> Result<bool> {
    let dim = r1.dim;
    for d in [r2.dim, window.dim] {
        if d != dim {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: d,
            });
        }
    }
    let clip: Vec<HalfSpace> = r1.halfspaces.iter().chain(window.halfspaces.iter()).cloned().collect();
    match dim {
        1 => {
            let (lo, hi) = planar::interval_bounds(&clip);
            if hi - lo <= EPS_GEO * (1.0 + lo.abs().max(hi.abs()).min(1e300)) {
                return Ok(true);
            }
            Ok(r2.halfspaces.iter().all(|h| {
                let n = h.normal[0];
                let sup = if n > 0.0 { n * hi } else { n * lo };
                sup.is_finite() && sup - h.offset <= h.tolerance()
            }))
        }
        2 => {
            let scale = [r1, r2, window].iter().map(|r| r.scale()).fold(1.0, f64::max);
            let bound = 1e6 * (1.0 + scale);
            let poly = planar::clipped_polygon(&clip, bound);
            if planar::polygon_area(&poly) <= EPS_GEO * EPS_GEO {
                return Ok(true);
            }
            Ok(r2.halfspaces.iter().all(|h| {
                poly.iter().all(|p| {
                    let v = Point::from_row_slice(p);
                    h.slack(&v) <= h.tolerance()
                })
            }))
        }
        d => Err(GeometryError::UnsupportedDimension(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    fn triangle() -> Region {
        Region::new(
            2,
            vec![
                HalfSpace::new(&[-1.0, 0.0], 0.0).unwrap(),
                HalfSpace::new(&[0.0, -1.0], 0.0).unwrap(),
                HalfSpace::new(&[1.0, 1.0], 1.0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn contains_strict_interval() {
        let c = Region::interval(None, Some(1.0)).unwrap();
        assert!(c.contains(&p(&[0.0])).unwrap());
        assert!(!c.contains(&p(&[1.0])).unwrap());
        assert!(c.closure_contains(&p(&[1.0])).unwrap());
    }

    #[test]
    fn contains_triangle_and_dimension_check() {
        let omega = triangle();
        assert!(omega.contains(&p(&[0.25, 0.25])).unwrap());
        assert!(!omega.contains(&p(&[0.6, 0.6])).unwrap());
        assert_eq!(
            omega.contains(&p(&[0.25])),
            Err(GeometryError::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn empty_region_rejected() {
        assert_eq!(Region::interval(Some(2.0), Some(1.0)), Err(GeometryError::EmptyRegion));
        let hs = vec![
            HalfSpace::new(&[1.0, 0.0], 0.0).unwrap(),
            HalfSpace::new(&[-1.0, 0.0], 0.0).unwrap(),
        ];
        assert_eq!(Region::new(2, hs), Err(GeometryError::EmptyRegion));
    }

    #[test]
    fn degenerate_normal_rejected() {
        assert_eq!(HalfSpace::new(&[0.0, 0.0], 1.0), Err(GeometryError::DegenerateNormal));
    }

    #[test]
    fn witness_must_be_interior() {
        let h = HalfSpace::new(&[1.0], 1.0).unwrap();
        assert!(Region::with_witness(vec![h.clone()], p(&[0.0])).is_ok());
        assert!(Region::with_witness(vec![h], p(&[1.0])).is_err());
    }

    #[test]
    fn subset_intervals() {
        let r = |hi: f64| Region::interval(None, Some(hi)).unwrap();
        let w = |lo: f64, hi: f64| Region::interval(Some(lo), Some(hi)).unwrap();
        assert!(region_subset_within(&r(1.0), &r(2.0), &w(0.0, 3.0)).unwrap());
        assert!(!region_subset_within(&r(2.0), &r(1.0), &w(0.0, 3.0)).unwrap());
        assert!(region_subset_within(&r(2.0), &r(1.0), &w(0.0, 0.5)).unwrap());
        // unbounded window: (-inf, 2) is not inside (1, inf)
        let above = Region::interval(Some(1.0), None).unwrap();
        assert!(!region_subset_within(&r(2.0), &above, &Region::whole(1)).unwrap());
    }

    #[test]
    fn subset_planar() {
        let omega = triangle();
        let small = Region::new(
            2,
            vec![
                HalfSpace::new(&[-1.0, 0.0], 0.0).unwrap(),
                HalfSpace::new(&[0.0, -1.0], 0.0).unwrap(),
                HalfSpace::new(&[1.0, 1.0], 0.5).unwrap(),
            ],
        )
        .unwrap();
        let whole = Region::whole(2);
        assert!(region_subset_within(&small, &omega, &whole).unwrap());
        assert!(!region_subset_within(&omega, &small, &whole).unwrap());
        let corner = Region::new(
            2,
            vec![
                HalfSpace::new(&[1.0, 0.0], 0.1).unwrap(),
                HalfSpace::new(&[0.0, 1.0], 0.1).unwrap(),
            ],
        )
        .unwrap();
        // inside the corner window both clip to the same set
        assert!(region_subset_within(&omega, &small, &corner).unwrap());
    }

    #[test]
    fn subset_rejects_high_dimension() {
        let r = Region::whole(3);
        assert_eq!(
            region_subset_within(&r, &r, &r),
            Err(GeometryError::UnsupportedDimension(3))
        );
    }

    #[test]
    fn intersection_empty_and_nonempty() {
        let a = Region::interval(None, Some(1.0)).unwrap();
        let b = Region::interval(Some(2.0), None).unwrap();
        assert!(a.intersect(&b).unwrap().is_none());
        let c = Region::interval(Some(0.5), None).unwrap();
        let ac = a.intersect(&c).unwrap().unwrap();
        assert!(ac.contains(&p(&[0.75])).unwrap());
        assert!(!ac.contains(&p(&[0.25])).unwrap());
    }

    #[test]
    fn vertices_of_triangle() {
        let v = triangle().vertices(10.0).unwrap();
        assert_eq!(v.len(), 3);
        for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            assert!(v.iter().any(|q| (q - p(&corner)).norm() < 1e-12));
        }
    }
}
