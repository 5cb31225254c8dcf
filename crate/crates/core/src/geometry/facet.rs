use rand::Rng;

use super::{check_dim, GeometryError, HalfSpace, Point, Region, Result};

/// One side constraint of a facet; `closed` keeps its boundary in the facet.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipConstraint {
    pub halfspace: HalfSpace,
    pub closed: bool,
}

impl ClipConstraint {
    pub fn open(halfspace: HalfSpace) -> Self {
        Self {
            halfspace,
            closed: false,
        }
    }

    pub fn closed(halfspace: HalfSpace) -> Self {
        Self {
            halfspace,
            closed: true,
        }
    }

    fn admits(&self, x: &Point) -> bool {
        if self.closed {
            self.halfspace.closure_contains(x)
        } else {
            self.halfspace.contains(x)
        }
    }
}

/// A piece of the relative boundary of a region: the part of one supporting
/// hyperplane cut out by the region's other constraints (closed) and any
/// extra clip constraints (open or closed).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFacet {
    support_index: usize,
    hyperplane: HalfSpace,
    clip: Vec<ClipConstraint>,
}

impl BoundaryFacet {
    /// Facet on the `support_index`-th hyperplane of `owner`, further clipped by `extra`.
    pub fn new(owner: &Region, support_index: usize, extra: Vec<ClipConstraint>) -> Result<Self> {
        let hyperplane = owner
            .halfspaces()
            .get(support_index)
            .cloned()
            .ok_or(GeometryError::NoSuchHalfSpace(support_index))?;
        let mut clip: Vec<ClipConstraint> = owner
            .halfspaces()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != support_index)
            .map(|(_, h)| ClipConstraint::closed(h.clone()))
            .collect();
        for c in &extra {
            if c.halfspace.dim() != owner.dim() {
                return Err(GeometryError::DimensionMismatch {
                    expected: owner.dim(),
                    found: c.halfspace.dim(),
                });
            }
        }
        clip.extend(extra);
        Ok(Self {
            support_index,
            hyperplane,
            clip,
        })
    }

    /// The whole relative boundary piece on one hyperplane.
    pub fn whole(owner: &Region, support_index: usize) -> Result<Self> {
        Self::new(owner, support_index, Vec::new())
    }

    /// Planar segment between `a` and `b` on a hyperplane of `owner`; the flags
    /// say whether each endpoint belongs to the facet.
    pub fn segment(owner: &Region, support_index: usize, a: (&[f64], bool), b: (&[f64], bool)) -> Result<Self> {
        if owner.dim() != 2 {
            return Err(GeometryError::UnsupportedDimension(owner.dim()));
        }
        let pa = Point::from_row_slice(a.0);
        let pb = Point::from_row_slice(b.0);
        let d = &pb - &pa;
        // {d·x ≥ d·a} and {d·x ≤ d·b}
        let lower = HalfSpace::new((-&d).as_slice(), -d.dot(&pa))?;
        let upper = HalfSpace::new(d.as_slice(), d.dot(&pb))?;
        let extra = vec![
            ClipConstraint {
                halfspace: lower,
                closed: a.1,
            },
            ClipConstraint {
                halfspace: upper,
                closed: b.1,
            },
        ];
        Self::new(owner, support_index, extra)
    }

    pub fn support_index(&self) -> usize {
        self.support_index
    }

    pub fn hyperplane(&self) -> &HalfSpace {
        &self.hyperplane
    }

    pub fn clip(&self) -> &[ClipConstraint] {
        &self.clip
    }

    pub fn dim(&self) -> usize {
        self.hyperplane.dim()
    }

    /// On the hyperplane (within tolerance) and admitted by every clip constraint.
    pub fn contains(&self, x: &Point) -> Result<bool> {
        check_dim(self.dim(), x)?;
        Ok(self.hyperplane.on_boundary(x) && self.clip.iter().all(|c| c.admits(x)))
    }

    /// Membership in the topological closure (all clips treated as closed).
    pub fn closure_contains(&self, x: &Point) -> Result<bool> {
        check_dim(self.dim(), x)?;
        Ok(self.hyperplane.on_boundary(x) && self.clip.iter().all(|c| c.halfspace.closure_contains(x)))
    }

    /// Parameter interval `[lo, hi]` of the closure along the line
    /// `base + λ·dir` (planar facets), or `None` if the closure is empty.
    fn line_interval(&self) -> Option<(Point, Point, f64, f64)> {
        let n = self.hyperplane.normal();
        let base = n * self.hyperplane.offset();
        let dir = Point::from_row_slice(&[-n[1], n[0]]);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for c in &self.clip {
            let h = &c.halfspace;
            let a = h.normal().dot(&dir);
            let rhs = -h.slack(&base);
            if a.abs() < 1e-14 {
                if rhs < -h.tolerance() {
                    return None;
                }
            } else if a > 0.0 {
                hi = hi.min(rhs / a);
            } else {
                lo = lo.max(rhs / a);
            }
        }
        (lo <= hi + 1e-12).then_some((base, dir, lo, hi.max(lo)))
    }

    /// Euclidean distance from `x` to the closure of the facet; infinite if
    /// the facet is empty.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        check_dim(self.dim(), x)?;
        match self.dim() {
            1 => {
                let p = Point::from_element(1, self.hyperplane.normal()[0] * self.hyperplane.offset());
                let ok = self.clip.iter().all(|c| c.halfspace.closure_contains(&p));
                Ok(if ok { (x - p).norm() } else { f64::INFINITY })
            }
            2 => {
                let Some((base, dir, lo, hi)) = self.line_interval() else {
                    return Ok(f64::INFINITY);
                };
                let lambda = dir.dot(&(x - &base)).clamp(lo, hi);
                Ok((x - (base + dir * lambda)).norm())
            }
            _ if self.clip.is_empty() => Ok(self.hyperplane.slack(x).abs()),
            d => Err(GeometryError::UnsupportedDimension(d)),
        }
    }

    /// Random points of the facet: box samples in `[-bound, bound]^n`
    /// projected onto the hyperplane and filtered by the clips. Planar facets
    /// are sampled uniformly along their parameter interval instead.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize, bound: f64) -> Vec<Point> {
        let dim = self.dim();
        let mut out = Vec::new();
        if dim == 1 {
            let p = Point::from_element(1, self.hyperplane.normal()[0] * self.hyperplane.offset());
            if self.contains(&p).unwrap_or(false) {
                out.push(p);
            }
            return out;
        }
        if dim == 2 {
            if let Some((base, dir, lo, hi)) = self.line_interval() {
                let (lo, hi) = (lo.max(-bound), hi.min(bound));
                if lo > hi {
                    return out;
                }
                for i in 0..count {
                    let lambda = if i == 0 {
                        lo
                    } else if i == 1 {
                        hi
                    } else {
                        rng.random_range(lo..=hi)
                    };
                    let p = &base + &dir * lambda;
                    if self.contains(&p).unwrap_or(false) {
                        out.push(p);
                    }
                }
            }
            return out;
        }
        for _ in 0..count * 10 {
            if out.len() >= count {
                break;
            }
            let q = Point::from_fn(dim, |_, _| rng.random_range(-bound..=bound));
            let p = self.hyperplane.project(&q);
            if self.contains(&p).unwrap_or(false) {
                out.push(p);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn point_facet_membership() {
        let c = Region::interval(None, Some(1.0)).unwrap();
        let f = BoundaryFacet::whole(&c, 0).unwrap();
        assert!(f.contains(&p(&[1.0])).unwrap());
        assert!(!f.contains(&p(&[0.999999])).unwrap());
        assert!((f.distance(&p(&[0.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(f.distance(&p(&[1.0])).unwrap(), 0.0);
    }

    #[test]
    fn segment_distance_matches_point_segment_formula() {
        let c = Region::new(2, vec![HalfSpace::new(&[1.0, 0.0], 1.0).unwrap()]).unwrap();
        let f = BoundaryFacet::segment(&c, 0, (&[1.0, 0.0], true), (&[1.0, 1.0], true)).unwrap();
        assert!((f.distance(&p(&[0.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!((f.distance(&p(&[0.0, 2.0])).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(f.distance(&p(&[1.0, 0.5])).unwrap() < 1e-12);
    }

    #[test]
    fn half_open_segment_endpoints() {
        let c = Region::new(2, vec![HalfSpace::new(&[0.0, 1.0], 0.0).unwrap()]).unwrap();
        let f = BoundaryFacet::segment(&c, 0, (&[0.0, 0.0], true), (&[1.0, 0.0], false)).unwrap();
        assert!(f.contains(&p(&[0.0, 0.0])).unwrap());
        assert!(!f.contains(&p(&[1.0, 0.0])).unwrap());
        assert!(f.closure_contains(&p(&[1.0, 0.0])).unwrap());
        assert!(f.contains(&p(&[0.5, 0.0])).unwrap());
    }

    #[test]
    fn empty_facet_is_infinitely_far() {
        let c = Region::new(2, vec![HalfSpace::new(&[0.0, 1.0], 0.0).unwrap()]).unwrap();
        let extra = vec![
            ClipConstraint::open(HalfSpace::new(&[1.0, 0.0], 0.0).unwrap()),
            ClipConstraint::open(HalfSpace::new(&[-1.0, 0.0], -1.0).unwrap()),
        ];
        let f = BoundaryFacet::new(&c, 0, extra).unwrap();
        assert!(f.distance(&p(&[0.0, 0.0])).unwrap().is_infinite());
    }
}
