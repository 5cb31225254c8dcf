//! Falsification-oriented checks of the relay structure.
//!
//! Set conditions are tested on seeded Monte-Carlo samples plus the vertices
//! of every continuation set; facet conditions on points sampled along each
//! facet. An empty report does not prove the conditions, a non-empty one
//! always carries a concrete witness point.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RelaySpec, StateId};
use crate::geometry::{region_subset_within, BoundaryFacet, Point, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    /// `C_α ⊄ Ω`.
    ContinuationOutsideOmega,
    /// A point of `Ω` lies in no continuation set.
    CoverGap,
    /// Two facets leaving the same state share a point.
    FacetOverlap,
    /// A point of `S_αβ` is not in `C_β`.
    FacetOutsideTarget,
    /// A point of the relative boundary of `C_α` lies in no `S_αβ`.
    BoundaryUncovered,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::ContinuationOutsideOmega => "continuation set not inside omega",
            Self::CoverGap => "continuation sets do not cover omega",
            Self::FacetOverlap => "switching facets overlap",
            Self::FacetOutsideTarget => "switching facet not inside target continuation set",
            Self::BoundaryUncovered => "relative boundary not covered by switching facets",
        };
        f.write_str(s)
    }
}

/// One failed condition with a witness point.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub from: Option<StateId>,
    pub to: Option<StateId>,
    pub witness: Vec<f64>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.kind)?;
        match (self.from, self.to) {
            (Some(a), Some(b)) => write!(f, " ({a} -> {b})")?,
            (Some(a), None) => write!(f, " (state {a})")?,
            _ => {}
        }
        write!(f, " at {:?}", self.witness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Uniform samples drawn in the bounding box.
    pub samples: usize,
    /// Samples drawn along each facet.
    pub facet_samples: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 10_000,
            facet_samples: 256,
        }
    }
}

/// Validates with the default configuration.
pub fn validate(spec: &RelaySpec) -> Vec<Violation> {
    validate_with(spec, &ValidationConfig::default())
}

pub fn validate_with(spec: &RelaySpec, cfg: &ValidationConfig) -> Vec<Violation> {
    let mut report = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = spec.dim();
    let bound = bounding_radius(spec);
    let omega = spec.omega();

    // candidate points of Ω: box samples, then vertices of every C_α
    let mut points: Vec<Point> = (0..cfg.samples)
        .map(|_| Point::from_fn(dim, |_, _| rng.random_range(-bound..=bound)))
        .collect();
    if dim <= 2 {
        for s in spec.states() {
            points.extend(s.continuation.vertices(bound).unwrap_or_default());
        }
    }

    let window = Region::whole(dim);
    for (i, s) in spec.states().iter().enumerate() {
        let a = StateId(i);
        let inside = if dim <= 2 {
            region_subset_within(&s.continuation, omega, &window).unwrap_or(false)
        } else {
            !points
                .iter()
                .any(|x| in_region(&s.continuation, x) && !in_region(omega, x))
        };
        if !inside {
            let witness = points
                .iter()
                .find(|x| {
                    s.continuation.closure_contains(x).unwrap_or(false) && !omega.closure_contains(x).unwrap_or(true)
                })
                .cloned()
                .unwrap_or_else(|| s.continuation.witness().clone());
            report.push(ViolationKind::ContinuationOutsideOmega, Some(a), None, &witness);
        }
    }

    for x in points.iter().filter(|x| in_region(omega, x)) {
        if !spec.states().iter().any(|s| in_region(&s.continuation, x)) {
            report.push(ViolationKind::CoverGap, None, None, x);
        }
    }

    for (a, b, facet) in spec.facets() {
        let pts = facet.sample(&mut rng, cfg.facet_samples, bound);
        for x in &pts {
            if !in_region(spec.continuation(b), x) {
                report.push(ViolationKind::FacetOutsideTarget, Some(a), Some(b), x);
            }
            for (c, other) in spec.facets_from(a) {
                if c > b && other.contains(x).unwrap_or(false) {
                    report.push(ViolationKind::FacetOverlap, Some(a), Some(c), x);
                }
            }
        }
    }

    for (i, s) in spec.states().iter().enumerate() {
        let a = StateId(i);
        for k in 0..s.continuation.halfspaces().len() {
            let Ok(piece) = BoundaryFacet::whole(&s.continuation, k) else {
                continue;
            };
            for x in piece.sample(&mut rng, cfg.facet_samples, bound) {
                if !in_region(omega, &x) {
                    continue;
                }
                let covered = spec.facets_from(a).any(|(_, f)| f.contains(&x).unwrap_or(false));
                if !covered {
                    report.push(ViolationKind::BoundaryUncovered, Some(a), None, &x);
                }
            }
        }
    }

    report.items
}

fn in_region(r: &Region, x: &Point) -> bool {
    r.contains(x).unwrap_or(false)
}

/// Half-width of the sampling box: twice the largest constraint offset, plus margin.
fn bounding_radius(spec: &RelaySpec) -> f64 {
    let offsets = spec
        .omega()
        .halfspaces()
        .iter()
        .chain(spec.states().iter().flat_map(|s| s.continuation.halfspaces()))
        .map(|h| h.offset().abs());
    2.0 * (1.0 + offsets.fold(0.0, f64::max))
}

/// Collects at most one violation per (kind, from, to).
#[derive(Default)]
struct Report {
    seen: BTreeSet<(ViolationKind, Option<StateId>, Option<StateId>)>,
    items: Vec<Violation>,
}

impl Report {
    fn push(&mut self, kind: ViolationKind, from: Option<StateId>, to: Option<StateId>, x: &Point) {
        if self.seen.insert((kind, from, to)) {
            self.items.push(Violation {
                kind,
                from,
                to,
                witness: x.iter().copied().collect(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_relay_is_valid() {
        let spec = RelaySpec::classic(1.0, -1.0).unwrap();
        assert!(validate(&spec).is_empty());
    }

    #[test]
    fn inverted_thresholds_leave_a_gap() {
        let spec = RelaySpec::classic(-1.0, 1.0).unwrap();
        let v = validate(&spec);
        let gap = v.iter().find(|v| v.kind == ViolationKind::CoverGap).unwrap();
        assert!(gap.witness[0] >= -1.0 && gap.witness[0] <= 1.0);
    }

    #[test]
    fn triangle_fixture_is_valid() {
        let fx = super::super::TriangleFixture::new();
        let v = validate(&fx.spec);
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn same_seed_same_report() {
        let spec = RelaySpec::classic(-0.5, 0.5).unwrap();
        let cfg = ValidationConfig {
            seed: 7,
            ..Default::default()
        };
        assert_eq!(validate_with(&spec, &cfg), validate_with(&spec, &cfg));
    }
}
