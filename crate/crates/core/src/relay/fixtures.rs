//! The three-state relay on a triangle.
//!
//! Input set `Ω = {u1 > 0, u2 > 0, u1 + u2 < 1}` with continuation sets
//!
//! ```text
//! C_1 = {u1 + u2 > 0.6} ∩ Ω
//! C_2 = {u1 + 0.2 u2 < 0.5} ∩ Ω
//! C_3 = {0.2 u1 + u2 < 0.5} ∩ Ω
//! ```
//!
//! Each boundary line `S_i` meets the other two lines at points `B_j`; the
//! dividing point `D_i` is the midpoint between them, so every facet lands
//! in the continuation set it switches to.

use std::collections::BTreeMap;

use super::{RelayError, RelaySpec, RelayState, StateId};
use crate::geometry::{BoundaryFacet, HalfSpace, Point, Region};

/// The triangle relay together with its named construction points.
#[derive(Debug, Clone)]
pub struct TriangleFixture {
    pub spec: RelaySpec,
    /// Vertices `A1, A2, A3` of `Ω`.
    pub vertices: [[f64; 2]; 3],
    /// `A_ij`: endpoint of `S_i` on the side of `Ω` opposite `A_j`, keyed `(i, j)`.
    pub side_points: BTreeMap<(usize, usize), [f64; 2]>,
    /// `B_i`: intersection of the two lines other than `S_i`.
    pub b: [[f64; 2]; 3],
    /// `D_i`: dividing point on `S_i`.
    pub d: [[f64; 2]; 3],
}

impl Default for TriangleFixture {
    fn default() -> Self {
        Self::new()
    }
}

impl TriangleFixture {
    pub fn new() -> Self {
        Self::build().expect("triangle fixture is well formed")
    }

    /// State id of `C_i` for `i` in `1..=3`.
    pub fn state(i: usize) -> StateId {
        StateId(i - 1)
    }

    pub fn point(p: [f64; 2]) -> Point {
        Point::from_row_slice(&p)
    }

    fn build() -> Result<Self, RelayError> {
        let omega_hs = vec![
            HalfSpace::new(&[-1.0, 0.0], 0.0)?,
            HalfSpace::new(&[0.0, -1.0], 0.0)?,
            HalfSpace::new(&[1.0, 1.0], 1.0)?,
        ];
        let omega = Region::new(2, omega_hs.clone())?;
        // own boundary first so the supporting half-space has index 0
        let boundary = [
            HalfSpace::new(&[-1.0, -1.0], -0.6)?,
            HalfSpace::new(&[1.0, 0.2], 0.5)?,
            HalfSpace::new(&[0.2, 1.0], 0.5)?,
        ];
        let c: Vec<Region> = boundary
            .iter()
            .map(|h| {
                let mut hs = vec![h.clone()];
                hs.extend(omega_hs.iter().cloned());
                Region::new(2, hs)
            })
            .collect::<Result<_, _>>()?;

        let a23 = [0.6, 0.0];
        let a32 = [0.0, 0.6];
        let a13 = [0.5, 0.0];
        let a31 = [0.375, 0.625];
        let a12 = [0.0, 0.5];
        let a21 = [0.625, 0.375];

        let b1 = [5.0 / 12.0, 5.0 / 12.0];
        let b2 = [0.125, 0.475];
        let b3 = [0.475, 0.125];
        let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let d1 = mid(b2, b3);
        let d2 = mid(b1, b3);
        let d3 = mid(b1, b2);

        let mut facets = BTreeMap::new();
        let mut put = |from: usize, to: usize, f: BoundaryFacet| {
            facets.insert((Self::state(from), Self::state(to)), f);
        };
        put(1, 2, BoundaryFacet::segment(&c[0], 0, (&d1, true), (&a32, false))?);
        put(1, 3, BoundaryFacet::segment(&c[0], 0, (&d1, false), (&a23, false))?);
        put(2, 1, BoundaryFacet::segment(&c[1], 0, (&d2, false), (&a31, false))?);
        put(2, 3, BoundaryFacet::segment(&c[1], 0, (&d2, true), (&a13, false))?);
        put(3, 1, BoundaryFacet::segment(&c[2], 0, (&d3, true), (&a21, false))?);
        put(3, 2, BoundaryFacet::segment(&c[2], 0, (&d3, false), (&a12, false))?);

        let payloads = [[1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let states = c
            .into_iter()
            .zip(payloads)
            .enumerate()
            .map(|(i, (continuation, p))| RelayState {
                label: format!("C{}", i + 1),
                payload: p.to_vec(),
                continuation,
            })
            .collect();
        let spec = RelaySpec::new(omega, states, facets)?;

        let side_points = BTreeMap::from([
            ((2, 3), a23),
            ((3, 2), a32),
            ((1, 3), a13),
            ((3, 1), a31),
            ((1, 2), a12),
            ((2, 1), a21),
        ]);
        Ok(Self {
            spec,
            vertices: [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            side_points,
            b: [b1, b2, b3],
            d: [d1, d2, d3],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dividing_points_sit_on_their_lines() {
        let fx = TriangleFixture::new();
        let [d1, d2, d3] = fx.d;
        assert!((d1[0] + d1[1] - 0.6).abs() < 1e-15);
        assert!((d2[0] + 0.2 * d2[1] - 0.5).abs() < 1e-15);
        assert!((0.2 * d3[0] + d3[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closure_flags_at_d1() {
        let fx = TriangleFixture::new();
        let s12 = fx.spec.facet(StateId(0), StateId(1)).unwrap();
        let s13 = fx.spec.facet(StateId(0), StateId(2)).unwrap();
        let d1 = TriangleFixture::point(fx.d[0]);
        let a32 = TriangleFixture::point(fx.side_points[&(3, 2)]);
        assert!(s12.contains(&d1).unwrap());
        assert!(!s13.contains(&d1).unwrap());
        assert!(!s12.contains(&a32).unwrap());
    }
}
