//! Interval and polygon helpers for the one- and two-dimensional cases.

use super::{HalfSpace, Point, EPS_GEO};

/// Closure bounds `[lo, hi]` of a 1-D intersection of half-spaces.
pub(crate) fn interval_bounds(hs: &[HalfSpace]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for h in hs {
        // unit normal is ±1
        let n = h.normal[0];
        if n > 0.0 {
            hi = hi.min(h.offset / n);
        } else {
            lo = lo.max(h.offset / n);
        }
    }
    (lo, hi)
}

pub(crate) fn interval_witness(hs: &[HalfSpace]) -> Option<Point> {
    let (lo, hi) = interval_bounds(hs);
    let x = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0 + lo.abs(),
        (false, true) => hi - 1.0 - hi.abs(),
        (false, false) => 0.0,
    };
    let x = Point::from_element(1, x);
    hs.iter().all(|h| h.contains(&x)).then_some(x)
}

/// Sutherland–Hodgman clip of a convex polygon against `n·x ≤ c`.
pub(crate) fn clip(poly: &[[f64; 2]], h: &HalfSpace) -> Vec<[f64; 2]> {
    let n = [h.normal[0], h.normal[1]];
    let c = h.offset;
    let f = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (fa, fb) = (f(&a), f(&b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let s = fa / (fa - fb);
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

/// Closure of the intersection clipped to the box `[-bound, bound]^2`.
pub(crate) fn clipped_polygon(hs: &[HalfSpace], bound: f64) -> Vec<[f64; 2]> {
    let mut poly = vec![[-bound, -bound], [bound, -bound], [bound, bound], [-bound, bound]];
    for h in hs {
        poly = clip(&poly, h);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

pub(crate) fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a.abs()
}

fn polygon_centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let mut a = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [cx / (3.0 * a), cy / (3.0 * a)]
}

pub(crate) fn polygon_witness(hs: &[HalfSpace]) -> Option<Point> {
    let scale = hs.iter().map(|h| h.offset.abs()).fold(1.0, f64::max);
    // try a modest box first so witnesses of bounded regions stay well scaled
    for bound in [4.0 * scale, 1e6 * scale] {
        let poly = clipped_polygon(hs, bound);
        if polygon_area(&poly) <= EPS_GEO * EPS_GEO {
            continue;
        }
        let c = polygon_centroid(&poly);
        let x = Point::from_row_slice(&c);
        if hs.iter().all(|h| h.contains(&x)) {
            return Some(x);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square_by_diagonal() {
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let h = HalfSpace::new(&[1.0, 1.0], 1.0).unwrap();
        let tri = clip(&sq, &h);
        assert!((polygon_area(&tri) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_witness_found() {
        let hs = vec![HalfSpace::new(&[1.0, 0.0], -3.0).unwrap()];
        let w = polygon_witness(&hs).unwrap();
        assert!(w[0] < -3.0);
    }
}
