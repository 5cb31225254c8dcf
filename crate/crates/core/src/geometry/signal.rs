use super::{check_dim, GeometryError, Point, Region, Result};

/// Piecewise-linear input path `u(t)` through sampled breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    times: Vec<f64>,
    points: Vec<Point>,
}

impl Signal {
    pub fn new(times: Vec<f64>, points: Vec<Point>) -> Result<Self> {
        if times.is_empty() || times.len() != points.len() {
            return Err(GeometryError::InvalidSignal(format!(
                "{} times for {} points",
                times.len(),
                points.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(GeometryError::InvalidSignal("non-finite time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::InvalidSignal("times must be strictly increasing".into()));
        }
        let dim = points[0].len();
        for p in &points {
            check_dim(dim, p)?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(GeometryError::InvalidSignal("non-finite sample".into()));
            }
        }
        Ok(Self { times, points })
    }

    /// Scalar signal from `(time, value)` breakpoints.
    pub fn scalar(times: Vec<f64>, values: &[f64]) -> Result<Self> {
        let points = values.iter().map(|&v| Point::from_element(1, v)).collect();
        Self::new(times, points)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(GeometryError::OutOfDomain {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(())
    }

    /// Index `k` of the segment with `times[k] ≤ t < times[k+1]`; `None` at the final time.
    pub fn segment_index(&self, t: f64) -> Option<usize> {
        if t >= self.end() {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t);
        Some(k.saturating_sub(1))
    }

    pub fn at(&self, t: f64) -> Result<Point> {
        self.check_time(t)?;
        Ok(match self.segment_index(t) {
            None => self.points.last().expect("nonempty").clone(),
            Some(k) => {
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                let s = (t - t0) / (t1 - t0);
                &self.points[k] + (&self.points[k + 1] - &self.points[k]) * s
            }
        })
    }

    /// Restriction to `[start, t]`.
    pub fn truncate(&self, t: f64) -> Result<Signal> {
        self.check_time(t)?;
        let mut times: Vec<f64> = self.times.iter().copied().take_while(|&s| s < t).collect();
        let mut points: Vec<Point> = self.points[..times.len()].to_vec();
        times.push(t);
        points.push(self.at(t)?);
        Signal::new(times, points)
    }

    /// `u ∘ φ` for a piecewise-linear, strictly increasing time map `φ` whose
    /// range is the signal's domain. The result is exactly piecewise linear:
    /// breakpoints are the knots of `φ` and the preimages of the signal's knots.
    pub fn reparameterize(&self, map: &TimeMap) -> Result<Signal> {
        let (a, b) = (map.image_start(), map.image_end());
        if (a - self.start()).abs() > 1e-12 || (b - self.end()).abs() > 1e-12 {
            return Err(GeometryError::InvalidSignal(
                "time map range must match the signal domain".into(),
            ));
        }
        let mut knots: Vec<f64> = map.s.clone();
        knots.extend(self.times.iter().map(|&t| map.inverse(t)));
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
        let points = knots
            .iter()
            .map(|&s| self.at(map.eval(s).clamp(self.start(), self.end())))
            .collect::<Result<Vec<_>>>()?;
        Signal::new(knots, points)
    }
}

/// Strictly increasing piecewise-linear time change `t = φ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    s: Vec<f64>,
    t: Vec<f64>,
}

impl TimeMap {
    pub fn new(s: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if s.len() < 2 || s.len() != t.len() || !increasing(&s) || !increasing(&t) {
            return Err(GeometryError::InvalidSignal(
                "time map knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { s, t })
    }

    pub fn image_start(&self) -> f64 {
        self.t[0]
    }

    pub fn image_end(&self) -> f64 {
        *self.t.last().expect("nonempty")
    }

    fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[k - 1], xs[k]);
        ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        Self::interp(&self.s, &self.t, s)
    }

    pub fn inverse(&self, t: f64) -> f64 {
        Self::interp(&self.t, &self.s, t)
    }
}

/// First time `s ≥ t` at which the signal leaves the open region, with the
/// exit point, or `None` if it stays inside until the final time.
///
/// Each linear segment is solved exactly per half-space. A start point in the
/// boundary band counts as inside only when the current segment moves strictly
/// inward through every active constraint; otherwise the exit time is `t`.
/// A segment whose endpoint lands in the boundary band exits at that endpoint.
pub fn exit_time(signal: &Signal, region: &Region, t: f64) -> Result<Option<(f64, Point)>> {
    check_dim(region.dim(), &signal.points[0])?;
    let x = signal.at(t)?;
    let hs = region.halfspaces();
    let first = signal.segment_index(t);
    let mut skip_first = vec![false; hs.len()];
    for (i, h) in hs.iter().enumerate() {
        let g = h.slack(&x);
        if g > h.tolerance() {
            return Err(GeometryError::NotInside(t));
        }
        if g >= -h.tolerance() {
            let inward = first.is_some_and(|k| {
                let d = &signal.points[k + 1] - &signal.points[k];
                h.normal().dot(&d) < 0.0
            });
            if !inward {
                return Ok(Some((t, x)));
            }
            skip_first[i] = true;
        }
    }
    let Some(k0) = first else {
        return Ok(None);
    };
    for k in k0..signal.times.len() - 1 {
        let (a, b) = if k == k0 {
            (t, signal.times[k + 1])
        } else {
            (signal.times[k], signal.times[k + 1])
        };
        let pa = if k == k0 { x.clone() } else { signal.points[k].clone() };
        let pb = &signal.points[k + 1];
        let mut best: Option<f64> = None;
        for (i, h) in hs.iter().enumerate() {
            if k == k0 && skip_first[i] {
                continue;
            }
            let (ga, gb) = (h.slack(&pa), h.slack(pb));
            if gb < -h.tolerance() {
                continue;
            }
            let frac = if gb > 0.0 && gb > ga {
                (-ga / (gb - ga)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            best = Some(best.map_or(frac, |f: f64| f.min(frac)));
        }
        if let Some(frac) = best {
            let s = if frac >= 1.0 { b } else { a + frac * (b - a) };
            let p = if frac >= 1.0 {
                pb.clone()
            } else {
                &pa + (pb - &pa) * frac
            };
            return Ok(Some((s, p)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::HalfSpace;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::scalar(vec![0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(Signal::scalar(vec![0.0], &[]).is_err());
        assert!(Signal::scalar(vec![0.0], &[1.0]).is_ok());
        assert!(Signal::new(vec![0.0, 1.0], vec![p(&[0.0]), p(&[0.0, 1.0])]).is_err());
    }

    #[test]
    fn interpolation_and_truncation() {
        let u = Signal::scalar(vec![0.0, 1.0, 3.0], &[0.0, 2.0, -2.0]).unwrap();
        assert_eq!(u.at(0.5).unwrap()[0], 1.0);
        assert_eq!(u.at(2.0).unwrap()[0], 0.0);
        assert_eq!(u.at(3.0).unwrap()[0], -2.0);
        assert!(u.at(3.5).is_err());
        let v = u.truncate(2.0).unwrap();
        assert_eq!(v.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(v.points()[2][0], 0.0);
    }

    #[test]
    fn ramp_exits_at_threshold() {
        let u = Signal::scalar(vec![0.0, 2.0], &[0.0, 2.0]).unwrap();
        let c = Region::interval(None, Some(1.0)).unwrap();
        let (s, x) = exit_time(&u, &c, 0.0).unwrap().unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_signal_never_exits() {
        let u = Signal::scalar(vec![0.0, 5.0], &[0.2, 0.2]).unwrap();
        let c = Region::interval(None, Some(1.0)).unwrap();
        assert_eq!(exit_time(&u, &c, 0.0).unwrap(), None);
    }

    #[test]
    fn start_outside_is_an_error() {
        let u = Signal::scalar(vec![0.0, 1.0], &[2.0, 0.0]).unwrap();
        let c = Region::interval(None, Some(1.0)).unwrap();
        assert_eq!(exit_time(&u, &c, 0.0), Err(GeometryError::NotInside(0.0)));
    }

    #[test]
    fn boundary_start_rule() {
        let c = Region::interval(None, Some(1.0)).unwrap();
        let inward = Signal::scalar(vec![0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(exit_time(&inward, &c, 0.0).unwrap(), None);
        let outward = Signal::scalar(vec![0.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(exit_time(&outward, &c, 0.0).unwrap().unwrap().0, 0.0);
        let parked = Signal::scalar(vec![0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(exit_time(&parked, &c, 0.0).unwrap().unwrap().0, 0.0);
    }

    #[test]
    fn touching_at_breakpoint_exits() {
        let c = Region::interval(None, Some(1.0)).unwrap();
        let u = Signal::scalar(vec![0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        let (s, _) = exit_time(&u, &c, 0.0).unwrap().unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn planar_exit_point() {
        let c = Region::new(2, vec![HalfSpace::new(&[1.0, 1.0], 1.0).unwrap()]).unwrap();
        let u = Signal::new(vec![0.0, 1.0], vec![p(&[0.1, 0.1]), p(&[0.6, 0.6])]).unwrap();
        let (s, x) = exit_time(&u, &c, 0.0).unwrap().unwrap();
        assert!((s - 0.8).abs() < 1e-12);
        assert!((x - p(&[0.5, 0.5])).norm() < 1e-12);
    }

    #[test]
    fn time_map_roundtrip() {
        let m = TimeMap::new(vec![0.0, 1.0, 4.0], vec![0.0, 2.0, 3.0]).unwrap();
        for s in [0.0, 0.3, 1.0, 2.5, 4.0] {
            assert!((m.inverse(m.eval(s)) - s).abs() < 1e-14);
        }
        let u = Signal::scalar(vec![0.0, 1.5, 3.0], &[0.0, 3.0, 0.0]).unwrap();
        let v = u.reparameterize(&m).unwrap();
        for s in [0.0, 0.5, 0.75, 2.0, 4.0] {
            assert!((v.at(s).unwrap()[0] - u.at(m.eval(s)).unwrap()[0]).abs() < 1e-12);
        }
    }
}
