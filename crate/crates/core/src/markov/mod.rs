//! Stochastic relays: impulsive forward Kolmogorov equations along a
//! semi-flow, and fundamental matrices of impulsive linear systems.
//!
//! Conventions: the generator is `Q_γβ = φ_γ g_γβ` off the diagonal and
//! `Q_ββ = -φ_β`, so rows of `π` evolve as `π' = πQ` and jump as
//! `π(t+) = π(t−)P`. The transposed form `ψ = πᵀ` uses `A = Qᵀ`, `B = Pᵀ`.

mod flow;
mod impulsive;
mod ode;

pub use flow::SemiFlow;
pub use impulsive::{
    enumerate_paths, fundamental_matrix_product, fundamental_matrix_series, fundamental_matrix_series_uncorrected,
    jump_propagator, kernel, ImpulsiveSystem, SeriesResult, MAX_SERIES_TERMS,
};
pub use ode::RK4_TOL;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{BoundaryFacet, GeometryError, Point};

/// Row sums of a transition matrix must be 1 within this tolerance.
pub const EPS_PROB: f64 = 1e-8;
/// Entries above `-EPS_NEG` are clipped to zero; below it they are an error.
pub const EPS_NEG: f64 = 1e-10;
/// Bisection tolerance for crossing times.
pub const CROSSING_TOL: f64 = 1e-10;
pub const MAX_CROSSINGS: usize = 10_000;
const SCAN_SAMPLES: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("intensity of state {state} at t = {t} is {value}")]
    InvalidIntensity { t: f64, state: usize, value: f64 },
    #[error("jump kernel row {row} at t = {t}: {reason}")]
    InvalidJumpKernel { t: f64, row: usize, reason: String },
    #[error("impulse matrix {index} at t = {t}: {reason}")]
    InvalidImpulseMatrix { t: f64, index: usize, reason: String },
    #[error("trajectory grazes impulse set {impulse} near t = {time}")]
    Grazing { time: f64, impulse: usize },
    #[error("more than {0} impulse crossings")]
    TooManyCrossings(usize),
    #[error("row {row} of the transition matrix sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("transition matrix entry ({row}, {col}) is {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("need s <= t, got s = {s}, t = {t}")]
    BadInterval { s: f64, t: f64 },
    #[error("time {t} outside horizon [{start}, {end}]")]
    OutsideHorizon { t: f64, start: f64, end: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("integration on [{t0}, {t1}] did not converge")]
    NotConverged { t0: f64, t1: f64 },
    #[error("series did not converge in {terms} terms (last term norm {last_norm:e})")]
    SeriesNotConverged { terms: usize, last_norm: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("member '{label}': {source}")]
    Member {
        label: String,
        #[source]
        source: Box<MarkovError>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type VecFn = Arc<dyn Fn(f64, &Point) -> DVector<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(f64, &Point) -> DMatrix<f64> + Send + Sync>;

/// Where impulses happen: at a fixed time or when the input crosses a facet.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpulseSurface {
    Time(f64),
    Facet(BoundaryFacet),
}

/// One component of the impulse set with its jump matrix `p(t, x)`.
#[derive(Clone)]
pub struct ImpulseSet {
    pub surface: ImpulseSurface,
    pub p: MatFn,
}

impl std::fmt::Debug for ImpulseSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImpulseSet")
            .field("surface", &self.surface)
            .finish_non_exhaustive()
    }
}

/// Intensities `φ`, jump kernel `g` and impulse set of a stochastic relay.
#[derive(Clone)]
pub struct MarkovField {
    states: usize,
    intensities: VecFn,
    jump_kernel: MatFn,
    impulses: Vec<ImpulseSet>,
}

impl std::fmt::Debug for MarkovField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MarkovField")
            .field("states", &self.states)
            .field("impulses", &self.impulses)
            .finish_non_exhaustive()
    }
}

impl MarkovField {
    pub fn new(states: usize, intensities: VecFn, jump_kernel: MatFn, impulses: Vec<ImpulseSet>) -> Self {
        Self {
            states,
            intensities,
            jump_kernel,
            impulses,
        }
    }

    /// Constant intensities and jump kernel, no impulses.
    pub fn constant(phi: DVector<f64>, g: DMatrix<f64>) -> Self {
        let n = phi.len();
        Self::new(
            n,
            Arc::new(move |_, _| phi.clone()),
            Arc::new(move |_, _| g.clone()),
            Vec::new(),
        )
    }

    /// Symmetric two-state chain with switching rate `lambda`.
    pub fn symmetric_two_state(lambda: f64) -> Self {
        Self::constant(
            DVector::from_element(2, lambda),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
    }

    pub fn with_impulse(mut self, surface: ImpulseSurface, p: MatFn) -> Self {
        self.impulses.push(ImpulseSet { surface, p });
        self
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn impulses(&self) -> &[ImpulseSet] {
        &self.impulses
    }

    /// Validated generator `Q(t, x)`.
    pub fn generator(&self, t: f64, x: &Point) -> Result<DMatrix<f64>, MarkovError> {
        let n = self.states;
        let phi = (self.intensities)(t, x);
        let g = (self.jump_kernel)(t, x);
        if phi.len() != n {
            return Err(MarkovError::DimensionMismatch {
                expected: n,
                found: phi.len(),
            });
        }
        if g.shape() != (n, n) {
            return Err(MarkovError::DimensionMismatch {
                expected: n,
                found: g.nrows(),
            });
        }
        let mut q = DMatrix::zeros(n, n);
        for a in 0..n {
            let rate = phi[a];
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(MarkovError::InvalidIntensity {
                    t,
                    state: a,
                    value: rate,
                });
            }
            let row = g.row(a);
            let bad = |reason: String| MarkovError::InvalidJumpKernel { t, row: a, reason };
            if row[a].abs() > 1e-12 {
                return Err(bad(format!("diagonal entry {}", row[a])));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= -1e-12)) {
                return Err(bad(format!("entry {v}")));
            }
            let sum: f64 = row.iter().sum();
            // an absorbing state may leave its row empty
            let absorbing = rate == 0.0 && sum == 0.0;
            if !absorbing && (sum - 1.0).abs() > 1e-9 {
                return Err(bad(format!("off-diagonal sum {sum}")));
            }
            for b in 0..n {
                if b != a {
                    q[(a, b)] = rate * row[b];
                }
            }
            q[(a, a)] = -rate;
        }
        Ok(q)
    }

    /// Validated impulse matrix `P(t, x)` of impulse set `index`.
    pub fn impulse_matrix(&self, index: usize, t: f64, x: &Point) -> Result<DMatrix<f64>, MarkovError> {
        let p = (self.impulses[index].p)(t, x);
        let n = self.states;
        let bad = |reason: String| MarkovError::InvalidImpulseMatrix { t, index, reason };
        if p.shape() != (n, n) {
            return Err(bad(format!("shape {:?}", p.shape())));
        }
        for r in 0..n {
            if let Some(v) = p.row(r).iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(bad(format!("entry {v} in row {r}")));
            }
            let sum: f64 = p.row(r).iter().sum();
            if (sum - 1.0).abs() > EPS_PROB {
                return Err(bad(format!("row {r} sums to {sum}")));
            }
        }
        Ok(p)
    }
}

/// Checks row-stochasticity, clipping tiny negative entries to zero.
pub fn check_stochastic(mut pi: DMatrix<f64>) -> Result<DMatrix<f64>, MarkovError> {
    for r in 0..pi.nrows() {
        for c in 0..pi.ncols() {
            let v = pi[(r, c)];
            if v < -EPS_NEG || !v.is_finite() {
                return Err(MarkovError::NegativeEntry {
                    row: r,
                    col: c,
                    value: v,
                });
            }
            if v < 0.0 {
                log::debug!("clipping entry ({r}, {c}) = {v:e} to zero");
                pi[(r, c)] = 0.0;
            }
        }
        let sum: f64 = pi.row(r).iter().sum();
        if (sum - 1.0).abs() > EPS_PROB {
            return Err(MarkovError::NotStochastic { row: r, sum });
        }
    }
    Ok(pi)
}

/// An impulse found on the trajectory: time, impulse-set index, input point.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseHit {
    pub time: f64,
    pub index: usize,
    pub point: Point,
}

/// Impulses met by `τ ↦ (τ, u(s, τ; ξ))` for `τ ∈ (s, t]`, sorted by time
/// and then by impulse index.
pub fn detect_impulses(
    field: &MarkovField,
    flow: &SemiFlow,
    s: f64,
    t: f64,
    xi: &Point,
) -> Result<Vec<ImpulseHit>, MarkovError> {
    if !(s <= t) {
        return Err(MarkovError::BadInterval { s, t });
    }
    let mut hits = Vec::new();
    if t == s {
        return Ok(hits);
    }
    let facets: Vec<(usize, &BoundaryFacet)> = field
        .impulses
        .iter()
        .enumerate()
        .filter_map(|(i, imp)| match &imp.surface {
            ImpulseSurface::Facet(f) => Some((i, f)),
            ImpulseSurface::Time(_) => None,
        })
        .collect();

    for (i, imp) in field.impulses.iter().enumerate() {
        if let ImpulseSurface::Time(tau) = imp.surface {
            if s < tau && tau <= t {
                hits.push(ImpulseHit {
                    time: tau,
                    index: i,
                    point: flow.eval(s, tau, xi)?,
                });
            }
        }
    }

    if !facets.is_empty() {
        let times: Vec<f64> = (0..=SCAN_SAMPLES)
            .map(|k| s + (t - s) * k as f64 / SCAN_SAMPLES as f64)
            .collect();
        let mut xs = Vec::with_capacity(times.len());
        xs.push(xi.clone());
        for k in 1..times.len() {
            let x = flow.advance(s, xi, times[k - 1], &xs[k - 1], times[k])?;
            xs.push(x);
        }
        for &(idx, facet) in &facets {
            scan_facet(flow, s, xi, &times, &xs, idx, facet, &mut hits)?;
            if hits.len() > MAX_CROSSINGS {
                return Err(MarkovError::TooManyCrossings(MAX_CROSSINGS));
            }
        }
    }
    if hits.len() > MAX_CROSSINGS {
        return Err(MarkovError::TooManyCrossings(MAX_CROSSINGS));
    }
    hits.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.index.cmp(&b.index)));
    Ok(hits)
}

#[allow(clippy::too_many_arguments)]
fn scan_facet(
    flow: &SemiFlow,
    s: f64,
    xi: &Point,
    times: &[f64],
    xs: &[Point],
    idx: usize,
    facet: &BoundaryFacet,
    hits: &mut Vec<ImpulseHit>,
) -> Result<(), MarkovError> {
    let h = facet.hyperplane();
    let tol = h.tolerance();
    let g: Vec<f64> = xs.iter().map(|x| h.slack(x)).collect();
    let crosses = |k: usize| (g[k - 1] < 0.0 && g[k] >= 0.0) || (g[k - 1] > 0.0 && g[k] <= 0.0);
    let on_facet = |x: &Point| facet.contains(&h.project(x)).unwrap_or(false);
    let point_at = |k: usize, tau: f64| flow.advance(s, xi, times[k], &xs[k], tau);

    for k in 1..times.len() {
        if crosses(k) {
            let (mut a, mut b) = (times[k - 1], times[k]);
            let ga = g[k - 1];
            while b - a > CROSSING_TOL {
                let m = 0.5 * (a + b);
                let gm = h.slack(&point_at(k - 1, m)?);
                if (gm < 0.0) == (ga < 0.0) && gm != 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let tau = if g[k] == 0.0 && b == times[k] { b } else { 0.5 * (a + b) };
            let x = point_at(k - 1, tau)?;
            if on_facet(&x) {
                hits.push(ImpulseHit {
                    time: tau,
                    index: idx,
                    point: x,
                });
            }
            continue;
        }
        // no sign change: look for a tangential touch
        let near_cross = |j: usize| j >= 1 && j < times.len() && crosses(j);
        if near_cross(k + 1) {
            continue;
        }
        let interior = k + 1 < times.len();
        let is_min = interior && g[k].abs() < g[k - 1].abs() && g[k].abs() <= g[k + 1].abs();
        let touching = g[k].abs() <= tol && !(k + 1 == times.len() && g[k] == 0.0);
        if touching && on_facet(&xs[k]) {
            return Err(MarkovError::Grazing {
                time: times[k],
                impulse: idx,
            });
        }
        if is_min {
            let (tau, gmin) = golden_min(
                |tau| Ok(h.slack(&point_at(k - 1, tau)?).abs()),
                times[k - 1],
                times[k + 1],
            )?;
            if gmin <= tol && on_facet(&point_at(k - 1, tau)?) {
                return Err(MarkovError::Grazing {
                    time: tau,
                    impulse: idx,
                });
            }
        }
    }
    Ok(())
}

fn golden_min<F>(mut f: F, mut a: f64, mut b: f64) -> Result<(f64, f64), MarkovError>
where
    F: FnMut(f64) -> Result<f64, MarkovError>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > CROSSING_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let m = 0.5 * (a + b);
    Ok((m, f(m)?))
}

/// Strictly increasing impulse times in `(s, T]`.
pub fn detect_impulse_times(
    field: &MarkovField,
    flow: &SemiFlow,
    s: f64,
    t_end: f64,
    xi: &Point,
) -> Result<Vec<f64>, MarkovError> {
    let mut times: Vec<f64> = detect_impulses(field, flow, s, t_end, xi)?
        .into_iter()
        .map(|h| h.time)
        .collect();
    times.dedup();
    Ok(times)
}

/// Transition matrix `π(s, t, u(s, t; ξ))` of the semi-flow Kolmogorov
/// equations with impulses.
///
/// Impulses met at times in `(s, t]` are applied, so the result is the right
/// limit at `t`. Smooth pieces are integrated jointly with the flow when the
/// flow is given by a velocity field.
pub fn propagate(
    field: &MarkovField,
    flow: &SemiFlow,
    s: f64,
    t: f64,
    xi: &Point,
) -> Result<DMatrix<f64>, MarkovError> {
    if !(s <= t) {
        return Err(MarkovError::BadInterval { s, t });
    }
    if xi.len() != flow.dim() {
        return Err(MarkovError::DimensionMismatch {
            expected: flow.dim(),
            found: xi.len(),
        });
    }
    let n = field.states;
    if t == s {
        return Ok(DMatrix::identity(n, n));
    }
    let hits = detect_impulses(field, flow, s, t, xi)?;
    let nn = n * n;
    let dim = flow.dim();
    let joint = flow.is_field();

    let mut y = DVector::zeros(nn + if joint { dim } else { 0 });
    for a in 0..n {
        y[a + a * n] = 1.0;
    }
    if joint {
        y.rows_mut(nn, dim).copy_from(xi);
    }
    let rhs = |tau: f64, y: &DVector<f64>| -> Result<DVector<f64>, MarkovError> {
        let x = if joint {
            Point::from(y.rows(nn, dim))
        } else {
            flow.eval(s, tau, xi)?
        };
        let q = field.generator(tau, &x)?;
        let pi = DMatrix::from_column_slice(n, n, &y.as_slice()[..nn]);
        let dpi = pi * q;
        let mut dy = DVector::zeros(y.len());
        dy.rows_mut(0, nn).copy_from_slice(dpi.as_slice());
        if joint {
            dy.rows_mut(nn, dim).copy_from(&flow.velocity(tau, &x));
        }
        Ok(dy)
    };

    let mut cur = s;
    for hit in &hits {
        y = ode::integrate(rhs, cur, hit.time, &y)?;
        cur = hit.time;
        let x = if joint {
            Point::from(y.rows(nn, dim))
        } else {
            hit.point.clone()
        };
        let p = field.impulse_matrix(hit.index, hit.time, &x)?;
        let pi = DMatrix::from_column_slice(n, n, &y.as_slice()[..nn]) * p;
        y.rows_mut(0, nn).copy_from_slice(pi.as_slice());
    }
    y = ode::integrate(rhs, cur, t, &y)?;
    check_stochastic(DMatrix::from_column_slice(n, n, &y.as_slice()[..nn]))
}

/// Output `(Ru)(s, t)` of a stochastic relay; identical to [`propagate`].
pub fn stochastic_relay_output(
    field: &MarkovField,
    flow: &SemiFlow,
    s: f64,
    t: f64,
    xi: &Point,
) -> Result<DMatrix<f64>, MarkovError> {
    propagate(field, flow, s, t, xi)
}

/// Weighted sum `Σ μ_ρ π^ρ(s, t)` over a family of stochastic relays.
pub fn stochastic_hysteresis(
    members: &[(String, MarkovField, f64)],
    flow: &SemiFlow,
    s: f64,
    t: f64,
    xi: &Point,
) -> Result<DMatrix<f64>, MarkovError> {
    let Some((_, first, _)) = members.first() else {
        return Err(MarkovError::InvalidSystem("empty family".into()));
    };
    let n = first.states();
    let mut out = DMatrix::zeros(n, n);
    for (label, field, w) in members {
        let tag = |e: MarkovError| MarkovError::Member {
            label: label.clone(),
            source: Box::new(e),
        };
        if !(w.is_finite() && *w > 0.0) {
            return Err(tag(MarkovError::InvalidSystem(format!("weight {w}"))));
        }
        if field.states() != n {
            return Err(tag(MarkovError::DimensionMismatch {
                expected: n,
                found: field.states(),
            }));
        }
        out += propagate(field, flow, s, t, xi).map_err(tag)? * *w;
    }
    Ok(out)
}
