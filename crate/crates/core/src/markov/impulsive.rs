//! The impulsive linear system `ψ' = A(t)ψ`, `ψ(τ_i+) = B_i ψ(τ_i−)` and two
//! independent constructions of its fundamental matrix.
//!
//! `Φ(t', t)` maps `ψ(t'+)` to `ψ(t+)`: impulses at times in `(t', t]` are
//! applied, an impulse exactly at `t'` is not.
//!
//! The product construction chains smooth-piece propagators with the jump
//! matrices. The series construction never integrates an ODE: it writes
//! `Φ(t, t') = J(t, t') + ∫ J(t, r) A(r) Φ(r, t') dr`, where the pure-jump
//! propagator `J(t, r)` is expanded over increasing paths of impulse indices
//! with increments `D_i = B_i − I`, and sums the resulting Neumann series
//! with Gauss–Legendre quadrature on each smooth piece.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};

use super::{detect_impulses, ode, MarkovError, MarkovField, SemiFlow};
use crate::geometry::Point;

pub const MAX_SERIES_TERMS: usize = 50;
const QUAD_NODES: usize = 32;

type GenFn = Arc<dyn Fn(f64) -> Result<DMatrix<f64>, MarkovError> + Send + Sync>;

/// Generator path `A(t)`, impulses `(τ_i, B_i)` and horizon `[s, T]`.
#[derive(Clone)]
pub struct ImpulsiveSystem {
    dim: usize,
    generator: GenFn,
    impulses: Vec<(f64, DMatrix<f64>)>,
    start: f64,
    end: f64,
}

impl std::fmt::Debug for ImpulsiveSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImpulsiveSystem")
            .field("dim", &self.dim)
            .field("impulses", &self.impulses)
            .field("start", &self.start)
            .field("end", &self.end)
            .finish_non_exhaustive()
    }
}

impl ImpulsiveSystem {
    pub fn new(
        dim: usize,
        generator: GenFn,
        impulses: Vec<(f64, DMatrix<f64>)>,
        (start, end): (f64, f64),
    ) -> Result<Self, MarkovError> {
        if !(start < end) {
            return Err(MarkovError::BadInterval { s: start, t: end });
        }
        let mut last = start;
        for (tau, b) in &impulses {
            if !(*tau > last && *tau < end) {
                return Err(MarkovError::InvalidSystem(format!(
                    "impulse times must increase strictly inside ({start}, {end}), got {tau}"
                )));
            }
            if b.shape() != (dim, dim) {
                return Err(MarkovError::DimensionMismatch {
                    expected: dim,
                    found: b.nrows(),
                });
            }
            last = *tau;
        }
        Ok(Self {
            dim,
            generator,
            impulses,
            start,
            end,
        })
    }

    /// Time-independent generator.
    pub fn constant(
        a: DMatrix<f64>,
        impulses: Vec<(f64, DMatrix<f64>)>,
        horizon: (f64, f64),
    ) -> Result<Self, MarkovError> {
        let dim = a.nrows();
        Self::new(dim, Arc::new(move |_| Ok(a.clone())), impulses, horizon)
    }

    /// Transposed Kolmogorov system along `τ ↦ u(s, τ; ξ)`: `A = Qᵀ`,
    /// `B = Pᵀ` at every impulse met in `(s, T)`.
    pub fn from_field(field: &MarkovField, flow: &SemiFlow, s: f64, end: f64, xi: &Point) -> Result<Self, MarkovError> {
        let hits = detect_impulses(field, flow, s, end, xi)?;
        let mut impulses: Vec<(f64, DMatrix<f64>)> = Vec::new();
        for h in hits.into_iter().filter(|h| h.time < end) {
            let b = field.impulse_matrix(h.index, h.time, &h.point)?.transpose();
            match impulses.last_mut() {
                // simultaneous impulses compose in index order
                Some((tau, prev)) if *tau == h.time => *prev = &b * &*prev,
                _ => impulses.push((h.time, b)),
            }
        }
        let dim = field.states();
        let (field, flow, xi) = (field.clone(), flow.clone(), xi.clone());
        let generator: GenFn = Arc::new(move |t| {
            let x = flow.eval(s, t, &xi)?;
            Ok(field.generator(t, &x)?.transpose())
        });
        Self::new(dim, generator, impulses, (s, end))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn impulses(&self) -> &[(f64, DMatrix<f64>)] {
        &self.impulses
    }

    pub fn a(&self, t: f64) -> Result<DMatrix<f64>, MarkovError> {
        let a = (self.generator)(t)?;
        if a.shape() != (self.dim, self.dim) {
            return Err(MarkovError::DimensionMismatch {
                expected: self.dim,
                found: a.nrows(),
            });
        }
        Ok(a)
    }

    /// Indices of impulses with `lo < τ ≤ hi`.
    fn indices_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.impulses.partition_point(|(tau, _)| *tau <= lo);
        let b = self.impulses.partition_point(|(tau, _)| *tau <= hi);
        a..b.max(a)
    }

    fn check_window(&self, tp: f64, t: f64) -> Result<(), MarkovError> {
        if !(tp < t) {
            return Err(MarkovError::BadInterval { s: tp, t });
        }
        for x in [tp, t] {
            if !(x >= self.start && x <= self.end) {
                return Err(MarkovError::OutsideHorizon {
                    t: x,
                    start: self.start,
                    end: self.end,
                });
            }
        }
        Ok(())
    }
}

/// Increasing paths `P(i, j)`: `{i}` when `i = j`, otherwise every
/// `{i, k_1, …, k_r, j}` with `i < k_1 < … < k_r < j`.
pub fn enumerate_paths(i: usize, j: usize) -> Result<Vec<Vec<usize>>, MarkovError> {
    if i > j {
        return Err(MarkovError::InvalidSystem(format!("path from {i} to {j}")));
    }
    if i == j {
        return Ok(vec![vec![i]]);
    }
    let inner = j - i - 1;
    if inner >= usize::BITS as usize - 1 {
        return Err(MarkovError::InvalidSystem(format!("too many paths from {i} to {j}")));
    }
    Ok((0..1usize << inner)
        .map(|mask| {
            let mut p = vec![i];
            p.extend((0..inner).filter(|b| mask & (1 << b) != 0).map(|b| i + 1 + b));
            p.push(j);
            p
        })
        .collect())
}

/// `M(σ_last) · V(σ)` with `V({i}) = I` and
/// `V({i, k_1, …, k_r, j}) = M(k_r)…M(k_1)M(i)`.
fn path_term(path: &[usize], m: &dyn Fn(usize) -> DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (&last, rest) = path.split_last().expect("nonempty path");
    let mut v = DMatrix::identity(n, n);
    for &k in rest {
        v = m(k) * v;
    }
    m(last) * v
}

/// Pure-jump propagator over `(r, t]`: `I + Σ_{i≤j} Σ_{σ∈P(i,j)} D_j V_D(σ)`
/// with `D_k = B_k − I`, which equals the ordered product of the `B_k`.
pub fn jump_propagator(sys: &ImpulsiveSystem, t: f64, r: f64) -> Result<DMatrix<f64>, MarkovError> {
    let n = sys.dim;
    let mut out = DMatrix::identity(n, n);
    let range = sys.indices_in(r, t);
    let d = |k: usize| &sys.impulses[k].1 - DMatrix::identity(n, n);
    for j in range.clone() {
        for i in range.start..=j {
            for path in enumerate_paths(i, j)? {
                out += path_term(&path, &d, n);
            }
        }
    }
    Ok(out)
}

/// Kernel `K(t, r) = J(t, r) A(r)` of the integral equation for `Φ`.
pub fn kernel(sys: &ImpulsiveSystem, t: f64, r: f64) -> Result<DMatrix<f64>, MarkovError> {
    Ok(jump_propagator(sys, t, r)? * sys.a(r)?)
}

/// Product construction: smooth-piece propagators `Ψ` by step-refined RK4,
/// chained as `Ψ(τ_j+, t) B_j … B_i Ψ(t'+, τ_i)`.
pub fn fundamental_matrix_product(sys: &ImpulsiveSystem, t_prime: f64, t: f64) -> Result<DMatrix<f64>, MarkovError> {
    sys.check_window(t_prime, t)?;
    let n = sys.dim;
    let psi = |a: f64, b: f64| -> Result<DMatrix<f64>, MarkovError> {
        let y0 = DVector::from_column_slice(DMatrix::<f64>::identity(n, n).as_slice());
        let y = ode::integrate(
            |tau, y| {
                let m = DMatrix::from_column_slice(n, n, y.as_slice());
                Ok(DVector::from_column_slice((sys.a(tau)? * m).as_slice()))
            },
            a,
            b,
            &y0,
        )?;
        Ok(DMatrix::from_column_slice(n, n, y.as_slice()))
    };
    let mut phi = DMatrix::identity(n, n);
    let mut cur = t_prime;
    for k in sys.indices_in(t_prime, t) {
        let (tau, b) = &sys.impulses[k];
        phi = b * psi(cur, *tau)? * phi;
        cur = *tau;
    }
    Ok(psi(cur, t)? * phi)
}

/// Fundamental matrix from the series plus convergence information.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub matrix: DMatrix<f64>,
    /// Number of convolution terms summed.
    pub terms: usize,
    /// Max-norm of the last term added.
    pub last_norm: f64,
}

/// Series construction of `Φ(t', t)`, truncated once a term's max-norm
/// drops below `tol` (at most [`MAX_SERIES_TERMS`] terms).
pub fn fundamental_matrix_series(
    sys: &ImpulsiveSystem,
    t_prime: f64,
    t: f64,
    tol: f64,
) -> Result<SeriesResult, MarkovError> {
    sys.check_window(t_prime, t)?;
    neumann(
        sys,
        t_prime,
        t,
        tol,
        |r| jump_propagator(sys, r, t_prime),
        |r, q| kernel(sys, r, q),
    )
}

/// The series with the uncorrected kernel, which omits the jump propagator:
/// `Φ = I + Σ_m ∫ K^{*m}(t, t1) dt1`,
/// `K(t, t') = A(t') + Σ_{j: s<τ_j<t} Σ_{i≤j} Σ_{σ∈P(i,j)} B(τ_j) V(σ) A(t)`.
///
/// Kept for diagnostics only: it ignores the impulses whenever `A ≡ 0`, so it
/// cannot reproduce the product construction in general.
pub fn fundamental_matrix_series_uncorrected(
    sys: &ImpulsiveSystem,
    t_prime: f64,
    t: f64,
    tol: f64,
) -> Result<SeriesResult, MarkovError> {
    sys.check_window(t_prime, t)?;
    let n = sys.dim;
    let b = |k: usize| sys.impulses[k].1.clone();
    let uncorrected = |r: f64, q: f64| -> Result<DMatrix<f64>, MarkovError> {
        let mut sum = DMatrix::zeros(n, n);
        let before = sys.impulses.partition_point(|(tau, _)| *tau < r);
        for j in 0..before {
            for i in 0..=j {
                for path in enumerate_paths(i, j)? {
                    sum += path_term(&path, &b, n);
                }
            }
        }
        Ok(sys.a(q)? + sum * sys.a(r)?)
    };
    neumann(sys, t_prime, t, tol, |_| Ok(DMatrix::identity(n, n)), uncorrected)
}

/// Sums `Σ_m T_m(t)` with `T_m(r) = ∫_{t'}^r K(r, q) T_{m−1}(q) dq`.
///
/// `[t', t]` is split at the impulse times; each piece carries a 32-node
/// Gauss–Legendre rule. Integrals ending inside a piece use a rule on the
/// partial interval with `T_{m−1}` interpolated from the piece's nodes
/// (barycentric Lagrange), so the whole recursion is one block matrix.
fn neumann<F0, FK>(sys: &ImpulsiveSystem, tp: f64, t: f64, tol: f64, t0: F0, k: FK) -> Result<SeriesResult, MarkovError>
where
    F0: Fn(f64) -> Result<DMatrix<f64>, MarkovError>,
    FK: Fn(f64, f64) -> Result<DMatrix<f64>, MarkovError>,
{
    if !(tol > 0.0) {
        return Err(MarkovError::InvalidSystem(format!("tolerance {tol}")));
    }
    let n = sys.dim;
    let rule = GaussLegendre::new(NonZeroUsize::new(QUAD_NODES).expect("nonzero"));
    let (xs, ws): (Vec<f64>, Vec<f64>) = rule.as_node_weight_pairs().iter().copied().unzip();
    let bary = barycentric_weights(&xs);

    let mut breaks = vec![tp];
    breaks.extend(
        sys.impulses
            .iter()
            .map(|(tau, _)| *tau)
            .filter(|&tau| tau > tp && tau < t),
    );
    breaks.push(t);
    let pieces: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    let map = |x: f64, a: f64, b: f64| 0.5 * ((b - a) * x + b + a);

    // quadrature nodes and weights, piece by piece
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for &(a, b) in &pieces {
        for (x, w) in xs.iter().zip(&ws) {
            nodes.push(map(*x, a, b));
            weights.push(0.5 * (b - a) * w);
        }
    }
    let total = nodes.len();
    let q = QUAD_NODES;

    let mut big = DMatrix::zeros(total * n, total * n);
    for (p, &(a, b)) in pieces.iter().enumerate() {
        for kk in 0..q {
            let row = p * q + kk;
            let r = nodes[row];
            for col in 0..p * q {
                let blk = k(r, nodes[col])? * weights[col];
                big.view_mut((row * n, col * n), (n, n)).copy_from(&blk);
            }
            for (x, w) in xs.iter().zip(&ws) {
                let ql = map(*x, a, r);
                let wl = 0.5 * (r - a) * w;
                let kl = k(r, ql)? * wl;
                let xi = 2.0 * (ql - a) / (b - a) - 1.0;
                for (m, lm) in lagrange(&xs, &bary, xi).into_iter().enumerate() {
                    if lm != 0.0 {
                        let col = p * q + m;
                        let mut v = big.view_mut((row * n, col * n), (n, n));
                        v += &kl * lm;
                    }
                }
            }
        }
    }
    let mut tail = DMatrix::zeros(n, total * n);
    for col in 0..total {
        let blk = k(t, nodes[col])? * weights[col];
        tail.view_mut((0, col * n), (n, n)).copy_from(&blk);
    }

    let mut stacked = DMatrix::zeros(total * n, n);
    for (i, &r) in nodes.iter().enumerate() {
        stacked.view_mut((i * n, 0), (n, n)).copy_from(&t0(r)?);
    }
    let mut phi = t0(t)?;
    let mut last_norm = f64::INFINITY;
    for m in 1..=MAX_SERIES_TERMS {
        let term = &tail * &stacked;
        phi += &term;
        last_norm = term.amax();
        stacked = &big * &stacked;
        if last_norm < tol && stacked.amax() < tol {
            return Ok(SeriesResult {
                matrix: phi,
                terms: m,
                last_norm,
            });
        }
    }
    Err(MarkovError::SeriesNotConverged {
        terms: MAX_SERIES_TERMS,
        last_norm,
    })
}

fn barycentric_weights(xs: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(j, xj)| {
            1.0 / xs
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, xk)| xj - xk)
                .product::<f64>()
        })
        .collect();
    let scale = raw.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    raw.into_iter().map(|w| w / scale).collect()
}

/// Lagrange basis values at `x` on the nodes `xs`.
fn lagrange(xs: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    if let Some(hit) = xs.iter().position(|&xk| xk == x) {
        let mut e = vec![0.0; xs.len()];
        e[hit] = 1.0;
        return e;
    }
    let terms: Vec<f64> = xs.iter().zip(bary).map(|(xk, wk)| wk / (x - xk)).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / denom).collect()
}
