//! Reference implementations used by the integration tests. They work on raw
//! breakpoint data and plain arrays and share no code paths with the library
//! beyond reading its inputs.
#![allow(dead_code)]

/// Piecewise-linear path given by breakpoints.
#[derive(Debug, Clone)]
pub struct Path {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Path {
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.points[k - 1]
            .iter()
            .zip(&self.points[k])
            .map(|(a, b)| a + (b - a) * w)
            .collect()
    }

    /// Uniform samples with spacing `dt`, merged with the breakpoints.
    pub fn dense_times(&self, dt: f64) -> Vec<f64> {
        let (a, b) = (self.times[0], *self.times.last().unwrap());
        let n = ((b - a) / dt).ceil() as usize;
        let mut ts: Vec<f64> = (0..=n).map(|i| (a + i as f64 * dt).min(b)).collect();
        ts.extend_from_slice(&self.times);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Classic relay by dense sampling: `-1` (state 0) switches up once the input
/// reaches `rho1`, `+1` (state 1) switches down once it reaches `rho2`.
pub fn classic_events(rho1: f64, rho2: f64, path: &Path, initial: usize, dt: f64) -> Vec<(f64, usize)> {
    let mut state = initial;
    let mut out = Vec::new();
    for t in path.dense_times(dt) {
        let x = path.at(t)[0];
        if state == 0 && x >= rho1 {
            state = 1;
            out.push((t, 1));
        } else if state == 1 && x <= rho2 {
            state = 0;
            out.push((t, 0));
        }
    }
    out
}

/// Membership in the triangle relay's continuation sets, states 1..=3.
pub fn triangle_inside(state: usize, p: &[f64]) -> bool {
    let (u, v) = (p[0], p[1]);
    let omega = u > 0.0 && v > 0.0 && u + v < 1.0;
    omega
        && match state {
            1 => u + v > 0.6,
            2 => u + 0.2 * v < 0.5,
            3 => 0.2 * u + v < 0.5,
            _ => unreachable!(),
        }
}

/// Triangle relay by dense sampling. The target after leaving `C_i` is read
/// off from which side of the dividing point `D_i` the exit happened.
pub fn triangle_events(path: &Path, initial: usize, dt: f64) -> Vec<(f64, usize)> {
    let b1 = [5.0 / 12.0, 5.0 / 12.0];
    let b2 = [0.125, 0.475];
    let b3 = [0.475, 0.125];
    let d1 = [(b2[0] + b3[0]) / 2.0, (b2[1] + b3[1]) / 2.0];
    let d2 = [(b1[0] + b3[0]) / 2.0, (b1[1] + b3[1]) / 2.0];
    let d3 = [(b1[0] + b2[0]) / 2.0, (b1[1] + b2[1]) / 2.0];
    let mut state = initial;
    let mut out = Vec::new();
    for t in path.dense_times(dt) {
        let p = path.at(t);
        if triangle_inside(state, &p) {
            continue;
        }
        state = match state {
            1 if p[0] <= d1[0] => 2,
            1 => 3,
            2 if p[1] > d2[1] => 1,
            2 => 3,
            3 if p[0] >= d3[0] => 1,
            3 => 2,
            _ => unreachable!(),
        };
        out.push((t, state));
    }
    out
}

/// Classic relay state (`-1` or `+1`) after a control jump to `c`.
pub fn classic_jump(rho1: f64, rho2: f64, state: i8, c: f64) -> i8 {
    match state {
        -1 if c >= rho1 => 1,
        1 if c <= rho2 => -1,
        s => s,
    }
}

/// Preisach output at `t` by threshold logic over the breakpoints; the
/// input is monotone between breakpoints, so checking segment ends suffices.
pub fn preisach_output(thresholds: &[(f64, f64, f64)], path: &Path, t: f64) -> f64 {
    let mut states = vec![-1i8; thresholds.len()];
    let mut visit = |x: f64| {
        for (s, &(r1, r2, _)) in states.iter_mut().zip(thresholds) {
            *s = classic_jump(r1, r2, *s, x);
        }
    };
    visit(path.points[0][0]);
    for k in 1..path.times.len() {
        if path.times[k] <= t {
            visit(path.points[k][0]);
        } else {
            visit(path.at(t)[0]);
            break;
        }
    }
    states.iter().zip(thresholds).map(|(&s, &(_, _, w))| s as f64 * w).sum()
}

/// Tensor grid with bilinear lookups, clamped at the edges.
pub struct PlainGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PlainGrid {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn node(&self, k: usize) -> [f64; 2] {
        [self.xs[k % self.xs.len()], self.ys[k / self.xs.len()]]
    }

    fn cell(axis: &[f64], v: f64) -> (usize, f64) {
        let v = v.clamp(axis[0], axis[axis.len() - 1]);
        let mut i = 0;
        while i + 2 < axis.len() && v >= axis[i + 1] {
            i += 1;
        }
        (i, (v - axis[i]) / (axis[i + 1] - axis[i]))
    }

    pub fn lookup(&self, vals: &[f64], p: [f64; 2]) -> f64 {
        let (i, a) = Self::cell(&self.xs, p[0]);
        let (j, b) = Self::cell(&self.ys, p[1]);
        let nx = self.xs.len();
        let v = |i: usize, j: usize| vals[i + j * nx];
        (1.0 - a) * (1.0 - b) * v(i, j)
            + a * (1.0 - b) * v(i + 1, j)
            + (1.0 - a) * b * v(i, j + 1)
            + a * b * v(i + 1, j + 1)
    }
}

/// Backward max-min recursion without any hysteresis:
/// `V_k(x) = max_a min_b [F(t_k, x, a, b) dt + V_{k+1}(x + f dt)]`.
#[allow(clippy::too_many_arguments)]
pub fn minimax_dp(
    grid: &PlainGrid,
    c1: &[f64],
    c2: &[f64],
    steps: usize,
    dt: f64,
    f: impl Fn(f64, [f64; 2], f64, f64) -> [f64; 2],
    cost: impl Fn(f64, [f64; 2], f64, f64) -> f64,
    terminal: impl Fn([f64; 2]) -> f64,
) -> Vec<Vec<f64>> {
    let mut layers = vec![(0..grid.len()).map(|k| terminal(grid.node(k))).collect::<Vec<_>>()];
    for k in (0..steps).rev() {
        let t = k as f64 * dt;
        let next = layers.last().unwrap();
        let layer = (0..grid.len())
            .map(|n| {
                let x = grid.node(n);
                c1.iter()
                    .map(|&a| {
                        c2.iter()
                            .map(|&b| {
                                let v = f(t, x, a, b);
                                cost(t, x, a, b) * dt + grid.lookup(next, [x[0] + v[0] * dt, x[1] + v[1] * dt])
                            })
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        layers.push(layer);
    }
    layers.reverse();
    layers
}
