//! Discrete-time max-min dynamic programming for a game whose second player
//! partly reacts through a hysteresis operator driven by the first player's
//! control.
//!
//! The value function is augmented by the relay-state profile `ᾱ`. One
//! backup step on a spatial grid reads
//!
//! ```text
//! V_k(x, ᾱ) = max_{c1} min_{c2} [ F(t_k, x, c1, (G(t_k, ᾱ'), c2)) Δt
//!                                 + V_{k+1}(x + f(t_k, x, c1, (G, c2)) Δt, ᾱ') ]
//! ```
//!
//! with `ᾱ' = profile_transition(ᾱ, c1)` and multilinear interpolation of
//! `V_{k+1}`. Ties go to the lowest control index.

use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::geometry::Point;
use crate::hysteresis::{HysteresisError, RelayFamily};
use crate::relay::StateId;

/// Largest number of relays in a game family.
pub const MAX_GAME_RELAYS: usize = 8;
/// Largest admissible fraction of backups whose lookup leaves the grid.
pub const MAX_CLAMPED_FRACTION: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid game: {0}")]
    InvalidSpec(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("member '{member}' cannot classify control {control:?} from state {state}")]
    Classification {
        member: String,
        state: StateId,
        control: Vec<f64>,
    },
    #[error("{clamped} of {total} backups left the grid")]
    TooManyClamped { clamped: usize, total: usize },
    #[error(transparent)]
    Hysteresis(#[from] HysteresisError),
}

pub type DynamicsFn = Arc<dyn Fn(f64, &Point, &Point, &Point) -> Point + Send + Sync>;
pub type RunningCostFn = Arc<dyn Fn(f64, &Point, &Point, &Point) -> f64 + Send + Sync>;
pub type TerminalCostFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// `g(t, (Hu_1)(t))`: the reactive part `u_21` of the second control.
pub type ReactionFn = Arc<dyn Fn(f64, &[f64]) -> Point + Send + Sync>;

/// Dynamics, costs, control grids and the hysteresis family of a game.
#[derive(Clone)]
pub struct GameSpec {
    pub dynamics: DynamicsFn,
    pub running_cost: RunningCostFn,
    pub terminal_cost: TerminalCostFn,
    pub c1_grid: Vec<Point>,
    pub c2_grid: Vec<Point>,
    pub family: RelayFamily,
    pub reaction: ReactionFn,
    pub horizon: f64,
    pub time_steps: usize,
}

impl std::fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GameSpec")
            .field("c1_grid", &self.c1_grid)
            .field("c2_grid", &self.c2_grid)
            .field("family", &self.family.len())
            .field("horizon", &self.horizon)
            .field("time_steps", &self.time_steps)
            .finish_non_exhaustive()
    }
}

impl GameSpec {
    pub fn dt(&self) -> f64 {
        self.horizon / self.time_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    fn check(&self) -> Result<(), GameError> {
        let bad = |m: &str| Err(GameError::InvalidSpec(m.to_string()));
        if self.c1_grid.is_empty() || self.c2_grid.is_empty() {
            return bad("control grids must be nonempty");
        }
        if self.time_steps == 0 || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("need time_steps >= 1 and a positive horizon");
        }
        if self.family.len() > MAX_GAME_RELAYS {
            return bad("too many relays in the game family");
        }
        let dim = self.family.dim();
        if self.c1_grid.iter().any(|c| c.len() != dim) {
            return bad("first-player controls must live in the relays' input space");
        }
        let d2 = self.c2_grid[0].len();
        if self.c2_grid.iter().any(|c| c.len() != d2) {
            return bad("second-player controls must share one dimension");
        }
        Ok(())
    }
}

/// Rectilinear spatial grid with strictly increasing axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self, GameError> {
        if axes.is_empty() {
            return Err(GameError::InvalidGrid("no axes".into()));
        }
        let mut strides = Vec::with_capacity(axes.len());
        let mut len = 1usize;
        for (i, ax) in axes.iter().enumerate() {
            if ax.is_empty() || ax.windows(2).any(|w| !(w[0] < w[1])) || ax.iter().any(|v| !v.is_finite()) {
                return Err(GameError::InvalidGrid(format!(
                    "axis {i} must be finite and strictly increasing"
                )));
            }
            strides.push(len);
            len = len
                .checked_mul(ax.len())
                .ok_or_else(|| GameError::InvalidGrid("too many nodes".into()))?;
        }
        Ok(Self { axes, strides, len })
    }

    /// `n` equally spaced nodes on `[lo, hi]` per axis.
    pub fn uniform(bounds: &[(f64, f64)], n: usize) -> Result<Self, GameError> {
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| {
                if n == 1 {
                    vec![lo]
                } else {
                    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
                }
            })
            .collect();
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn node(&self, index: usize) -> Point {
        Point::from_iterator(
            self.axes.len(),
            self.axes
                .iter()
                .zip(&self.strides)
                .map(|(ax, s)| ax[(index / s) % ax.len()]),
        )
    }

    /// Corner indices and weights of the multilinear stencil at `x`, and
    /// whether `x` had to be clamped into the grid.
    pub fn stencil(&self, x: &Point) -> (Vec<(usize, f64)>, bool) {
        let mut clamped = false;
        let mut out = vec![(0usize, 1.0f64)];
        for ((ax, stride), &xi) in self.axes.iter().zip(&self.strides).zip(x.iter()) {
            let (lo, hi) = (ax[0], ax[ax.len() - 1]);
            if xi < lo || xi > hi || !xi.is_finite() {
                clamped = true;
            }
            let v = if xi.is_finite() { xi.clamp(lo, hi) } else { lo };
            if ax.len() == 1 {
                continue;
            }
            let i = (ax.partition_point(|&a| a <= v).max(1) - 1).min(ax.len() - 2);
            let w = (v - ax[i]) / (ax[i + 1] - ax[i]);
            let mut next = Vec::with_capacity(out.len() * 2);
            for &(idx, wt) in &out {
                next.push((idx + i * stride, wt * (1.0 - w)));
                if w != 0.0 {
                    next.push((idx + (i + 1) * stride, wt * w));
                }
            }
            out = next;
        }
        (out, clamped)
    }

    pub fn interpolate(&self, values: &[f64], x: &Point) -> (f64, bool) {
        let (st, clamped) = self.stencil(x);
        (st.iter().map(|&(i, w)| w * values[i]).sum(), clamped)
    }
}

/// Mixed-radix indexing of relay-state profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpace {
    radices: Vec<usize>,
    len: usize,
}

impl ProfileSpace {
    pub fn new(family: &RelayFamily) -> Self {
        let radices: Vec<usize> = family.members().iter().map(|m| m.spec.state_count()).collect();
        let len = radices.iter().product();
        Self { radices, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn encode(&self, profile: &[StateId]) -> usize {
        profile
            .iter()
            .zip(&self.radices)
            .rev()
            .fold(0, |acc, (s, r)| acc * r + s.0)
    }

    pub fn decode(&self, mut index: usize) -> Vec<StateId> {
        self.radices
            .iter()
            .map(|r| {
                let s = StateId(index % r);
                index /= r;
                s
            })
            .collect()
    }
}

/// Relay-state profile after the first player applies control `c1`.
///
/// A member stays put while `c1` is inside its current continuation set;
/// otherwise it moves to the unique `β` with `c1 ∈ S_αβ`, or, if `c1` jumped
/// past every facet, to the unique `β` with `c1 ∈ C_β`.
pub fn profile_transition(family: &RelayFamily, profile: &[StateId], c1: &Point) -> Result<Vec<StateId>, GameError> {
    if profile.len() != family.len() {
        return Err(GameError::InvalidSpec(format!(
            "profile has {} entries for {} relays",
            profile.len(),
            family.len()
        )));
    }
    let mut next = Vec::with_capacity(profile.len());
    for (m, &a) in family.members().iter().zip(profile) {
        let spec = &m.spec;
        let fail = || GameError::Classification {
            member: m.label.clone(),
            state: a,
            control: c1.iter().copied().collect(),
        };
        let in_set = |s: StateId| {
            spec.continuation(s)
                .contains(c1)
                .map_err(|e| GameError::Hysteresis(e.into()))
        };
        if in_set(a)? {
            next.push(a);
            continue;
        }
        match spec.switch_target(a, c1) {
            Ok(Some(b)) => next.push(b),
            Ok(None) => {
                let mut hits = Vec::new();
                for b in (0..spec.state_count()).map(StateId).filter(|&b| b != a) {
                    if in_set(b)? {
                        hits.push(b);
                    }
                }
                match hits.as_slice() {
                    [b] => next.push(*b),
                    _ => return Err(fail()),
                }
            }
            Err(_) => return Err(fail()),
        }
    }
    Ok(next)
}

/// `V_k(x, ᾱ)` on every time layer, grid node and profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub grid: Grid,
    pub profiles: ProfileSpace,
    pub time_steps: usize,
    /// `values[k][p * grid.len() + node]`.
    pub values: Vec<Vec<f64>>,
    /// Backups whose successor state was clamped into the grid.
    pub clamped: usize,
    pub backups: usize,
}

impl ValueTable {
    pub fn value(&self, k: usize, node: usize, profile: usize) -> f64 {
        self.values[k][profile * self.grid.len() + node]
    }

    pub fn layer(&self, k: usize, profile: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[k][profile * n..(profile + 1) * n]
    }

    /// Interpolated `V_k(x, ᾱ)`; clamps `x` into the grid.
    pub fn interpolate(&self, k: usize, x: &Point, profile: usize) -> f64 {
        self.grid.interpolate(self.layer(k, profile), x).0
    }
}

/// Precomputed `ᾱ' = profile_transition(ᾱ, c1)` for every profile and control.
fn transitions(spec: &GameSpec, space: &ProfileSpace) -> Result<Vec<Vec<usize>>, GameError> {
    (0..space.len())
        .map(|p| {
            let prof = space.decode(p);
            spec.c1_grid
                .iter()
                .map(|c1| Ok(space.encode(&profile_transition(&spec.family, &prof, c1)?)))
                .collect()
        })
        .collect()
}

struct Backup {
    value: f64,
    c1: usize,
    c2: usize,
    clamped: usize,
}

/// Reaction `G(t, ᾱ)` for every profile at time `t`.
fn reactions(spec: &GameSpec, space: &ProfileSpace, t: f64) -> Vec<Point> {
    (0..space.len())
        .map(|p| (spec.reaction)(t, &spec.family.aggregate(&space.decode(p))))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn backup(
    spec: &GameSpec,
    grid: &Grid,
    next_layer: &[f64],
    trans: &[Vec<usize>],
    react: &[Point],
    t: f64,
    x: &Point,
    profile: usize,
) -> Backup {
    let dt = spec.dt();
    let n = grid.len();
    let mut best = Backup {
        value: f64::NEG_INFINITY,
        c1: 0,
        c2: 0,
        clamped: 0,
    };
    for (i, c1) in spec.c1_grid.iter().enumerate() {
        let p2 = trans[profile][i];
        let g = &react[p2];
        let cont = &next_layer[p2 * n..(p2 + 1) * n];
        let mut worst = f64::INFINITY;
        let mut worst_j = 0;
        let mut worst_clamped = false;
        for (j, c2) in spec.c2_grid.iter().enumerate() {
            let u2 = concat(g, c2);
            let y = x + (spec.dynamics)(t, x, c1, &u2) * dt;
            let (v, clamped) = grid.interpolate(cont, &y);
            let total = (spec.running_cost)(t, x, c1, &u2) * dt + v;
            if total < worst {
                worst = total;
                worst_j = j;
                worst_clamped = clamped;
            }
        }
        if worst > best.value {
            best = Backup {
                value: worst,
                c1: i,
                c2: worst_j,
                clamped: usize::from(worst_clamped),
            };
        }
    }
    best
}

fn concat(a: &Point, b: &Point) -> Point {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Backward max-min recursion from the terminal layer `V_K = F_0`.
///
/// A backup counts as clamped when the state reached by the optimal
/// control pair leaves the grid; more than 10% clamped backups is an error.
pub fn solve(spec: &GameSpec, grid: &Grid) -> Result<ValueTable, GameError> {
    spec.check()?;
    let space = ProfileSpace::new(&spec.family);
    let trans = transitions(spec, &space)?;
    let n = grid.len();
    let k_max = spec.time_steps;
    let nodes: Vec<Point> = (0..n).map(|i| grid.node(i)).collect();
    if let Some(x) = nodes.first() {
        let probe = (spec.dynamics)(
            0.0,
            x,
            &spec.c1_grid[0],
            &concat(
                &(spec.reaction)(0.0, &spec.family.aggregate(&space.decode(0))),
                &spec.c2_grid[0],
            ),
        );
        if probe.len() != grid.dim() {
            return Err(GameError::InvalidSpec(format!(
                "dynamics return dimension {}, grid has {}",
                probe.len(),
                grid.dim()
            )));
        }
    }

    let terminal: Vec<f64> = nodes.iter().map(|x| (spec.terminal_cost)(x)).collect();
    let mut values = vec![Vec::new(); k_max + 1];
    values[k_max] = (0..space.len()).flat_map(|_| terminal.iter().copied()).collect();
    let (mut clamped, mut backups) = (0usize, 0usize);
    for k in (0..k_max).rev() {
        let t = spec.time(k);
        let react = reactions(spec, &space, t);
        let mut layer = vec![0.0; space.len() * n];
        for p in 0..space.len() {
            for (i, x) in nodes.iter().enumerate() {
                let b = backup(spec, grid, &values[k + 1], &trans, &react, t, x, p);
                layer[p * n + i] = b.value;
                clamped += b.clamped;
                backups += 1;
            }
        }
        values[k] = layer;
    }
    if clamped as f64 > MAX_CLAMPED_FRACTION * backups as f64 {
        return Err(GameError::TooManyClamped {
            clamped,
            total: backups,
        });
    }
    Ok(ValueTable {
        grid: grid.clone(),
        profiles: space,
        time_steps: k_max,
        values,
        clamped,
        backups,
    })
}

/// Optimal control indices per `(k, profile, node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    /// `c1[k][p * grid.len() + node]`, an index into `c1_grid`.
    pub c1: Vec<Vec<usize>>,
    pub c2: Vec<Vec<usize>>,
}

impl Policy {
    pub fn at(&self, k: usize, node: usize, profile: usize, grid_len: usize) -> (usize, usize) {
        let i = profile * grid_len + node;
        (self.c1[k][i], self.c2[k][i])
    }
}

/// Max-min controls of every backup, ties broken by lowest grid index.
pub fn extract_policy(table: &ValueTable, spec: &GameSpec) -> Result<Policy, GameError> {
    spec.check()?;
    let space = &table.profiles;
    let trans = transitions(spec, space)?;
    let grid = &table.grid;
    let n = grid.len();
    let mut c1 = Vec::with_capacity(table.time_steps);
    let mut c2 = Vec::with_capacity(table.time_steps);
    for k in 0..table.time_steps {
        let t = spec.time(k);
        let react = reactions(spec, space, t);
        let mut a = vec![0; space.len() * n];
        let mut b = vec![0; space.len() * n];
        for p in 0..space.len() {
            for i in 0..n {
                let bk = backup(spec, grid, &table.values[k + 1], &trans, &react, t, &grid.node(i), p);
                a[p * n + i] = bk.c1;
                b[p * n + i] = bk.c2;
            }
        }
        c1.push(a);
        c2.push(b);
    }
    Ok(Policy { c1, c2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;
    use crate::hysteresis::{preisach_family, FamilyMember, PreisachThreshold};
    use crate::relay::RelaySpec;

    fn trivial_family() -> RelayFamily {
        RelayFamily::new(vec![FamilyMember {
            label: "only".into(),
            spec: RelaySpec::trivial(Region::whole(1), vec![0.0]).unwrap(),
            weight: 1.0,
            initial: StateId(0),
        }])
        .unwrap()
    }

    fn scalars(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::from_element(1, x)).collect()
    }

    fn idle(family: RelayFamily) -> GameSpec {
        GameSpec {
            dynamics: Arc::new(|_, x, _, _| Point::zeros(x.len())),
            running_cost: Arc::new(|_, _, _, _| 0.0),
            terminal_cost: Arc::new(|x| x[0] * x[0]),
            c1_grid: scalars(&[-1.0, 0.0, 1.0]),
            c2_grid: scalars(&[0.0, 1.0]),
            family,
            reaction: Arc::new(|_, h| Point::from_row_slice(h)),
            horizon: 1.0,
            time_steps: 4,
        }
    }

    #[test]
    fn idle_game_keeps_terminal_value() {
        let spec = idle(trivial_family());
        let grid = Grid::uniform(&[(-1.0, 1.0)], 5).unwrap();
        let table = solve(&spec, &grid).unwrap();
        for k in 0..=4 {
            for i in 0..grid.len() {
                let x = grid.node(i)[0];
                assert_eq!(table.value(k, i, 0), x * x);
            }
        }
        let pol = extract_policy(&table, &spec).unwrap();
        assert!(pol.c1.iter().flatten().all(|&c| c == 0));
        assert!(pol.c2.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn profile_codec_roundtrip() {
        let fam = preisach_family(&[
            PreisachThreshold {
                rho1: 0.5,
                rho2: -0.5,
                weight: 1.0,
                initial: -1,
            },
            PreisachThreshold {
                rho1: 1.0,
                rho2: -1.0,
                weight: 1.0,
                initial: -1,
            },
        ])
        .unwrap();
        let space = ProfileSpace::new(&fam);
        assert_eq!(space.len(), 4);
        for p in 0..4 {
            assert_eq!(space.encode(&space.decode(p)), p);
        }
    }

    #[test]
    fn threshold_control_flips_one_member() {
        let fam = preisach_family(&[
            PreisachThreshold {
                rho1: 0.5,
                rho2: -0.5,
                weight: 1.0,
                initial: -1,
            },
            PreisachThreshold {
                rho1: 1.0,
                rho2: -1.0,
                weight: 1.0,
                initial: -1,
            },
        ])
        .unwrap();
        let down = [StateId(0), StateId(0)];
        let x = |v: f64| Point::from_element(1, v);
        assert_eq!(profile_transition(&fam, &down, &x(0.0)).unwrap(), down.to_vec());
        assert_eq!(
            profile_transition(&fam, &down, &x(0.5)).unwrap(),
            vec![StateId(1), StateId(0)]
        );
        assert_eq!(
            profile_transition(&fam, &down, &x(2.0)).unwrap(),
            vec![StateId(1), StateId(1)]
        );
    }

    #[test]
    fn maximizer_picks_positive_payoff() {
        let mut spec = idle(trivial_family());
        spec.running_cost = Arc::new(|_, x, c1, _| c1[0] * x[0]);
        spec.terminal_cost = Arc::new(|_| 0.0);
        spec.c1_grid = scalars(&[0.0, 1.0]);
        spec.time_steps = 1;
        let grid = Grid::new(vec![vec![-1.0, 0.0, 1.0]]).unwrap();
        let table = solve(&spec, &grid).unwrap();
        let pol = extract_policy(&table, &spec).unwrap();
        assert_eq!(pol.at(0, 0, 0, 3).0, 0);
        assert_eq!(pol.at(0, 1, 0, 3).0, 0);
        assert_eq!(pol.at(0, 2, 0, 3).0, 1);
        assert_eq!(table.value(0, 2, 0), 1.0);
    }

    #[test]
    fn drifting_off_grid_is_an_error() {
        let mut spec = idle(trivial_family());
        spec.dynamics = Arc::new(|_, _, _, _| Point::from_element(1, 100.0));
        let grid = Grid::uniform(&[(-1.0, 1.0)], 5).unwrap();
        assert!(matches!(solve(&spec, &grid), Err(GameError::TooManyClamped { .. })));
    }

    #[test]
    fn multilinear_is_exact_on_bilinear_functions() {
        let grid = Grid::uniform(&[(0.0, 1.0), (0.0, 2.0)], 3).unwrap();
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.node(i);
                1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1]
            })
            .collect();
        let x = Point::from_row_slice(&[0.3, 1.7]);
        let (v, clamped) = grid.interpolate(&vals, &x);
        assert!(!clamped);
        assert!((v - (1.0 + 0.6 - 1.7 + 0.5 * 0.3 * 1.7)).abs() < 1e-14);
    }
}
