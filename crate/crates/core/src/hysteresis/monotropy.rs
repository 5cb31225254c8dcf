//! Monotropy intervals, transition points, the pre-orders `≤_(α,U)` and the
//! local wiping-out check.
//!
//! Switchings of all members are merged in time order and grouped into
//! phases: maximal runs of consecutive switchings with the same ordered pair
//! `(α, β)`. The last switching of each phase is its transition point, the
//! analogue of a dominant extremum; the open gaps between transition points
//! are the maximal intervals of monotropy.

use crate::geometry::{region_subset_within, Point, Region, Signal};
use crate::relay::StateId;

use super::{apply, HysteresisError, HysteresisOutput, RelayFamily};

/// `inf dist(x, S_αβ^ρ)` over all members and facets.
pub fn monotropy_distance(family: &RelayFamily, x: &Point) -> Result<f64, HysteresisError> {
    if family.is_empty() {
        return Err(HysteresisError::EmptyFamily);
    }
    let mut best = f64::INFINITY;
    for m in family.members() {
        for (_, _, f) in m.spec.facets() {
            best = best.min(f.distance(x)?);
        }
    }
    Ok(best)
}

/// `ρ1 ≤_(α,U) ρ2`, i.e. `C_α^{ρ1} ∩ U ⊆ C_α^{ρ2} ∩ U`.
pub fn preorder_leq(
    family: &RelayFamily,
    rho1: &str,
    rho2: &str,
    alpha: StateId,
    window: &Region,
) -> Result<bool, HysteresisError> {
    leq(family, family.index_of(rho1)?, family.index_of(rho2)?, alpha, window)
}

fn leq(family: &RelayFamily, i: usize, j: usize, alpha: StateId, window: &Region) -> Result<bool, HysteresisError> {
    let (a, b) = (&family.members()[i].spec, &family.members()[j].spec);
    if alpha.0 >= a.state_count() || alpha.0 >= b.state_count() {
        return Err(HysteresisError::InvalidFamily(format!("unknown state {alpha}")));
    }
    Ok(region_subset_within(
        a.continuation(alpha),
        b.continuation(alpha),
        window,
    )?)
}

/// A switching of one member, as seen in the merged family history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionPoint {
    pub time: f64,
    pub from: StateId,
    pub to: StateId,
    /// Index of the member whose switching closes the phase.
    pub member: usize,
}

/// Open interval `(start, end)` during which only `pair` switchings occur.
/// `pair` is `None` when no switching happens in it at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotropyInterval {
    pub start: f64,
    pub end: f64,
    pub pair: Option<(StateId, StateId)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotropyReport {
    pub start: f64,
    pub end: f64,
    pub intervals: Vec<MonotropyInterval>,
    pub transition_points: Vec<TransitionPoint>,
}

impl MonotropyReport {
    pub fn is_transition_point(&self, t: f64) -> bool {
        self.transition_points.iter().any(|p| p.time == t)
    }

    /// The interval containing `t`; the domain end points belong to the
    /// adjacent interval unless they are transition points.
    pub fn interval_containing(&self, t: f64) -> Option<&MonotropyInterval> {
        if self.is_transition_point(t) {
            return None;
        }
        self.intervals.iter().find(|iv| {
            (iv.start < t && t < iv.end) || (t == self.start && iv.start == t) || (t == self.end && iv.end == t)
        })
    }
}

/// Member switchings of an output, sorted by time then member index.
fn merged_events(out: &HysteresisOutput) -> Vec<TransitionPoint> {
    let mut ev: Vec<TransitionPoint> = out
        .trajectories
        .iter()
        .enumerate()
        .flat_map(|(i, tr)| {
            tr.events.iter().map(move |e| TransitionPoint {
                time: e.time,
                from: e.from,
                to: e.to,
                member: i,
            })
        })
        .collect();
    ev.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.member.cmp(&b.member)));
    ev
}

fn report_from(out: &HysteresisOutput) -> MonotropyReport {
    let events = merged_events(out);
    let mut tps: Vec<TransitionPoint> = Vec::new();
    for (k, e) in events.iter().enumerate() {
        let closes = events.get(k + 1).is_none_or(|n| (n.from, n.to) != (e.from, e.to));
        if closes {
            tps.push(*e);
        }
    }
    let (start, end) = (out.times[0], out.end);
    let mut bounds = vec![start];
    bounds.extend(tps.iter().map(|p| p.time));
    bounds.push(end);
    let intervals = bounds
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0])
        .map(|(k, w)| MonotropyInterval {
            start: w[0],
            end: w[1],
            pair: tps.get(k).map(|p| (p.from, p.to)),
        })
        .collect();
    MonotropyReport {
        start,
        end,
        intervals,
        transition_points: tps,
    }
}

/// Splits the time domain into maximal monotropy intervals and transition points.
pub fn analyze_monotropy(family: &RelayFamily, signal: &Signal) -> Result<MonotropyReport, HysteresisError> {
    Ok(report_from(&apply(family, signal)?))
}

/// Which of the wiping-out hypotheses hold for a family and signal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WipeoutPreconditions {
    /// Only `α0` and `α1` have continuation sets meeting the window.
    pub two_states: bool,
    /// Every member starts at `α0`.
    pub initial_alpha0: bool,
    /// Whenever `ρ` switches `α_i → α_j`, every `ρ' <_(α_i,U) ρ` is at `α_j`.
    pub ordered_switching: bool,
    /// Transition points alternate between `(α0, α1)` and `(α1, α0)`.
    pub alternating: bool,
    pub messages: Vec<String>,
}

impl WipeoutPreconditions {
    pub fn all_hold(&self) -> bool {
        self.two_states && self.initial_alpha0 && self.ordered_switching && self.alternating
    }
}

/// One pair of same-direction transition points `t' < t''`.
#[derive(Debug, Clone, PartialEq)]
pub struct WipeoutPair {
    pub t_prime: f64,
    pub t_hat: f64,
    pub t_double: f64,
    pub pair: (StateId, StateId),
    pub rho_prime: String,
    pub rho_double: String,
    /// `ρ'' >_(α_i,U) ρ'` strictly.
    pub eligible: bool,
    /// Member states at `t''` agree between full and deleted history.
    pub states_match: bool,
    pub aggregate_match: bool,
    pub differing_members: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WipeoutReport {
    pub preconditions: WipeoutPreconditions,
    pub pairs: Vec<WipeoutPair>,
}

impl WipeoutReport {
    /// Every eligible pair was wiped out.
    pub fn eligible_all_wiped(&self) -> bool {
        self.pairs
            .iter()
            .filter(|p| p.eligible)
            .all(|p| p.states_match && p.aggregate_match)
    }
}

/// The signal with its history on `(a, b)` replaced by the chord from `u(a)` to `u(b)`.
pub fn delete_history(signal: &Signal, a: f64, b: f64) -> Result<Signal, HysteresisError> {
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (t, p) in signal.times().iter().zip(signal.points()) {
        if *t < a {
            times.push(*t);
            points.push(p.clone());
        }
    }
    times.push(a);
    points.push(signal.at(a)?);
    if b > a {
        times.push(b);
        points.push(signal.at(b)?);
    }
    for (t, p) in signal.times().iter().zip(signal.points()) {
        if *t > b {
            times.push(*t);
            points.push(p.clone());
        }
    }
    Ok(Signal::new(times, points)?)
}

/// Checks the local wiping-out property on every pair of transition points
/// relative to the same ordered pair `(α_i, α_{i+1})`.
///
/// The deleted history for `t'` replaces the input between the previous
/// transition point (or the start) and the next one `t̂` by a straight
/// segment, so the switchings at `t'` never happen. Member states and the
/// aggregate output are then compared at the right limit at `t''`. Pairs
/// that fail the dominance hypothesis are compared and reported too.
pub fn check_local_wipeout(
    family: &RelayFamily,
    signal: &Signal,
    window: &Region,
    alpha0: StateId,
    alpha1: StateId,
) -> Result<WipeoutReport, HysteresisError> {
    for (t, p) in signal.times().iter().zip(signal.points()) {
        if !window.contains(p)? {
            return Err(HysteresisError::OutsideWindow(*t));
        }
    }
    let full = apply(family, signal)?;
    let report = report_from(&full);
    let n = family.len();

    // strict pre-order tables for both active states
    let mut strict = [vec![vec![false; n]; n], vec![vec![false; n]; n]];
    for (s, alpha) in [alpha0, alpha1].into_iter().enumerate() {
        let mut le = vec![vec![false; n]; n];
        for (i, row) in le.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = leq(family, i, j, alpha, window)?;
            }
        }
        for i in 0..n {
            for j in 0..n {
                strict[s][i][j] = le[i][j] && !le[j][i];
            }
        }
    }
    let side = |a: StateId| usize::from(a != alpha0);

    let mut pre = WipeoutPreconditions {
        two_states: true,
        initial_alpha0: true,
        ordered_switching: true,
        alternating: true,
        messages: Vec::new(),
    };
    for m in family.members() {
        for (k, st) in m.spec.states().iter().enumerate() {
            let s = StateId(k);
            if s != alpha0 && s != alpha1 && st.continuation.intersect(window)?.is_some() {
                pre.two_states = false;
                pre.messages
                    .push(format!("member '{}': state {s} meets the window", m.label));
            }
        }
        if m.initial != alpha0 {
            pre.initial_alpha0 = false;
            pre.messages
                .push(format!("member '{}' starts at {}", m.label, m.initial));
        }
    }
    for e in merged_events(&full) {
        if e.from != alpha0 && e.from != alpha1 {
            continue;
        }
        let table = &strict[side(e.from)];
        for (j, tr) in full.trajectories.iter().enumerate() {
            if table[j][e.member] && tr.output_at(e.time).expect("in domain") != e.to {
                pre.ordered_switching = false;
                pre.messages.push(format!(
                    "t = {}: '{}' switched {} -> {} while '{}' is not at {}",
                    e.time,
                    family.members()[e.member].label,
                    e.from,
                    e.to,
                    family.members()[j].label,
                    e.to
                ));
                break;
            }
        }
    }
    let tps = &report.transition_points;
    for (k, p) in tps.iter().enumerate() {
        let expected = if k % 2 == 0 { (alpha0, alpha1) } else { (alpha1, alpha0) };
        if (p.from, p.to) != expected {
            pre.alternating = false;
            pre.messages.push(format!(
                "transition point {k} at t = {} is ({}, {})",
                p.time, p.from, p.to
            ));
            break;
        }
    }

    let mut pairs = Vec::new();
    for i in 0..tps.len() {
        let tp = tps[i];
        let pair = (tp.from, tp.to);
        if !([alpha0, alpha1].contains(&pair.0) && [alpha0, alpha1].contains(&pair.1)) {
            continue;
        }
        let Some(hat) = tps.get(i + 1) else { continue };
        let prev = if i == 0 { signal.start() } else { tps[i - 1].time };
        let mut deleted: Option<HysteresisOutput> = None;
        for later in &tps[i + 2..] {
            if (later.from, later.to) != pair {
                continue;
            }
            if deleted.is_none() {
                deleted = Some(apply(family, &delete_history(signal, prev, hat.time)?)?);
            }
            let del = deleted.as_ref().expect("just computed");
            let t_eval = right_limit_time(&full, del, later.time);
            let a = full.states_at(t_eval)?;
            let b = del.states_at(t_eval)?;
            let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            let va = full.value_at(t_eval)?;
            let vb = del.value_at(t_eval)?;
            let aggregate_match = va.iter().zip(vb).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            pairs.push(WipeoutPair {
                t_prime: tp.time,
                t_hat: hat.time,
                t_double: later.time,
                pair,
                rho_prime: family.members()[tp.member].label.clone(),
                rho_double: family.members()[later.member].label.clone(),
                eligible: strict[side(pair.0)][tp.member][later.member],
                states_match: differing == 0,
                aggregate_match,
                differing_members: differing,
            });
        }
    }
    Ok(WipeoutReport {
        preconditions: pre,
        pairs,
    })
}

/// A time just after `t` and before any later switching in either history,
/// so that switchings at `t` computed with different rounding are included.
fn right_limit_time(a: &HysteresisOutput, b: &HysteresisOutput, t: f64) -> f64 {
    let next = |o: &HysteresisOutput| {
        o.times
            .iter()
            .copied()
            .find(|&s| s > t + 1e-12 * (1.0 + t.abs()))
            .unwrap_or(o.end)
    };
    let gap = next(a).min(next(b)) - t;
    let dt = (1e-9 * (1.0 + t.abs())).min(0.5 * gap);
    (t + dt.max(0.0)).min(a.end)
}
