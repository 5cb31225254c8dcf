//! Multi-state non-ideal relays with vector input.
//!
//! A relay is a set of elementary output states, one open continuation set per
//! state, and for each state a partition of its relative boundary into
//! switching facets `S_αβ ⊆ C_β`. The output stays at `α` while the input is in
//! `C_α`; on exit through `S_αβ` it jumps to `β` (right-continuously).

mod fixtures;
mod validate;

pub use fixtures::TriangleFixture;
pub use validate::{validate, validate_with, ValidationConfig, Violation, ViolationKind};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{exit_time, BoundaryFacet, GeometryError, HalfSpace, Point, Region, Signal};

/// Hard cap on the number of switchings in one evolution.
pub const MAX_EVENTS: usize = 1_000_000;

/// Index of an elementary output state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);

impl std::fmt::Display for StateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelayError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("malformed relay: {0}")]
    Structure(String),
    #[error("initial state {state} is incompatible with input {point:?}")]
    IncompatibleInitialState { state: StateId, point: Vec<f64> },
    #[error("exit point {point:?} at t = {time} from state {state} lies on {candidates} switching facets")]
    ExitPointUnclassified {
        time: f64,
        state: StateId,
        point: Vec<f64>,
        candidates: usize,
    },
    #[error("input left the admissible set at t = {time}, point {point:?}")]
    SignalLeftOmega { time: f64, point: Vec<f64> },
    #[error("zero dwell time in state {state} at t = {time}")]
    ZeroDwell { time: f64, state: StateId },
    #[error("more than {0} switchings")]
    TooManyEvents(usize),
    #[error("time {t} outside trajectory domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
}

/// One elementary output state: a label, its output payload and `C_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayState {
    pub label: String,
    pub payload: Vec<f64>,
    pub continuation: Region,
}

/// The relay `R`: admissible input set `Ω`, continuation sets and switching facets.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaySpec {
    omega: Region,
    states: Vec<RelayState>,
    facets: BTreeMap<(StateId, StateId), BoundaryFacet>,
}

impl RelaySpec {
    /// Assembles a relay after structural checks (dimensions, indices,
    /// payload sizes). Semantic conditions are checked by [`validate`].
    pub fn new(
        omega: Region,
        states: Vec<RelayState>,
        facets: BTreeMap<(StateId, StateId), BoundaryFacet>,
    ) -> Result<Self, RelayError> {
        if states.is_empty() {
            return Err(RelayError::Structure("relay needs at least one state".into()));
        }
        let dim = omega.dim();
        let payload_dim = states[0].payload.len();
        for s in &states {
            if s.continuation.dim() != dim {
                return Err(RelayError::Structure(format!(
                    "continuation set of '{}' has dimension {}, expected {dim}",
                    s.label,
                    s.continuation.dim()
                )));
            }
            if s.payload.len() != payload_dim {
                return Err(RelayError::Structure(format!(
                    "payload of '{}' has length {}, expected {payload_dim}",
                    s.label,
                    s.payload.len()
                )));
            }
        }
        for (&(a, b), f) in &facets {
            if a == b || a.0 >= states.len() || b.0 >= states.len() {
                return Err(RelayError::Structure(format!("bad facet key ({a}, {b})")));
            }
            if f.dim() != dim {
                return Err(RelayError::Structure(format!(
                    "facet ({a}, {b}) has dimension {}",
                    f.dim()
                )));
            }
        }
        Ok(Self { omega, states, facets })
    }

    /// Classic two-state relay on the real line: `C_-1 = (-∞, ρ1)`,
    /// `C_+1 = (ρ2, ∞)`, `S_{-1,+1} = {ρ1}`, `S_{+1,-1} = {ρ2}`.
    ///
    /// State 0 is `-1` and state 1 is `+1`. No ordering of the thresholds is
    /// enforced here; [`validate`] reports a covering gap when `ρ1 < ρ2`.
    pub fn classic(rho1: f64, rho2: f64) -> Result<Self, RelayError> {
        let lower = Region::new(1, vec![HalfSpace::below(rho1)])?;
        let upper = Region::new(1, vec![HalfSpace::above(rho2)])?;
        let mut facets = BTreeMap::new();
        facets.insert((StateId(0), StateId(1)), BoundaryFacet::whole(&lower, 0)?);
        facets.insert((StateId(1), StateId(0)), BoundaryFacet::whole(&upper, 0)?);
        Self::new(
            Region::whole(1),
            vec![
                RelayState {
                    label: "-1".into(),
                    payload: vec![-1.0],
                    continuation: lower,
                },
                RelayState {
                    label: "+1".into(),
                    payload: vec![1.0],
                    continuation: upper,
                },
            ],
            facets,
        )
    }

    /// Single-state relay whose continuation set is all of `Ω`.
    pub fn trivial(omega: Region, payload: Vec<f64>) -> Result<Self, RelayError> {
        let state = RelayState {
            label: "only".into(),
            payload,
            continuation: omega.clone(),
        };
        Self::new(omega, vec![state], BTreeMap::new())
    }

    pub fn omega(&self) -> &Region {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[RelayState] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &RelayState {
        &self.states[id.0]
    }

    pub fn payload(&self, id: StateId) -> &[f64] {
        &self.states[id.0].payload
    }

    pub fn payload_dim(&self) -> usize {
        self.states[0].payload.len()
    }

    pub fn continuation(&self, id: StateId) -> &Region {
        &self.states[id.0].continuation
    }

    pub fn facet(&self, from: StateId, to: StateId) -> Option<&BoundaryFacet> {
        self.facets.get(&(from, to))
    }

    pub fn facets(&self) -> impl Iterator<Item = (StateId, StateId, &BoundaryFacet)> {
        self.facets.iter().map(|(&(a, b), f)| (a, b, f))
    }

    /// Facets `S_αβ` leaving `from`.
    pub fn facets_from(&self, from: StateId) -> impl Iterator<Item = (StateId, &BoundaryFacet)> {
        self.facets
            .range((from, StateId(0))..=(from, StateId(usize::MAX)))
            .map(|(&(_, b), f)| (b, f))
    }

    pub fn state_by_label(&self, label: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.label == label).map(StateId)
    }

    /// The unique target `β` with `x ∈ S_αβ`.
    pub fn switch_target(&self, from: StateId, x: &Point) -> Result<Option<StateId>, usize> {
        let mut hits = self
            .facets_from(from)
            .filter(|(_, f)| f.contains(x).unwrap_or(false))
            .map(|(b, _)| b);
        match (hits.next(), hits.next()) {
            (None, _) => Ok(None),
            (Some(b), None) => Ok(Some(b)),
            (Some(_), Some(_)) => Err(2 + hits.count()),
        }
    }
}

/// A recorded switching `from → to` at `time` through `point`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchEvent {
    pub time: f64,
    pub from: StateId,
    pub to: StateId,
    pub point: Point,
}

/// Piecewise-constant, right-continuous relay output over `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayTrajectory {
    pub initial_state: StateId,
    pub start: f64,
    pub end: f64,
    pub events: Vec<SwitchEvent>,
}

impl RelayTrajectory {
    /// Output at `t`: the state entered by the last event with time ≤ t.
    pub fn output_at(&self, t: f64) -> Result<StateId, RelayError> {
        if !(t >= self.start && t <= self.end) {
            return Err(RelayError::OutOfDomain {
                t,
                start: self.start,
                end: self.end,
            });
        }
        let n = self.events.partition_point(|e| e.time <= t);
        Ok(if n == 0 {
            self.initial_state
        } else {
            self.events[n - 1].to
        })
    }

    pub fn final_state(&self) -> StateId {
        self.events.last().map_or(self.initial_state, |e| e.to)
    }

    /// Visited states in order, starting with the initial one.
    pub fn states(&self) -> Vec<StateId> {
        std::iter::once(self.initial_state)
            .chain(self.events.iter().map(|e| e.to))
            .collect()
    }
}

/// Event-driven evolution of the relay under a piecewise-linear input.
///
/// Exit times are solved exactly per linear segment; the new state is the
/// unique `β` whose facet `S_αβ` contains the exit point.
pub fn evolve(spec: &RelaySpec, signal: &Signal, alpha0: StateId) -> Result<RelayTrajectory, RelayError> {
    if alpha0.0 >= spec.state_count() {
        return Err(RelayError::Structure(format!("unknown state {alpha0}")));
    }
    if signal.dim() != spec.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: spec.dim(),
            found: signal.dim(),
        }
        .into());
    }
    let mut traj = RelayTrajectory {
        initial_state: alpha0,
        start: signal.start(),
        end: signal.end(),
        events: Vec::new(),
    };
    let mut state = alpha0;
    let mut t = signal.start();
    loop {
        let region = spec.continuation(state);
        let exit = match exit_time(signal, region, t) {
            Ok(e) => e,
            Err(GeometryError::NotInside(_)) if traj.events.is_empty() => {
                return Err(RelayError::IncompatibleInitialState {
                    state,
                    point: signal.at(t)?.iter().copied().collect(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let Some((s, x)) = exit else {
            return Ok(traj);
        };
        if !traj.events.is_empty() && s <= t {
            return Err(RelayError::ZeroDwell { time: s, state });
        }
        if !spec.omega.contains(&x)? {
            return Err(RelayError::SignalLeftOmega {
                time: s,
                point: x.iter().copied().collect(),
            });
        }
        let to = match spec.switch_target(state, &x) {
            Ok(Some(b)) => b,
            Ok(None) => {
                return Err(RelayError::ExitPointUnclassified {
                    time: s,
                    state,
                    point: x.iter().copied().collect(),
                    candidates: 0,
                })
            }
            Err(n) => {
                return Err(RelayError::ExitPointUnclassified {
                    time: s,
                    state,
                    point: x.iter().copied().collect(),
                    candidates: n,
                })
            }
        };
        traj.events.push(SwitchEvent {
            time: s,
            from: state,
            to,
            point: x,
        });
        if traj.events.len() > MAX_EVENTS {
            return Err(RelayError::TooManyEvents(MAX_EVENTS));
        }
        state = to;
        t = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classic() -> RelaySpec {
        RelaySpec::classic(1.0, -1.0).unwrap()
    }

    #[test]
    fn classic_relay_two_switchings() {
        let u = Signal::scalar(vec![0.0, 1.0, 2.0, 3.0], &[0.0, 2.0, -2.0, 0.0]).unwrap();
        let tr = evolve(&classic(), &u, StateId(0)).unwrap();
        assert_eq!(tr.events.len(), 2);
        assert!((tr.events[0].time - 0.5).abs() < 1e-12);
        assert_eq!((tr.events[0].from, tr.events[0].to), (StateId(0), StateId(1)));
        assert!((tr.events[1].time - 1.75).abs() < 1e-12);
        assert_eq!((tr.events[1].from, tr.events[1].to), (StateId(1), StateId(0)));
    }

    #[test]
    fn constant_input_keeps_state() {
        let u = Signal::scalar(vec![0.0, 4.0], &[0.3, 0.3]).unwrap();
        let tr = evolve(&classic(), &u, StateId(0)).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.output_at(2.0).unwrap(), StateId(0));
    }

    #[test]
    fn output_is_right_continuous() {
        let u = Signal::scalar(vec![0.0, 2.0], &[0.0, 2.0]).unwrap();
        let tr = evolve(&classic(), &u, StateId(0)).unwrap();
        let t1 = tr.events[0].time;
        assert_eq!(tr.output_at(0.0).unwrap(), StateId(0));
        assert_eq!(tr.output_at(t1).unwrap(), StateId(1));
        assert_eq!(tr.output_at(2.0).unwrap(), StateId(1));
        assert!(tr.output_at(2.5).is_err());
    }

    #[test]
    fn incompatible_initial_state() {
        let u = Signal::scalar(vec![0.0, 1.0], &[1.5, 1.5]).unwrap();
        assert!(matches!(
            evolve(&classic(), &u, StateId(0)),
            Err(RelayError::IncompatibleInitialState { .. })
        ));
    }

    #[test]
    fn final_point_on_facet_switches() {
        let u = Signal::scalar(vec![0.0, 1.0], &[0.0, 1.0]).unwrap();
        let tr = evolve(&classic(), &u, StateId(0)).unwrap();
        assert_eq!(tr.events.len(), 1);
        assert_eq!(tr.events[0].time, 1.0);
        assert_eq!(tr.output_at(1.0).unwrap(), StateId(1));
    }

    #[test]
    fn facets_from_lists_targets() {
        let spec = classic();
        let targets: Vec<_> = spec.facets_from(StateId(1)).map(|(b, _)| b).collect();
        assert_eq!(targets, vec![StateId(0)]);
    }

    #[test]
    fn unclassified_exit_reported() {
        // a relay whose only facet misses part of the boundary
        let lower = Region::interval(Some(-5.0), Some(1.0)).unwrap();
        let upper = Region::interval(Some(-1.0), None).unwrap();
        let mut facets = BTreeMap::new();
        facets.insert((StateId(0), StateId(1)), BoundaryFacet::whole(&lower, 0).unwrap());
        let spec = RelaySpec::new(
            Region::whole(1),
            vec![
                RelayState {
                    label: "a".into(),
                    payload: vec![0.0],
                    continuation: lower,
                },
                RelayState {
                    label: "b".into(),
                    payload: vec![1.0],
                    continuation: upper,
                },
            ],
            facets,
        )
        .unwrap();
        let u = Signal::scalar(vec![0.0, 1.0], &[0.0, -6.0]).unwrap();
        assert!(matches!(
            evolve(&spec, &u, StateId(0)),
            Err(RelayError::ExitPointUnclassified { candidates: 0, .. })
        ));
    }
}
