//! Superposition of weighted relay families and the classic Preisach model.

mod monotropy;

pub use monotropy::{
    analyze_monotropy, check_local_wipeout, delete_history, monotropy_distance, preorder_leq, MonotropyInterval,
    MonotropyReport, TransitionPoint, WipeoutPair, WipeoutPreconditions, WipeoutReport,
};

use thiserror::Error;

use crate::geometry::{GeometryError, Signal};
use crate::relay::{evolve, RelayError, RelaySpec, RelayTrajectory, StateId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HysteresisError {
    #[error("relay family is empty")]
    EmptyFamily,
    #[error("member '{label}': {source}")]
    Member {
        label: String,
        #[source]
        source: RelayError,
    },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("Preisach thresholds need rho1 > rho2, got ({rho1}, {rho2})")]
    ThresholdOrder { rho1: f64, rho2: f64 },
    #[error("Preisach initial state must be -1 or +1, got {0}")]
    InitialState(i8),
    #[error("unknown member label '{0}'")]
    UnknownMember(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("signal leaves the window at t = {0}")]
    OutsideWindow(f64),
    #[error("time {t} outside output domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
}

/// One weighted relay of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub label: String,
    pub spec: RelaySpec,
    pub weight: f64,
    pub initial: StateId,
}

/// A finite weighted family of relays sharing input and payload dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayFamily {
    members: Vec<FamilyMember>,
}

impl RelayFamily {
    pub fn new(members: Vec<FamilyMember>) -> Result<Self, HysteresisError> {
        let first = members.first().ok_or(HysteresisError::EmptyFamily)?;
        let (dim, pdim) = (first.spec.dim(), first.spec.payload_dim());
        let mut labels = std::collections::BTreeSet::new();
        for m in &members {
            if m.spec.dim() != dim || m.spec.payload_dim() != pdim {
                return Err(HysteresisError::InvalidFamily(format!(
                    "member '{}' has dimensions ({}, {}), expected ({dim}, {pdim})",
                    m.label,
                    m.spec.dim(),
                    m.spec.payload_dim()
                )));
            }
            if !(m.weight.is_finite() && m.weight > 0.0) {
                return Err(HysteresisError::InvalidFamily(format!(
                    "member '{}' has weight {}",
                    m.label, m.weight
                )));
            }
            if m.initial.0 >= m.spec.state_count() {
                return Err(HysteresisError::InvalidFamily(format!(
                    "member '{}' has unknown initial state {}",
                    m.label, m.initial
                )));
            }
            if !labels.insert(m.label.as_str()) {
                return Err(HysteresisError::InvalidFamily(format!("duplicate label '{}'", m.label)));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[FamilyMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].spec.dim()
    }

    pub fn payload_dim(&self) -> usize {
        self.members[0].spec.payload_dim()
    }

    pub fn total_weight(&self) -> f64 {
        self.members.iter().map(|m| m.weight).sum()
    }

    pub fn index_of(&self, label: &str) -> Result<usize, HysteresisError> {
        self.members
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| HysteresisError::UnknownMember(label.to_string()))
    }

    /// Same family with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, HysteresisError> {
        let members = self
            .members
            .iter()
            .map(|m| FamilyMember {
                weight: m.weight * factor,
                ..m.clone()
            })
            .collect();
        Self::new(members)
    }

    /// Same family with new initial states.
    pub fn with_initial(&self, initial: &[StateId]) -> Result<Self, HysteresisError> {
        if initial.len() != self.len() {
            return Err(HysteresisError::InvalidFamily(format!(
                "{} initial states for {} members",
                initial.len(),
                self.len()
            )));
        }
        let members = self
            .members
            .iter()
            .zip(initial)
            .map(|(m, &s)| FamilyMember {
                initial: s,
                ..m.clone()
            })
            .collect();
        Self::new(members)
    }

    /// Weighted sum of member payloads for a state profile.
    pub fn aggregate(&self, states: &[StateId]) -> Vec<f64> {
        let mut out = vec![0.0; self.payload_dim()];
        for (m, s) in self.members.iter().zip(states) {
            for (o, p) in out.iter_mut().zip(m.spec.payload(*s)) {
                *o += m.weight * p;
            }
        }
        out
    }
}

/// Threshold pair and initial output (`-1` or `+1`) of one Preisach relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreisachThreshold {
    pub rho1: f64,
    pub rho2: f64,
    pub weight: f64,
    pub initial: i8,
}

/// Classic Preisach family from threshold pairs with `rho1 > rho2`.
pub fn preisach_family(thresholds: &[PreisachThreshold]) -> Result<RelayFamily, HysteresisError> {
    let members = thresholds
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if !(t.rho1 > t.rho2) {
                return Err(HysteresisError::ThresholdOrder {
                    rho1: t.rho1,
                    rho2: t.rho2,
                });
            }
            let initial = match t.initial {
                -1 => StateId(0),
                1 => StateId(1),
                s => return Err(HysteresisError::InitialState(s)),
            };
            let spec = RelaySpec::classic(t.rho1, t.rho2).map_err(|source| HysteresisError::Member {
                label: format!("r{i}"),
                source,
            })?;
            Ok(FamilyMember {
                label: format!("r{i}"),
                spec,
                weight: t.weight,
                initial,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    RelayFamily::new(members)
}

/// Midpoint-rule discretization of the Preisach triangle `lo < rho2 < rho1 < hi`
/// on an `n × n` grid: one relay per cell centre strictly above the diagonal,
/// weighted by the cell area. All relays start at `-1`.
pub fn preisach_grid(lo: f64, hi: f64, n: usize) -> Vec<PreisachThreshold> {
    let h = (hi - lo) / n as f64;
    let centre = |i: usize| lo + (i as f64 + 0.5) * h;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..i {
            out.push(PreisachThreshold {
                rho1: centre(i),
                rho2: centre(j),
                weight: h * h,
                initial: -1,
            });
        }
    }
    out
}

/// Right-continuous record of `(Hu)(t)` and of every member's output.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisOutput {
    /// Start time followed by the distinct switching times.
    pub times: Vec<f64>,
    /// Aggregate output on `[times[k], times[k+1])`.
    pub values: Vec<Vec<f64>>,
    pub end: f64,
    pub trajectories: Vec<RelayTrajectory>,
}

impl HysteresisOutput {
    fn index_at(&self, t: f64) -> Result<usize, HysteresisError> {
        let start = self.times[0];
        if !(t >= start && t <= self.end) {
            return Err(HysteresisError::OutOfDomain {
                t,
                start,
                end: self.end,
            });
        }
        Ok(self.times.partition_point(|&s| s <= t) - 1)
    }

    pub fn value_at(&self, t: f64) -> Result<&[f64], HysteresisError> {
        Ok(&self.values[self.index_at(t)?])
    }

    /// Per-member states at `t`.
    pub fn states_at(&self, t: f64) -> Result<Vec<StateId>, HysteresisError> {
        self.index_at(t)?;
        Ok(self
            .trajectories
            .iter()
            .map(|tr| tr.output_at(t).expect("shared time domain"))
            .collect())
    }
}

/// Evolves every member and superposes the weighted payloads.
pub fn apply(family: &RelayFamily, signal: &Signal) -> Result<HysteresisOutput, HysteresisError> {
    let trajectories = family
        .members()
        .iter()
        .map(|m| {
            evolve(&m.spec, signal, m.initial).map_err(|source| HysteresisError::Member {
                label: m.label.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut events: Vec<(f64, usize, StateId)> = trajectories
        .iter()
        .enumerate()
        .flat_map(|(i, tr)| tr.events.iter().map(move |e| (e.time, i, e.to)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut states: Vec<StateId> = family.members().iter().map(|m| m.initial).collect();
    let mut times = vec![signal.start()];
    let mut values = vec![family.aggregate(&states)];
    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        while k < events.len() && events[k].0 == t {
            states[events[k].1] = events[k].2;
            k += 1;
        }
        let v = family.aggregate(&states);
        if t == times[times.len() - 1] {
            *values.last_mut().expect("nonempty") = v;
        } else {
            times.push(t);
            values.push(v);
        }
    }
    Ok(HysteresisOutput {
        times,
        values,
        end: signal.end(),
        trajectories,
    })
}
