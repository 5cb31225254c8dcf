//! Resolution of named definitions into library objects.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::schema::*;
use super::signal::generate_signal;
use super::ScenarioError;
use crate::game::{GameSpec, Grid};
use crate::geometry::{BoundaryFacet, ClipConstraint, HalfSpace, Point, Region, Signal};
use crate::hysteresis::{preisach_grid, FamilyMember, PreisachThreshold, RelayFamily};
use crate::markov::{ImpulseSurface, ImpulsiveSystem, MarkovField, SemiFlow};
use crate::relay::{validate_with, RelaySpec, RelayState, StateId, TriangleFixture, ValidationConfig};

pub(super) fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, section: &'static str, name: &str) -> Result<&'a T, ScenarioError> {
    map.get(name).ok_or_else(|| ScenarioError::Unresolved {
        section,
        name: name.to_string(),
    })
}

pub(super) fn required<'a, T>(v: &'a Option<T>, key: &str) -> Result<&'a T, ScenarioError> {
    v.as_ref().ok_or_else(|| invalid(format!("[run] needs '{key}'")))
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ScenarioError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(invalid(format!("{what}: rows must be nonempty and equally long")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>, ScenarioError> {
    let m = matrix(rows, what)?;
    if m.shape() != (n, n) {
        return Err(invalid(format!("{what}: expected a {n}x{n} matrix")));
    }
    Ok(m)
}

pub(super) fn region(sc: &Scenario, name: &str) -> Result<Region, ScenarioError> {
    let def = lookup(&sc.regions, "region", name)?;
    let hs = def
        .halfspaces
        .iter()
        .map(|h| HalfSpace::new(&h.normal, h.offset))
        .collect::<Result<Vec<_>, _>>()?;
    let r = match (&def.witness, hs.is_empty()) {
        (_, true) => Region::whole(
            def.dim
                .ok_or_else(|| invalid(format!("region '{name}' needs dim or halfspaces")))?,
        ),
        (Some(w), false) => Region::with_witness(hs, Point::from_vec(w.clone()))?,
        (None, false) => Region::new(hs[0].dim(), hs)?,
    };
    if let Some(d) = def.dim {
        if d != r.dim() {
            return Err(invalid(format!(
                "region '{name}' has dimension {}, declared {d}",
                r.dim()
            )));
        }
    }
    Ok(r)
}

pub(super) fn relay(sc: &Scenario, name: &str) -> Result<RelaySpec, ScenarioError> {
    let spec = match lookup(&sc.relays, "relay", name)? {
        RelayDef::Classic { rho1, rho2 } => RelaySpec::classic(*rho1, *rho2)?,
        RelayDef::Triangle => TriangleFixture::new().spec,
        RelayDef::Trivial { dim, payload } => RelaySpec::trivial(Region::whole(*dim), payload.to_vec())?,
        RelayDef::Custom { omega, states, facets } => {
            let omega = region(sc, omega)?;
            let mut built = Vec::with_capacity(states.len());
            for s in states {
                built.push(RelayState {
                    label: s.label.clone(),
                    payload: s.payload.to_vec(),
                    continuation: region(sc, &s.region)?,
                });
            }
            let id = |label: &str| {
                built
                    .iter()
                    .position(|s| s.label == label)
                    .map(StateId)
                    .ok_or_else(|| ScenarioError::Unresolved {
                        section: "state",
                        name: label.to_string(),
                    })
            };
            let mut map = BTreeMap::new();
            for f in facets {
                let (a, b) = (id(&f.from)?, id(&f.to)?);
                let clip = f
                    .clip
                    .iter()
                    .map(|c| {
                        let h = HalfSpace::new(&c.normal, c.offset)?;
                        Ok(if c.closed {
                            ClipConstraint::closed(h)
                        } else {
                            ClipConstraint::open(h)
                        })
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                let facet = BoundaryFacet::new(&built[a.0].continuation, f.support, clip)?;
                if map.insert((a, b), facet).is_some() {
                    return Err(invalid(format!(
                        "relay '{name}': duplicate facet {} -> {}",
                        f.from, f.to
                    )));
                }
            }
            RelaySpec::new(omega, built, map)?
        }
    };
    Ok(spec)
}

/// Members of a family before validation, in declaration order.
pub(super) fn family_members(sc: &Scenario, name: &str) -> Result<Vec<FamilyMember>, ScenarioError> {
    let thresholds = |ts: Vec<PreisachThreshold>| -> Result<Vec<FamilyMember>, ScenarioError> {
        ts.iter()
            .enumerate()
            .map(|(i, t)| {
                let initial = match t.initial {
                    -1 => StateId(0),
                    1 => StateId(1),
                    s => {
                        return Err(invalid(format!(
                            "family '{name}': initial state must be -1 or 1, got {s}"
                        )))
                    }
                };
                Ok(FamilyMember {
                    label: format!("r{i}"),
                    spec: RelaySpec::classic(t.rho1, t.rho2)?,
                    weight: t.weight,
                    initial,
                })
            })
            .collect()
    };
    match lookup(&sc.families, "family", name)? {
        FamilyDef::Preisach { thresholds: ts } => thresholds(
            ts.iter()
                .map(|t| PreisachThreshold {
                    rho1: t.rho1,
                    rho2: t.rho2,
                    weight: t.weight,
                    initial: t.initial,
                })
                .collect(),
        ),
        FamilyDef::PreisachGrid { lo, hi, n } => {
            if !(lo < hi) || *n < 2 {
                return Err(invalid(format!("family '{name}': need lo < hi and n >= 2")));
            }
            thresholds(preisach_grid(*lo, *hi, *n))
        }
        FamilyDef::Members { members } => members
            .iter()
            .map(|m| {
                let spec = relay(sc, &m.relay)?;
                let initial = match &m.initial {
                    None => StateId(0),
                    Some(l) => spec.state_by_label(l).ok_or_else(|| ScenarioError::Unresolved {
                        section: "state",
                        name: l.clone(),
                    })?,
                };
                Ok(FamilyMember {
                    label: m.label.clone(),
                    spec,
                    weight: m.weight,
                    initial,
                })
            })
            .collect(),
    }
}

/// Runs relay validation on each `(label, spec)` and collects readable lines.
pub(super) fn validation_lines<'a>(
    specs: impl IntoIterator<Item = (&'a str, &'a RelaySpec)>,
    seed: u64,
) -> Vec<String> {
    let cfg = ValidationConfig {
        seed,
        ..ValidationConfig::default()
    };
    let mut out = Vec::new();
    for (label, spec) in specs {
        for v in validate_with(spec, &cfg) {
            out.push(format!("{label}: {v}"));
        }
    }
    out
}

/// Validated family; covering violations abort with the full list.
pub(super) fn family(sc: &Scenario, name: &str) -> Result<RelayFamily, ScenarioError> {
    let members = family_members(sc, name)?;
    let lines = validation_lines(members.iter().map(|m| (m.label.as_str(), &m.spec)), sc.seed);
    if !lines.is_empty() {
        return Err(ScenarioError::Validation(lines));
    }
    Ok(RelayFamily::new(members)?)
}

pub(super) fn signal(sc: &Scenario, name: &str) -> Result<Signal, ScenarioError> {
    generate_signal(lookup(&sc.signals, "signal", name)?)
}

pub(super) fn field(sc: &Scenario, name: &str) -> Result<MarkovField, ScenarioError> {
    let (mut field, impulses) = match lookup(&sc.fields, "field", name)? {
        FieldDef::SymmetricTwoState { lambda, impulses } => {
            if !(*lambda >= 0.0 && lambda.is_finite()) {
                return Err(invalid(format!(
                    "field '{name}': lambda must be finite and nonnegative"
                )));
            }
            (MarkovField::symmetric_two_state(*lambda), impulses)
        }
        FieldDef::Custom {
            intensities,
            jump_kernel,
            impulses,
        } => {
            let n = jump_kernel.len();
            let g = square(jump_kernel, n, &format!("field '{name}' jump_kernel"))?;
            let phi: crate::markov::VecFn = match intensities.clone() {
                IntensityDef::Constant { values } => {
                    if values.len() != n {
                        return Err(invalid(format!("field '{name}': need {n} intensities")));
                    }
                    let v = DVector::from_vec(values);
                    Arc::new(move |_, _| v.clone())
                }
                IntensityDef::Affine {
                    base,
                    slope,
                    time_slope,
                } => {
                    let pad = |v: Vec<f64>, what: &str| -> Result<Vec<f64>, ScenarioError> {
                        match v.len() {
                            0 => Ok(vec![0.0; n]),
                            l if l == n => Ok(v),
                            _ => Err(invalid(format!("field '{name}': {what} needs {n} entries"))),
                        }
                    };
                    let (b, s, ts) = (pad(base, "base")?, pad(slope, "slope")?, pad(time_slope, "time_slope")?);
                    Arc::new(move |t, x| DVector::from_fn(n, |i, _| b[i] + s[i] * x[0] + ts[i] * t))
                }
            };
            (
                MarkovField::new(n, phi, Arc::new(move |_, _| g.clone()), Vec::new()),
                impulses,
            )
        }
    };
    let n = field.states();
    for (k, imp) in impulses.iter().enumerate() {
        let p = square(&imp.p, n, &format!("field '{name}' impulse {k}"))?;
        let surface = match (imp.time, &imp.region) {
            (Some(t), None) => ImpulseSurface::Time(t),
            (None, Some(r)) => ImpulseSurface::Facet(BoundaryFacet::whole(&region(sc, r)?, imp.support)?),
            _ => {
                return Err(invalid(format!(
                    "field '{name}' impulse {k}: give exactly one of time, region"
                )))
            }
        };
        field = field.with_impulse(surface, Arc::new(move |_, _| p.clone()));
    }
    Ok(field)
}

pub(super) fn flow(sc: &Scenario, name: &str) -> Result<SemiFlow, ScenarioError> {
    Ok(match lookup(&sc.flows, "flow", name)?.clone() {
        FlowDef::Constant { dim } => SemiFlow::closed_form(dim, |_, _, x| x.clone()),
        FlowDef::LinearDrift { velocity } => {
            let v = Point::from_vec(velocity);
            SemiFlow::closed_form(v.len(), move |s, t, x| x + &v * (t - s))
        }
        FlowDef::Exponential { dim, rate } => SemiFlow::closed_form(dim, move |s, t, x| x * (rate * (t - s)).exp()),
        FlowDef::Rotation { omega } => {
            SemiFlow::velocity_field(2, move |_, x| Point::from_row_slice(&[-omega * x[1], omega * x[0]]))
        }
    })
}

pub(super) fn system(sc: &Scenario, name: &str) -> Result<ImpulsiveSystem, ScenarioError> {
    Ok(match lookup(&sc.systems, "system", name)? {
        SystemDef::Constant {
            a,
            impulses,
            start,
            end,
        } => {
            let a = matrix(a, &format!("system '{name}' a"))?;
            let n = a.nrows();
            if a.ncols() != n {
                return Err(invalid(format!("system '{name}': a must be square")));
            }
            let imps = impulses
                .iter()
                .map(|i| Ok((i.time, square(&i.b, n, &format!("system '{name}' impulse"))?)))
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            ImpulsiveSystem::constant(a, imps, (*start, *end))?
        }
        SystemDef::Field {
            field: f,
            flow: fl,
            xi,
            start,
            end,
        } => {
            let (f, fl) = (field(sc, f)?, flow(sc, fl)?);
            ImpulsiveSystem::from_field(&f, &fl, *start, *end, &Point::from_vec(xi.to_vec()))?
        }
    })
}

fn norm2(v: &Point) -> f64 {
    v.norm_squared()
}

/// Game data and its grid; `refine` splits every grid cell into that many.
pub(super) fn game(sc: &Scenario, name: &str, refine: usize) -> Result<(GameSpec, Grid), ScenarioError> {
    let def = lookup(&sc.games, "game", name)?;
    if def.c1.is_empty() || def.c2.is_empty() {
        return Err(invalid(format!("game '{name}': control grids must be nonempty")));
    }
    let c1: Vec<Point> = def.c1.iter().map(|c| Point::from_vec(c.to_vec())).collect();
    let c2: Vec<Point> = def.c2.iter().map(|c| Point::from_vec(c.to_vec())).collect();
    let family = match &def.family {
        Some(f) => family(sc, f)?,
        None => RelayFamily::new(vec![FamilyMember {
            label: "only".into(),
            spec: RelaySpec::trivial(Region::whole(c1[0].len()), vec![0.0])?,
            weight: 1.0,
            initial: StateId(0),
        }])?,
    };
    let g = &def.grid;
    if g.lo.len() != g.hi.len() || g.lo.is_empty() || g.nodes == 0 || refine == 0 {
        return Err(invalid(format!(
            "game '{name}': grid needs matching lo/hi, nodes >= 1, refine >= 1"
        )));
    }
    let nodes = (g.nodes - 1) * refine + 1;
    let bounds: Vec<(f64, f64)> = g.lo.iter().copied().zip(g.hi.iter().copied()).collect();
    let grid = Grid::uniform(&bounds, nodes)?;

    let react_dim = match def.reaction {
        ReactionDef::None => 0,
        ReactionDef::Scaled { .. } => family.payload_dim(),
    };
    let u2_dim = react_dim + c2[0].len();
    let dynamics: crate::game::DynamicsFn = match def.dynamics.clone() {
        DynamicsDef::Linear { a, b1, b2 } => {
            if b2.len() != u2_dim {
                return Err(invalid(format!("game '{name}': b2 needs {u2_dim} entries")));
            }
            Arc::new(move |_, x, c1, u2| {
                let push = b1 * c1[0] + b2.iter().zip(u2.iter()).map(|(b, u)| b * u).sum::<f64>();
                x.map(|xi| a * xi + push)
            })
        }
    };
    let running_cost: crate::game::RunningCostFn = match def.running_cost {
        RunningCostDef::Zero => Arc::new(|_, _, _, _| 0.0),
        RunningCostDef::Quadratic { q, r1, r2 } => {
            Arc::new(move |_, x, c1, u2| q * norm2(x) + r1 * norm2(c1) - r2 * norm2(u2))
        }
        RunningCostDef::Bilinear { k } => Arc::new(move |_, x, c1, _| k * c1[0] * x[0]),
    };
    let terminal_cost: crate::game::TerminalCostFn = match def.terminal_cost.clone() {
        TerminalCostDef::Zero => Arc::new(|_| 0.0),
        TerminalCostDef::Quadratic { w } => Arc::new(move |x| w * norm2(x)),
        TerminalCostDef::Linear { w } => {
            if w.len() != grid.dim() {
                return Err(invalid(format!(
                    "game '{name}': terminal weights need {} entries",
                    grid.dim()
                )));
            }
            Arc::new(move |x| w.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
        }
    };
    let reaction: crate::game::ReactionFn = match def.reaction {
        ReactionDef::None => Arc::new(|_, _| Point::zeros(0)),
        ReactionDef::Scaled { k } => Arc::new(move |_, h| Point::from_iterator(h.len(), h.iter().map(|v| k * v))),
    };
    let spec = GameSpec {
        dynamics,
        running_cost,
        terminal_cost,
        c1_grid: c1,
        c2_grid: c2,
        family,
        reaction,
        horizon: def.horizon,
        time_steps: def.steps,
    };
    Ok((spec, grid))
}
