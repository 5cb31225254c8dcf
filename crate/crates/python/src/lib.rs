//! Python bindings: relays, Preisach families, Markov propagation, impulsive
//! fundamental matrices, the hysteresis game and scenario files.

use std::path::PathBuf;

use hystk_core::game::{self, GameSpec, Grid};
use hystk_core::geometry::{Point, Signal};
use hystk_core::hysteresis::{self, preisach_family, preisach_grid, PreisachThreshold, RelayFamily};
use hystk_core::markov::{
    fundamental_matrix_product, fundamental_matrix_series, propagate, ImpulsiveSystem, MarkovField, SemiFlow,
};
use hystk_core::relay::{evolve, RelaySpec, StateId, TriangleFixture};
use hystk_core::scenario::{self, Scenario};
use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type Matrix = Vec<Vec<f64>>;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &Matrix) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err(
            "matrix rows must be non-empty and of equal length",
        ));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Matrix {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn signal(times: Vec<f64>, points: Vec<Vec<f64>>) -> PyResult<Signal> {
    Signal::new(times, points.into_iter().map(Point::from_vec).collect()).map_err(err)
}

/// `(time, from, to, point)` for each switch.
type Event = (f64, usize, usize, Vec<f64>);

fn run_relay(spec: &RelaySpec, times: Vec<f64>, points: Vec<Vec<f64>>, initial: usize) -> PyResult<Vec<Event>> {
    if initial >= spec.state_count() {
        return Err(PyValueError::new_err(format!("no state {initial}")));
    }
    let traj = evolve(spec, &signal(times, points)?, StateId(initial)).map_err(err)?;
    Ok(traj
        .events
        .into_iter()
        .map(|e| (e.time, e.from.0, e.to.0, e.point.iter().copied().collect()))
        .collect())
}

/// Two-state relay on the line: state 0 outputs -1, state 1 outputs +1.
#[pyclass(module = "hystk")]
struct ClassicRelay {
    spec: RelaySpec,
}

#[pymethods]
impl ClassicRelay {
    #[new]
    fn new(rho1: f64, rho2: f64) -> PyResult<Self> {
        Ok(Self {
            spec: RelaySpec::classic(rho1, rho2).map_err(err)?,
        })
    }

    /// Switch events along the scalar piecewise-linear input.
    fn evolve(&self, times: Vec<f64>, values: Vec<f64>, initial: usize) -> PyResult<Vec<Event>> {
        run_relay(
            &self.spec,
            times,
            values.into_iter().map(|v| vec![v]).collect(),
            initial,
        )
    }
}

/// Three-state relay on the open unit triangle.
#[pyclass(module = "hystk")]
struct TriangleRelay {
    fixture: TriangleFixture,
}

#[pymethods]
impl TriangleRelay {
    #[new]
    fn new() -> Self {
        Self {
            fixture: TriangleFixture::new(),
        }
    }

    /// States are numbered 0, 1, 2 for `C1`, `C2`, `C3`.
    fn evolve(&self, times: Vec<f64>, points: Vec<Vec<f64>>, initial: usize) -> PyResult<Vec<Event>> {
        run_relay(&self.fixture.spec, times, points, initial)
    }

    fn payload(&self, state: usize) -> PyResult<Vec<f64>> {
        if state >= self.fixture.spec.state_count() {
            return Err(PyValueError::new_err(format!("no state {state}")));
        }
        Ok(self.fixture.spec.payload(StateId(state)).to_vec())
    }
}

/// Weighted sum of classic relays.
#[pyclass(module = "hystk")]
struct Preisach {
    family: RelayFamily,
}

#[pymethods]
impl Preisach {
    /// `thresholds` holds `(rho1, rho2, weight, initial)` with `initial` in {-1, +1}.
    #[new]
    fn new(thresholds: Vec<(f64, f64, f64, i8)>) -> PyResult<Self> {
        let th: Vec<PreisachThreshold> = thresholds
            .into_iter()
            .map(|(rho1, rho2, weight, initial)| PreisachThreshold {
                rho1,
                rho2,
                weight,
                initial,
            })
            .collect();
        Ok(Self {
            family: preisach_family(&th).map_err(err)?,
        })
    }

    /// Cell-centre discretisation of the half square above the diagonal.
    #[staticmethod]
    fn grid(lo: f64, hi: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            family: preisach_family(&preisach_grid(lo, hi, n)).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.family.len()
    }

    fn total_weight(&self) -> f64 {
        self.family.total_weight()
    }

    /// Output breakpoints `(times, values)`; the output is constant in between.
    fn apply(&self, times: Vec<f64>, values: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let sig = Signal::scalar(times, &values).map_err(err)?;
        let out = hysteresis::apply(&self.family, &sig).map_err(err)?;
        Ok((out.times, out.values.into_iter().map(|v| v[0]).collect()))
    }
}

/// Transition matrix over `[s, t]` of the symmetric two-state chain with rate `lam`.
#[pyfunction]
fn propagate_symmetric(lam: f64, s: f64, t: f64) -> PyResult<Matrix> {
    let field = MarkovField::symmetric_two_state(lam);
    let flow = SemiFlow::closed_form(1, |_, _, x| x.clone());
    let pi = propagate(&field, &flow, s, t, &Point::zeros(1)).map_err(err)?;
    Ok(from_matrix(&pi))
}

/// Fundamental matrix of `dΦ/dt = A Φ` with jumps `Φ ← B Φ` at the given
/// times, by the product construction and by the convolution series.
/// Returns `(product, series, terms)`.
#[pyfunction]
#[pyo3(signature = (a, impulses, s, t, tol = 1e-12))]
fn fundamental_matrix(
    a: Matrix,
    impulses: Vec<(f64, Matrix)>,
    s: f64,
    t: f64,
    tol: f64,
) -> PyResult<(Matrix, Matrix, usize)> {
    let jumps = impulses
        .iter()
        .map(|(tau, b)| Ok((*tau, to_matrix(b)?)))
        .collect::<PyResult<Vec<_>>>()?;
    let sys = ImpulsiveSystem::constant(to_matrix(&a)?, jumps, (s, t)).map_err(err)?;
    let product = fundamental_matrix_product(&sys, s, t).map_err(err)?;
    let series = fundamental_matrix_series(&sys, s, t, tol).map_err(err)?;
    Ok((from_matrix(&product), from_matrix(&series.matrix), series.terms))
}

/// Game on `x' = a x + b1 c1 + b2 u2` with running cost `x^2 + r1 c1^2 - r2 u2^2`
/// and terminal cost `x^2`, where `c1` steers a Preisach family with the
/// given thresholds and `u2` is the opposing control. Returns the
/// grid nodes and `V_0` on them for the initial profile.
#[pyfunction]
#[pyo3(signature = (thresholds, c1, c2, a, b1, b2, r1, r2, horizon, steps, lo, hi, nodes))]
#[allow(clippy::too_many_arguments)]
fn solve_game(
    thresholds: Vec<(f64, f64, f64, i8)>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    a: f64,
    b1: f64,
    b2: f64,
    r1: f64,
    r2: f64,
    horizon: f64,
    steps: usize,
    lo: f64,
    hi: f64,
    nodes: usize,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let family = Preisach::new(thresholds)?.family;
    let profile0 = family.members().iter().map(|m| m.initial).collect::<Vec<_>>();
    let spec = GameSpec {
        dynamics: std::sync::Arc::new(move |_, x, c, u| Point::from_element(1, a * x[0] + b1 * c[0] + b2 * u[0])),
        running_cost: std::sync::Arc::new(move |_, x, c, u| x[0] * x[0] + r1 * c[0] * c[0] - r2 * u[0] * u[0]),
        terminal_cost: std::sync::Arc::new(|x| x[0] * x[0]),
        c1_grid: c1.into_iter().map(|v| Point::from_element(1, v)).collect(),
        c2_grid: c2.into_iter().map(|v| Point::from_element(1, v)).collect(),
        family,
        reaction: std::sync::Arc::new(|_, _| Point::zeros(0)),
        horizon,
        time_steps: steps,
    };
    let grid = Grid::uniform(&[(lo, hi)], nodes).map_err(err)?;
    let table = game::solve(&spec, &grid).map_err(err)?;
    let space = game::ProfileSpace::new(&spec.family);
    let p = space.encode(&profile0);
    let xs = (0..grid.len()).map(|k| grid.node(k)[0]).collect();
    let vs = (0..grid.len()).map(|k| table.value(0, k, p)).collect();
    Ok((xs, vs))
}

/// Runs a scenario file; returns `(exit_code, trace_csv, report)`.
#[pyfunction]
fn run_scenario(path: PathBuf) -> PyResult<(u8, String, String)> {
    let mut sc = Scenario::load(&path).map_err(err)?;
    sc.apply_seed_override().map_err(err)?;
    match scenario::execute(&sc) {
        Ok(exec) => Ok((exec.exit_code(), exec.trace.render(), exec.report_text())),
        Err(e) => Ok((e.exit_code(), String::new(), format!("error: {e}\n"))),
    }
}

/// Validation messages for a scenario file (empty when it is well formed).
#[pyfunction]
fn validate_scenario(path: PathBuf) -> PyResult<Vec<String>> {
    let sc = Scenario::load(&path).map_err(err)?;
    match scenario::validate_scenario(&sc) {
        Ok(lines) => Ok(lines),
        Err(scenario::ScenarioError::Validation(lines)) => Ok(lines),
        Err(e) => Err(err(e)),
    }
}

#[pymodule]
fn hystk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ClassicRelay>()?;
    m.add_class::<TriangleRelay>()?;
    m.add_class::<Preisach>()?;
    m.add_function(wrap_pyfunction!(propagate_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(fundamental_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(solve_game, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario, m)?)?;
    Ok(())
}
