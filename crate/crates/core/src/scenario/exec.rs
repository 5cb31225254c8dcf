use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::build::{self, invalid, required};
use super::csv::{format_number, CsvTable};
use super::schema::{FieldDef, Kind, Scenario};
use super::ScenarioError;
use crate::game::{extract_policy, solve};
use crate::geometry::Point;
use crate::hysteresis::apply;
use crate::markov::{
    detect_impulses, fundamental_matrix_product, fundamental_matrix_series, fundamental_matrix_series_uncorrected,
    propagate, EPS_NEG, EPS_PROB,
};
use crate::relay::{evolve, RelaySpec, StateId};

/// Largest admissible product-versus-series residual.
pub const XCHECK_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-6;
const FLOW_AXIOM_TOL: f64 = 1e-6;
const DEFAULT_SERIES_TOL: f64 = 1e-12;

/// Trace, report and any numerical invariant that failed along the way.
#[derive(Debug, Clone)]
pub struct Execution {
    pub trace: CsvTable,
    pub report: Vec<String>,
    pub failures: Vec<String>,
}

impl Execution {
    fn new(trace: CsvTable) -> Self {
        Self {
            trace,
            report: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }

    pub fn report_text(&self) -> String {
        let mut out = self.report.join("\n");
        out.push('\n');
        for f in &self.failures {
            out.push_str(&format!("FAILED: {f}\n"));
        }
        out
    }

    fn note(&mut self, line: impl Into<String>) {
        self.report.push(line.into());
    }

    fn check(&mut self, ok: bool, line: String) {
        if ok {
            self.report.push(line);
        } else {
            self.failures.push(line);
        }
    }
}

fn header(prefix: &[&str], stem: &str, n: usize) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    if n == 1 && stem == "H" {
        h.push("H_output".into());
    } else if n == 1 {
        h.push(stem.to_string());
    } else {
        h.extend((1..=n).map(|i| format!("{stem}_{i}")));
    }
    h
}

/// Runs the scenario and builds its trace and report.
pub fn execute(sc: &Scenario) -> Result<Execution, ScenarioError> {
    match sc.kind {
        Kind::Relay => run_relay(sc),
        Kind::Hysteresis => run_hysteresis(sc),
        Kind::Markov => run_markov(sc),
        Kind::FundamentalMatrix => run_fundamental(sc),
        Kind::Game => {
            let g = game_solve(sc, 1)?;
            let mut ex = Execution::new(g.trace);
            ex.report = g.report;
            Ok(ex)
        }
    }
}

fn default_initial(spec: &RelaySpec, x: &Point) -> Result<StateId, ScenarioError> {
    for i in 0..spec.state_count() {
        if spec.continuation(StateId(i)).contains(x)? {
            return Ok(StateId(i));
        }
    }
    Err(invalid(
        "no continuation set contains the signal's first point; set [run] initial",
    ))
}

fn run_relay(sc: &Scenario) -> Result<Execution, ScenarioError> {
    let name = required(&sc.run.relay, "relay")?;
    let spec = build::relay(sc, name)?;
    let lines = build::validation_lines([(name.as_str(), &spec)], sc.seed);
    if !lines.is_empty() {
        return Err(ScenarioError::Validation(lines));
    }
    let sig = build::signal(sc, required(&sc.run.signal, "signal")?)?;
    if sig.dim() != spec.dim() {
        return Err(invalid(format!(
            "signal has dimension {}, relay '{name}' has {}",
            sig.dim(),
            spec.dim()
        )));
    }
    let alpha0 = match &sc.run.initial {
        Some(l) => spec.state_by_label(l).ok_or_else(|| ScenarioError::Unresolved {
            section: "state",
            name: l.clone(),
        })?,
        None => default_initial(&spec, &sig.points()[0])?,
    };
    let traj = evolve(&spec, &sig, alpha0)?;

    let m = spec.payload_dim();
    let mut trace = CsvTable::new(header(&["time", "state"], "output", m));
    let row = |t: f64, s: StateId| {
        let mut r = vec![t, s.0 as f64];
        r.extend_from_slice(spec.payload(s));
        r
    };
    trace.push(&row(traj.start, alpha0));
    for e in &traj.events {
        trace.push(&row(e.time, e.to));
    }
    if traj.events.last().map_or(traj.start, |e| e.time) < traj.end {
        trace.push(&row(traj.end, traj.final_state()));
    }

    let mut ex = Execution::new(trace);
    ex.note(format!(
        "relay '{name}': {} states, dimension {}",
        spec.state_count(),
        spec.dim()
    ));
    ex.note(format!("validation: no violations (seed {})", sc.seed));
    ex.note(format!("initial state: {}", spec.state(alpha0).label));
    ex.note(format!("events: {}", traj.events.len()));
    for e in &traj.events {
        ex.note(format!(
            "  t = {}: {} -> {}",
            format_number(e.time),
            spec.state(e.from).label,
            spec.state(e.to).label
        ));
    }
    Ok(ex)
}

fn run_hysteresis(sc: &Scenario) -> Result<Execution, ScenarioError> {
    let name = required(&sc.run.family, "family")?;
    let fam = build::family(sc, name)?;
    let sig = build::signal(sc, required(&sc.run.signal, "signal")?)?;
    if sig.dim() != fam.dim() {
        return Err(invalid(format!(
            "signal has dimension {}, family '{name}' has {}",
            sig.dim(),
            fam.dim()
        )));
    }
    let out = apply(&fam, &sig)?;
    let mut trace = CsvTable::new(header(&["time"], "H", fam.payload_dim()));
    for (t, v) in out.times.iter().zip(&out.values) {
        let mut r = vec![*t];
        r.extend_from_slice(v);
        trace.push(&r);
    }
    if out.times.last().is_some_and(|&t| t < out.end) {
        let mut r = vec![out.end];
        r.extend_from_slice(out.values.last().expect("nonempty output"));
        trace.push(&r);
    }
    let events: usize = out.trajectories.iter().map(|t| t.events.len()).sum();
    let mut ex = Execution::new(trace);
    ex.note(format!(
        "family '{name}': {} relays, total weight {}",
        fam.len(),
        format_number(fam.total_weight())
    ));
    ex.note(format!("validation: no violations (seed {})", sc.seed));
    ex.note(format!(
        "switching events: {events} at {} distinct times",
        out.times.len() - 1
    ));
    let last: Vec<String> = out
        .values
        .last()
        .map_or(Vec::new(), |v| v.iter().map(|&x| format_number(x)).collect());
    ex.note(format!("final output: {}", last.join(", ")));
    Ok(ex)
}

fn sample_times(start: f64, end: f64, samples: usize) -> Vec<f64> {
    (0..=samples)
        .map(|k| {
            if k == samples {
                end
            } else {
                start + (end - start) * k as f64 / samples as f64
            }
        })
        .collect()
}

fn stochastic_residuals(pi: &DMatrix<f64>) -> (f64, f64) {
    let dev = pi.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    (dev, pi.min())
}

fn run_markov(sc: &Scenario) -> Result<Execution, ScenarioError> {
    let fname = required(&sc.run.field, "field")?;
    let field = build::field(sc, fname)?;
    let flow = build::flow(sc, required(&sc.run.flow, "flow")?)?;
    let xi = Point::from_vec(required(&sc.run.xi, "xi")?.to_vec());
    if xi.len() != flow.dim() {
        return Err(invalid(format!(
            "xi has dimension {}, flow has {}",
            xi.len(),
            flow.dim()
        )));
    }
    let (s, t_end) = (*required(&sc.run.start, "start")?, *required(&sc.run.end, "end")?);
    if !(s < t_end) {
        return Err(invalid("[run] needs start < end"));
    }
    let samples = sc.run.samples.unwrap_or(100).max(1);
    let n = field.states();

    let mut names = vec!["time".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            names.push(format!("pi_{i}_{j}"));
        }
    }
    let mut ex = Execution::new(CsvTable::new(names));
    let (mut worst_sum, mut worst_neg) = (0.0f64, f64::INFINITY);
    let mut rows = Vec::new();
    for &t in &sample_times(s, t_end, samples) {
        let pi = propagate(&field, &flow, s, t, &xi)?;
        let (dev, min) = stochastic_residuals(&pi);
        worst_sum = worst_sum.max(dev);
        worst_neg = worst_neg.min(min);
        let mut r = vec![t];
        r.extend(pi.row_iter().flat_map(|row| row.iter().copied().collect::<Vec<_>>()));
        ex.trace.push(&r);
        rows.push((t, pi));
    }
    ex.note(format!(
        "field '{fname}': {n} states, {} impulse sets",
        field.impulses().len()
    ));
    let hits = detect_impulses(&field, &flow, s, t_end, &xi)?;
    ex.note(format!("impulses met: {}", hits.len()));
    for h in &hits {
        ex.note(format!("  t = {}: impulse set {}", format_number(h.time), h.index));
    }
    ex.note(format!("evaluation points: {}", rows.len()));
    ex.check(
        worst_sum < EPS_PROB,
        format!("max row-sum deviation: {}", format_number(worst_sum)),
    );
    ex.check(
        worst_neg >= -EPS_NEG,
        format!("min entry: {}", format_number(worst_neg)),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let radius = xi.amax() + 1.0;
    let axiom = flow.axiom_residual(&mut rng, 20, (s, t_end), radius)?;
    ex.check(
        axiom < FLOW_AXIOM_TOL,
        format!("flow axiom residual (seed {}): {}", sc.seed, format_number(axiom)),
    );

    if let Some(FieldDef::SymmetricTwoState { lambda, impulses }) = sc.fields.get(fname) {
        if impulses.is_empty() {
            let err = rows
                .iter()
                .map(|(t, pi)| (pi[(0, 0)] - (1.0 + (-2.0 * lambda * (t - s)).exp()) / 2.0).abs())
                .fold(0.0, f64::max);
            ex.check(
                err < CLOSED_FORM_TOL,
                format!("closed-form pi_11 max error: {}", format_number(err)),
            );
        }
    }
    Ok(ex)
}

/// Cross-check of the two fundamental-matrix constructions on `[s, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct XcheckReport {
    pub dim: usize,
    pub impulses: usize,
    pub residual: f64,
    pub terms: usize,
    pub last_norm: f64,
    /// Residual of the uncorrected kernel, or the error it produced.
    pub uncorrected: Result<f64, String>,
}

impl XcheckReport {
    pub fn passed(&self) -> bool {
        self.residual < XCHECK_TOL
    }

    pub fn lines(&self) -> Vec<String> {
        let uncorrected = match &self.uncorrected {
            Ok(r) => format_number(*r),
            Err(e) => format!("failed ({e})"),
        };
        vec![
            format!("system: {} states, {} impulses", self.dim, self.impulses),
            format!(
                "max residual product vs series: {} (tolerance {})",
                format_number(self.residual),
                format_number(XCHECK_TOL)
            ),
            format!(
                "series terms: {}, last term norm {}",
                self.terms,
                format_number(self.last_norm)
            ),
            format!("uncorrected-kernel residual (diagnostic): {uncorrected}"),
        ]
    }
}

pub fn xcheck(sc: &Scenario) -> Result<XcheckReport, ScenarioError> {
    if sc.kind != Kind::FundamentalMatrix {
        return Err(invalid("xcheck needs a fundamental-matrix scenario"));
    }
    let sys = build::system(sc, required(&sc.run.system, "system")?)?;
    let tol = sc.run.tol.unwrap_or(DEFAULT_SERIES_TOL);
    let (s, t) = sys.horizon();
    let prod = fundamental_matrix_product(&sys, s, t)?;
    let series = fundamental_matrix_series(&sys, s, t, tol)?;
    let uncorrected = fundamental_matrix_series_uncorrected(&sys, s, t, tol)
        .map(|r| (r.matrix - &prod).amax())
        .map_err(|e| e.to_string());
    Ok(XcheckReport {
        dim: sys.dim(),
        impulses: sys.impulses().len(),
        residual: (&series.matrix - &prod).amax(),
        terms: series.terms,
        last_norm: series.last_norm,
        uncorrected,
    })
}

fn run_fundamental(sc: &Scenario) -> Result<Execution, ScenarioError> {
    let sys = build::system(sc, required(&sc.run.system, "system")?)?;
    let (s, t_end) = sys.horizon();
    let n = sys.dim();
    let mut names = vec!["time".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            names.push(format!("phi_{i}_{j}"));
        }
    }
    let mut ex = Execution::new(CsvTable::new(names));
    for &t in &sample_times(s, t_end, sc.run.samples.unwrap_or(20).max(1)) {
        let phi = if t == s {
            DMatrix::identity(n, n)
        } else {
            fundamental_matrix_product(&sys, s, t)?
        };
        let mut r = vec![t];
        r.extend(phi.row_iter().flat_map(|row| row.iter().copied().collect::<Vec<_>>()));
        ex.trace.push(&r);
    }
    let x = xcheck(sc)?;
    let passed = x.passed();
    let mut lines = x.lines().into_iter();
    ex.note(lines.next().unwrap_or_default());
    ex.check(passed, lines.next().unwrap_or_default());
    for l in lines {
        ex.note(l);
    }
    Ok(ex)
}

/// Solved game with its trace and report.
#[derive(Debug, Clone)]
pub struct GameSummary {
    pub nodes: usize,
    pub profiles: usize,
    pub clamped: usize,
    pub backups: usize,
    pub value_at_x0: Option<f64>,
    pub trace: CsvTable,
    pub report: Vec<String>,
}

pub fn game_solve(sc: &Scenario, refine: usize) -> Result<GameSummary, ScenarioError> {
    if sc.kind != Kind::Game {
        return Err(invalid("game-solve needs a game scenario"));
    }
    let name = required(&sc.run.game, "game")?;
    let (spec, grid) = build::game(sc, name, refine)?;
    let table = solve(&spec, &grid)?;
    let policy = extract_policy(&table, &spec)?;
    let initial: Vec<StateId> = spec.family.members().iter().map(|m| m.initial).collect();
    let p0 = table.profiles.encode(&initial);
    let x0 = sc.games[name.as_str()].x0.as_ref().map(|c| Point::from_vec(c.to_vec()));
    if let Some(x) = &x0 {
        if x.len() != grid.dim() {
            return Err(invalid(format!(
                "x0 has dimension {}, grid has {}",
                x.len(),
                grid.dim()
            )));
        }
    }
    let value_at_x0 = x0.as_ref().map(|x| table.interpolate(0, x, p0));

    let mut names = vec!["time".to_string(), "profile".to_string()];
    names.extend((1..=grid.dim()).map(|i| format!("x_{i}")));
    names.extend(["value", "c1_index", "c2_index"].map(String::from));
    let mut trace = CsvTable::new(names);
    let n = grid.len();
    for k in 0..=table.time_steps {
        for p in 0..table.profiles.len() {
            for i in 0..n {
                let mut cells = vec![format_number(spec.time(k)), p.to_string()];
                cells.extend(grid.node(i).iter().map(|&v| format_number(v)));
                cells.push(format_number(table.value(k, i, p)));
                if k < table.time_steps {
                    let (a, b) = policy.at(k, i, p, n);
                    cells.extend([a.to_string(), b.to_string()]);
                } else {
                    cells.extend([String::new(), String::new()]);
                }
                trace.push_cells(cells);
            }
        }
    }
    let mut report = vec![
        format!(
            "game '{name}': {} relays, {} profiles, {} grid nodes, {} steps",
            spec.family.len(),
            table.profiles.len(),
            n,
            table.time_steps
        ),
        format!("clamped backups: {} of {}", table.clamped, table.backups),
    ];
    if let (Some(x), Some(v)) = (&x0, value_at_x0) {
        let xs: Vec<String> = x.iter().map(|&c| format_number(c)).collect();
        report.push(format!(
            "V_0 at x0 = ({}) and initial profile: {}",
            xs.join(", "),
            format_number(v)
        ));
    }
    Ok(GameSummary {
        nodes: n,
        profiles: table.profiles.len(),
        clamped: table.clamped,
        backups: table.backups,
        value_at_x0,
        trace,
        report,
    })
}

/// Resolves every definition used by the scenario and validates relays.
pub fn validate_scenario(sc: &Scenario) -> Result<Vec<String>, ScenarioError> {
    let mut out = vec![format!("kind: {:?}, seed {}", sc.kind, sc.seed)];
    for name in sc.regions.keys() {
        build::region(sc, name)?;
    }
    for name in sc.signals.keys() {
        build::signal(sc, name)?;
    }
    let mut violations = Vec::new();
    for name in sc.relays.keys() {
        let spec = build::relay(sc, name)?;
        violations.extend(build::validation_lines([(name.as_str(), &spec)], sc.seed));
    }
    for name in sc.families.keys() {
        let members = build::family_members(sc, name)?;
        violations.extend(
            build::validation_lines(members.iter().map(|m| (m.label.as_str(), &m.spec)), sc.seed)
                .into_iter()
                .map(|l| format!("family '{name}' {l}")),
        );
    }
    if !violations.is_empty() {
        return Err(ScenarioError::Validation(violations));
    }
    for name in sc.fields.keys() {
        build::field(sc, name)?;
    }
    for name in sc.flows.keys() {
        build::flow(sc, name)?;
    }
    for name in sc.systems.keys() {
        build::system(sc, name)?;
    }
    for name in sc.games.keys() {
        build::game(sc, name, 1)?;
    }
    let run_keys = match sc.kind {
        Kind::Relay => vec![("relay", sc.run.relay.is_some()), ("signal", sc.run.signal.is_some())],
        Kind::Hysteresis => vec![("family", sc.run.family.is_some()), ("signal", sc.run.signal.is_some())],
        Kind::Markov => vec![
            ("field", sc.run.field.is_some()),
            ("flow", sc.run.flow.is_some()),
            ("xi", sc.run.xi.is_some()),
            ("start", sc.run.start.is_some()),
            ("end", sc.run.end.is_some()),
        ],
        Kind::FundamentalMatrix => vec![("system", sc.run.system.is_some())],
        Kind::Game => vec![("game", sc.run.game.is_some())],
    };
    if let Some((k, _)) = run_keys.iter().find(|(_, present)| !present) {
        return Err(invalid(format!("[run] needs '{k}'")));
    }
    out.push(format!(
        "resolved: {} regions, {} relays, {} families, {} signals, {} fields, {} flows, {} systems, {} games",
        sc.regions.len(),
        sc.relays.len(),
        sc.families.len(),
        sc.signals.len(),
        sc.fields.len(),
        sc.flows.len(),
        sc.systems.len(),
        sc.games.len()
    ));
    out.push("relay validation: no violations".into());
    Ok(out)
}
