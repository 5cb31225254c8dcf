use std::collections::BTreeMap;

use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Relay,
    Hysteresis,
    Markov,
    FundamentalMatrix,
    Game,
}

/// A scalar or a vector; scalars stand for one-dimensional points.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coord {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Coord::Scalar(x) => vec![*x],
            Coord::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    pub seed: u64,
    /// Base name for output files; defaults to the scenario file stem.
    pub name: Option<String>,
    #[serde(default)]
    pub output: OutputDef,
    #[serde(default)]
    pub regions: BTreeMap<String, RegionDef>,
    #[serde(default)]
    pub relays: BTreeMap<String, RelayDef>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyDef>,
    #[serde(default)]
    pub signals: BTreeMap<String, SignalDef>,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldDef>,
    #[serde(default)]
    pub flows: BTreeMap<String, FlowDef>,
    #[serde(default)]
    pub systems: BTreeMap<String, SystemDef>,
    #[serde(default)]
    pub games: BTreeMap<String, GameDef>,
    pub run: RunDef,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDef {
    pub trace: Option<String>,
    pub report: Option<String>,
}

/// `n · x < offset`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfSpaceDef {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDef {
    /// Needed only when there are no half-spaces (the whole space).
    pub dim: Option<usize>,
    #[serde(default)]
    pub halfspaces: Vec<HalfSpaceDef>,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDef {
    pub label: String,
    pub payload: Coord,
    pub region: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipDef {
    pub normal: Vec<f64>,
    pub offset: f64,
    #[serde(default)]
    pub closed: bool,
}

/// Facet of the `from` state's region on its `support`-th half-space.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetDef {
    pub from: String,
    pub to: String,
    pub support: usize,
    #[serde(default)]
    pub clip: Vec<ClipDef>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RelayDef {
    Classic {
        rho1: f64,
        rho2: f64,
    },
    /// The three-state relay on a triangle with vector payloads.
    Triangle,
    Trivial {
        dim: usize,
        payload: Coord,
    },
    Custom {
        omega: String,
        states: Vec<StateDef>,
        #[serde(default)]
        facets: Vec<FacetDef>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdDef {
    pub rho1: f64,
    pub rho2: f64,
    pub weight: f64,
    #[serde(default = "minus_one")]
    pub initial: i8,
}

fn minus_one() -> i8 {
    -1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberDef {
    pub label: String,
    pub relay: String,
    pub weight: f64,
    /// State label; defaults to the first state.
    pub initial: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyDef {
    Preisach { thresholds: Vec<ThresholdDef> },
    PreisachGrid { lo: f64, hi: f64, n: usize },
    Members { members: Vec<MemberDef> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalDef {
    Ramp {
        from: Coord,
        to: Coord,
        t0: f64,
        t1: f64,
        #[serde(default = "two")]
        samples: usize,
    },
    /// Breakpoints every half period, alternating between
    /// `offset - amplitude` and `offset + amplitude`, with the amplitude
    /// multiplied by `decay` after each half period.
    TriangleWave {
        amplitude: f64,
        period: f64,
        half_periods: usize,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        t0: f64,
        #[serde(default = "one")]
        decay: f64,
    },
    Piecewise {
        times: Vec<f64>,
        points: Vec<Coord>,
    },
    Sinusoid {
        amplitude: f64,
        period: f64,
        samples: usize,
        t0: f64,
        t1: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn two() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

/// Intensities `φ_β(t, x) = base_β + slope_β · x_0 + time_slope_β · t`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntensityDef {
    Constant {
        values: Vec<f64>,
    },
    Affine {
        base: Vec<f64>,
        #[serde(default)]
        slope: Vec<f64>,
        #[serde(default)]
        time_slope: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpulseDef {
    /// Fixed impulse time.
    pub time: Option<f64>,
    /// Region whose `support`-th boundary hyperplane triggers the impulse.
    pub region: Option<String>,
    #[serde(default)]
    pub support: usize,
    /// Row-stochastic jump matrix, row by row.
    pub p: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldDef {
    SymmetricTwoState {
        lambda: f64,
        #[serde(default)]
        impulses: Vec<ImpulseDef>,
    },
    Custom {
        intensities: IntensityDef,
        jump_kernel: Vec<Vec<f64>>,
        #[serde(default)]
        impulses: Vec<ImpulseDef>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowDef {
    /// `u(s, t; ξ) = ξ`.
    Constant { dim: usize },
    /// `u(s, t; ξ) = ξ + v (t − s)`.
    LinearDrift { velocity: Vec<f64> },
    /// `u(s, t; ξ) = ξ e^{rate (t − s)}`.
    Exponential { dim: usize, rate: f64 },
    /// Planar rotation `x' = ω (−x_1, x_0)`, integrated numerically.
    Rotation { omega: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixImpulseDef {
    pub time: f64,
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemDef {
    /// `ψ' = A ψ` with jumps `ψ(τ+) = B ψ(τ−)`.
    Constant {
        a: Vec<Vec<f64>>,
        #[serde(default)]
        impulses: Vec<MatrixImpulseDef>,
        start: f64,
        end: f64,
    },
    /// The transposed Kolmogorov system of a field along a flow.
    Field {
        field: String,
        flow: String,
        xi: Coord,
        start: f64,
        end: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DynamicsDef {
    /// `f_i = a x_i + b1 c1_0 + Σ_j b2_j u2_j`.
    Linear { a: f64, b1: f64, b2: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunningCostDef {
    Zero,
    /// `q |x|² + r1 |c1|² − r2 |u2|²`.
    Quadratic {
        q: f64,
        r1: f64,
        r2: f64,
    },
    /// `k c1_0 x_0`.
    Bilinear {
        k: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TerminalCostDef {
    Zero,
    /// `w |x|²`.
    Quadratic {
        w: f64,
    },
    /// `w · x`.
    Linear {
        w: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReactionDef {
    /// No reactive component.
    None,
    /// `u21 = k (Hu1)`.
    Scaled { k: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub nodes: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDef {
    pub dynamics: DynamicsDef,
    pub running_cost: RunningCostDef,
    pub terminal_cost: TerminalCostDef,
    pub reaction: ReactionDef,
    pub c1: Vec<Coord>,
    pub c2: Vec<Coord>,
    /// Hysteresis family driven by `c1`; a single-state relay if absent.
    pub family: Option<String>,
    pub horizon: f64,
    pub steps: usize,
    pub grid: GridDef,
    /// Point at which the report quotes `V_0`.
    pub x0: Option<Coord>,
}

/// What to execute; which keys are required depends on the scenario kind.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDef {
    pub relay: Option<String>,
    pub family: Option<String>,
    pub signal: Option<String>,
    /// Initial state label of a single relay.
    pub initial: Option<String>,
    pub field: Option<String>,
    pub flow: Option<String>,
    pub xi: Option<Coord>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    /// Number of output intervals on `[start, end]`.
    pub samples: Option<usize>,
    pub system: Option<String>,
    /// Truncation tolerance of the series construction.
    pub tol: Option<f64>,
    pub game: Option<String>,
}
