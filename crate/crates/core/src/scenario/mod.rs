//! Scenario files behind the `hystk` command-line tool.
//!
//! A scenario is a TOML document with a `kind`, a `seed`, named definition
//! sections (`regions`, `relays`, `families`, `signals`, `fields`, `flows`,
//! `systems`, `games`) and a `[run]` table naming what to execute. Functions
//! such as intensities and costs are picked from a registry of named
//! built-ins; no user code is evaluated.

mod build;
mod csv;
mod exec;
mod schema;
mod signal;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::game::GameError;
use crate::geometry::GeometryError;
use crate::hysteresis::HysteresisError;
use crate::markov::MarkovError;
use crate::relay::RelayError;

pub use csv::{format_number, CsvTable};
pub use exec::{execute, game_solve, validate_scenario, xcheck, Execution, GameSummary, XcheckReport};
pub use schema::{
    Coord, FacetDef, FamilyDef, FieldDef, FlowDef, GameDef, GridDef, HalfSpaceDef, ImpulseDef, Kind, MemberDef,
    OutputDef, RegionDef, RelayDef, RunDef, Scenario, SignalDef, StateDef, SystemDef, ThresholdDef,
};
pub use signal::generate_signal;

/// Environment variable overriding the scenario seed.
pub const SEED_ENV: &str = "HYSTK_SEED";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unknown {section} '{name}'")]
    Unresolved { section: &'static str, name: String },
    #[error("relay validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error(transparent)]
    Hysteresis(#[from] HysteresisError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl ScenarioError {
    /// 1 for problems with the scenario itself, 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Game(GameError::TooManyClamped { .. }) => 2,
            Self::Markov(e) => markov_code(e),
            _ => 1,
        }
    }
}

fn markov_code(e: &MarkovError) -> u8 {
    match e {
        MarkovError::NotStochastic { .. }
        | MarkovError::NegativeEntry { .. }
        | MarkovError::NotConverged { .. }
        | MarkovError::SeriesNotConverged { .. }
        | MarkovError::Grazing { .. }
        | MarkovError::TooManyCrossings(_) => 2,
        MarkovError::Member { source, .. } => markov_code(source),
        _ => 1,
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string().trim_end().to_string()))
    }

    /// Reads a scenario file; `name` defaults to the file stem.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut sc = Self::parse(&text)?;
        if sc.name.is_none() {
            sc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(sc)
    }

    /// Applies the `HYSTK_SEED` override if set.
    pub fn apply_seed_override(&mut self) -> Result<(), ScenarioError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| ScenarioError::Invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    fn stem(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn trace_file(&self) -> String {
        self.output
            .trace
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.stem()))
    }

    pub fn report_file(&self) -> String {
        self.output
            .report
            .clone()
            .unwrap_or_else(|| format!("{}.report.txt", self.stem()))
    }
}
