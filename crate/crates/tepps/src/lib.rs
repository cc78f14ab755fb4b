//! Market-based transmission expansion planning with phase shifting
//! transformers.
//!
//! The library builds a bilevel planning model — upper-level investment in
//! candidate lines and phase shifters, lower-level market clearing per
//! load-wind scenario — reformulates it into a single-level MILP through
//! primal-dual equivalence, and solves it with an embedded simplex /
//! branch-and-bound engine. Reports cover investment plans, locational
//! marginal prices, consumer payment, wind curtailment and penetration.

pub mod cases;
pub mod costs;
pub mod formulation;
pub mod ingest;
pub mod model;
pub mod mps;
pub mod report;
pub mod scenarios;
pub mod solver;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use model::{
    validate_study, Branch, BranchKind, Bus, CfSource, DispatchResult, Economics, Generator,
    LoadPoint, NetworkCase, Plan, PlanReport, PlanningStudy, PstCandidate, Scenario,
    ScenarioDispatch, Violation, WindFarm,
};

/// Errors shared across the ingestion, formulation and reporting layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing section '{0}' in case file")]
    MissingSection(String),
    #[error("study validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Solve(#[from] solver::SolveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{0}")]
    Report(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
