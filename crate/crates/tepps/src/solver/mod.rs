//! Embedded optimization engine: bounded-variable primal simplex with dual
//! extraction, a best-first branch-and-bound search over binary variables,
//! and the exhaustive-enumeration oracle used to verify the single-level
//! reformulation.

pub mod branch_bound;
pub mod oracle;
pub mod problem;
pub mod simplex;
pub mod sparse;

pub use branch_bound::{branch_and_bound, branch_and_bound_with, BranchBoundOptions};
pub use oracle::{clear_scenario, enumerate_oracle, evaluate_plan, OracleOutcome};

pub use problem::{
    LpCertificate, LpProblem, LpSolution, LpStatus, MilpProblem, MilpSolution, MilpStatus,
};
pub use simplex::{simplex_solve, simplex_solve_with, SimplexOptions};
pub use sparse::SparseMatrix;

/// Errors raised by the embedded solvers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum SolveError {
    #[error("ill-formed problem: {0}")]
    BadProblem(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("iteration limit reached after {0} iterations")]
    IterationLimit(usize),
    #[error("LP relaxation is unbounded (missing dual bound?)")]
    UnboundedRelaxation,
    #[error("no integer-feasible point exists")]
    MilpInfeasible,
    #[error("enumeration guard exceeded: {0} binaries (limit {1})")]
    EnumerationGuard(usize, usize),
    #[error("plan infeasible in scenario {scenario}")]
    InfeasiblePlan { scenario: usize },
    #[error("scenario {scenario}: optimal-dual payment problem is {status}")]
    DegeneratePayment { scenario: usize, status: String },
}
