//! Investment cost arithmetic: annualization of capital costs, phase
//! shifter pricing from line ratings, and budget checks.

use crate::model::{Plan, PlanningStudy};

/// Capital-recovery factor d(1+d)^LT / ((1+d)^LT - 1).
///
/// At d = 0 the analytic limit 1/LT is returned.
pub fn annuity_factor(interest_rate: f64, lifetime_years: f64) -> f64 {
    debug_assert!(interest_rate >= 0.0 && lifetime_years >= 1.0);
    if interest_rate == 0.0 {
        return 1.0 / lifetime_years;
    }
    let growth = (1.0 + interest_rate).powf(lifetime_years);
    interest_rate * growth / (growth - 1.0)
}

/// Equivalent annual cost of a capital outlay, M$.
pub fn annualize(total_cost: f64, interest_rate: f64, lifetime_years: f64) -> f64 {
    total_cost * annuity_factor(interest_rate, lifetime_years)
}

/// Capital cost of a phase shifter sized for a line rating, M$.
///
/// `rating` is in MVA, `unit_cost` in $/kVA.
pub fn pst_capital_cost(rating: f64, unit_cost: f64) -> f64 {
    // MVA -> kVA is *1000, $ -> M$ is /1e6.
    rating * unit_cost / 1000.0
}

/// Investment totals for a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanInvestment {
    /// Annualized line cost, M$.
    pub line_annualized: f64,
    /// Annualized phase shifter cost, M$.
    pub pst_annualized: f64,
    /// Un-annualized line capital, M$ (checked against the line budget).
    pub line_total: f64,
    /// Un-annualized phase shifter capital, M$ (checked against the PST budget).
    pub pst_total: f64,
    pub within_budgets: bool,
}

/// Sum selected candidates' capital costs and annualize them with the
/// respective lifetimes. Budgets are checked against the un-annualized
/// totals.
pub fn plan_investment(plan: &Plan, study: &PlanningStudy) -> PlanInvestment {
    let ec = &study.economics;

    let pst_total: f64 = study
        .network
        .pst_candidates()
        .zip(&plan.pst_built)
        .filter(|(_, &built)| built)
        .map(|(b, _)| b.pst_candidate.as_ref().unwrap().invest_cost)
        .sum();

    let line_total: f64 = study
        .network
        .prospective_branches()
        .zip(&plan.lines_built)
        .filter(|(_, &built)| built)
        .map(|(b, _)| match b.kind {
            crate::model::BranchKind::Prospective { invest_cost } => invest_cost,
            crate::model::BranchKind::Existing => 0.0,
        })
        .sum();

    PlanInvestment {
        line_annualized: annualize(line_total, ec.interest_rate, ec.line_lifetime),
        pst_annualized: annualize(pst_total, ec.interest_rate, ec.pst_lifetime),
        line_total,
        pst_total,
        within_budgets: pst_total <= study.pst_budget + 1e-9 && line_total <= study.line_budget + 1e-9,
    }
}
