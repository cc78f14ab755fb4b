//! Fixed-plan evaluation and the exhaustive-enumeration oracle.
//!
//! Both mirror the single-level model's optimistic semantics: for a fixed
//! investment the market clears each scenario at minimum production cost,
//! and where the clearing prices are not unique, the payment-minimizing
//! dual vector is selected by a secondary LP over the optimal-dual
//! polyhedron (dual feasibility plus strong duality at the fixed optimum).

use super::problem::{LpProblem, LpSolution, LpStatus};
use super::simplex::simplex_solve;
use super::sparse::SparseMatrix;
use super::SolveError;
use crate::costs::plan_investment;
use crate::formulation::{assemble_scenario_matrices, RowTag, ScenarioMatrices, VarTag};
use crate::model::{Plan, PlanReport, PlanningStudy, ScenarioDispatch};

/// Largest candidate count the oracle will enumerate (2^22 assignments).
pub const ENUMERATION_GUARD: usize = 22;

/// Binary assignment as a flat vector: phase-shifter flags then line flags.
fn plan_vector(plan: &Plan) -> Vec<f64> {
    plan.pst_built
        .iter()
        .chain(&plan.lines_built)
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect()
}

/// The market-clearing LP of one scenario with the binaries fixed:
/// min w'y s.t. P y <= r - K x, E y = h, y free.
pub fn scenario_lp(sm: &ScenarioMatrices, x: &[f64]) -> LpProblem {
    let kx = sm.coupling.mul_vec(x);
    let b_ineq: Vec<f64> = sm
        .rhs_ineq
        .iter()
        .zip(&kx)
        .map(|(r, k)| r - k)
        .collect();
    let n = sm.num_vars();
    LpProblem {
        cost: sm.cost.clone(),
        a_ineq: sm.ineq.clone(),
        b_ineq,
        a_eq: sm.eq.clone(),
        b_eq: sm.rhs_eq.clone(),
        lower: vec![f64::NEG_INFINITY; n],
        upper: vec![f64::INFINITY; n],
    }
}

/// The payment-minimizing dual selection for one scenario: over (mu,
/// lambda) satisfying stationarity, sign and strong duality at the known
/// primal optimum, minimize the payment rate.
fn optimistic_dual_lp(sm: &ScenarioMatrices, b_ineq: &[f64], primal_opt: f64) -> LpProblem {
    let m_ineq = sm.rhs_ineq.len();
    let m_eq = sm.rhs_eq.len();
    let n = m_ineq + m_eq; // variables: mu then lambda
    let mu_col = |r: usize| r;
    let lam_col = |r: usize| m_ineq + r;

    let mut cost = vec![0.0; n];
    for (row, tag) in sm.eq_tags.iter().enumerate() {
        if let RowTag::Balance(bus) = tag {
            cost[lam_col(row)] = sm.bus_demand[*bus];
        }
    }

    // Stationarity: P'mu + E'lambda = -w (one row per primal column).
    let mut a_eq = SparseMatrix::new(n);
    let mut b_eq = Vec::new();
    let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sm.num_vars()];
    for (row, entries) in sm.ineq.rows().enumerate() {
        for &(col, v) in entries {
            per_col[col].push((mu_col(row), v));
        }
    }
    for (row, entries) in sm.eq.rows().enumerate() {
        for &(col, v) in entries {
            per_col[col].push((lam_col(row), v));
        }
    }
    for (j, terms) in per_col.into_iter().enumerate() {
        a_eq.push_row(&terms);
        b_eq.push(-sm.cost[j]);
    }

    // Strong duality at the fixed optimum: -q'mu - h'lambda = v*.
    let mut sd: Vec<(usize, f64)> = Vec::new();
    for (row, &q) in b_ineq.iter().enumerate() {
        if q != 0.0 {
            sd.push((mu_col(row), -q));
        }
    }
    for (row, &h) in sm.rhs_eq.iter().enumerate() {
        if h != 0.0 {
            sd.push((lam_col(row), -h));
        }
    }
    a_eq.push_row(&sd);
    b_eq.push(primal_opt);

    let mut lower = vec![0.0; n];
    let mut upper = vec![f64::INFINITY; n];
    for r in 0..m_eq {
        lower[lam_col(r)] = f64::NEG_INFINITY;
        upper[lam_col(r)] = f64::INFINITY;
    }

    LpProblem {
        cost,
        a_ineq: SparseMatrix::new(n),
        b_ineq: Vec::new(),
        a_eq,
        b_eq,
        lower,
        upper,
    }
}

/// Clearing outcome of one scenario under a fixed plan.
#[derive(Debug)]
pub struct ClearedScenario {
    pub primal: LpSolution,
    /// Selected multipliers: inequality then equality, optimistic.
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Payment rate sum_i lambda_i * d_i, M$ per hour.
    pub payment_rate: f64,
}

/// Solve one scenario's clearing LP and select optimistic duals.
pub fn clear_scenario(
    sm: &ScenarioMatrices,
    x: &[f64],
) -> Result<Option<ClearedScenario>, SolveError> {
    let lp = scenario_lp(sm, x);
    let primal = simplex_solve(&lp)?;
    match primal.status {
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded => {
            return Err(SolveError::Numerical(format!(
                "scenario {} clearing LP unbounded",
                sm.scenario
            )))
        }
        LpStatus::Optimal => {}
    }

    let dual_lp = optimistic_dual_lp(sm, &lp.b_ineq, primal.objective);
    let duals = simplex_solve(&dual_lp)?;
    match duals.status {
        LpStatus::Optimal => {}
        other => {
            return Err(SolveError::DegeneratePayment {
                scenario: sm.scenario,
                status: format!("{other:?}").to_lowercase(),
            })
        }
    }
    let m_ineq = sm.rhs_ineq.len();
    let mu = duals.x[..m_ineq].to_vec();
    let lambda = duals.x[m_ineq..].to_vec();
    let payment_rate = duals.objective;
    Ok(Some(ClearedScenario {
        primal,
        mu,
        lambda,
        payment_rate,
    }))
}

/// Evaluate a fixed plan: clear every scenario, select optimistic prices,
/// and aggregate the planning metrics.
pub fn evaluate_plan(study: &PlanningStudy, plan: &Plan) -> Result<PlanReport, SolveError> {
    let (n_pst, n_lines) = crate::formulation::binary_count(study);
    if plan.pst_built.len() != n_pst || plan.lines_built.len() != n_lines {
        return Err(SolveError::BadProblem(format!(
            "plan has {}+{} entries for {}+{} candidates",
            plan.pst_built.len(),
            plan.lines_built.len(),
            n_pst,
            n_lines
        )));
    }
    let investment = plan_investment(plan, study);
    if !investment.within_budgets {
        return Err(SolveError::BadProblem(
            "plan exceeds an investment budget".into(),
        ));
    }
    let x = plan_vector(plan);

    let base = study.mva_base;
    let mut payment = 0.0;
    let mut dispatch = Vec::new();
    let n_wind = study.network.wind_farms.len();
    let mut curtailment = vec![0.0; n_wind];
    let mut wind_energy = 0.0;
    let mut demand_energy = 0.0;

    for t in 0..study.scenarios.len() {
        let sm = assemble_scenario_matrices(study, t);
        let cleared = clear_scenario(&sm, &x)?
            .ok_or(SolveError::InfeasiblePlan { scenario: t })?;
        let hours = sm.hours;
        payment += hours * cleared.payment_rate;

        let y = &cleared.primal.x;
        let mut d = ScenarioDispatch {
            scenario: t,
            generation: Vec::new(),
            wind: Vec::new(),
            flows: Vec::new(),
            angles: Vec::new(),
            pst_shift: Vec::new(),
            pst_angle: Vec::new(),
            lmp: Vec::new(),
        };
        for (j, tag) in sm.var_tags.iter().enumerate() {
            match tag {
                VarTag::Gen(_) => d.generation.push(y[j] * base),
                VarTag::Wind(_) => d.wind.push(y[j] * base),
                VarTag::Flow(_) => d.flows.push(y[j] * base),
                VarTag::PstShift(p) => {
                    d.pst_shift.push(y[j]);
                    d.pst_angle
                        .push(if plan.pst_built[*p] { y[j] } else { 0.0 });
                }
                VarTag::Angle(_) => d.angles.push(y[j]),
            }
        }
        for (row, tag) in sm.eq_tags.iter().enumerate() {
            if let RowTag::Balance(_) = tag {
                d.lmp.push(cleared.lambda[row] * 1e6 / base);
            }
        }

        for (w, farm) in study.network.wind_farms.iter().enumerate() {
            let available = study.wind_available(farm, t);
            curtailment[w] += hours * (available - d.wind[w]).max(0.0);
            wind_energy += hours * d.wind[w];
        }
        demand_energy += hours * study.total_demand(t);
        dispatch.push(d);
    }

    let penetration = if demand_energy > 0.0 {
        100.0 * wind_energy / demand_energy
    } else {
        0.0
    };
    let objective = investment.line_annualized + investment.pst_annualized + payment;
    Ok(PlanReport {
        plan: plan.clone(),
        line_investment: investment.line_annualized,
        pst_investment: investment.pst_annualized,
        consumer_payment: payment,
        objective,
        curtailment,
        penetration,
        dispatch,
    })
}

/// Result of the exhaustive search.
#[derive(Debug)]
pub struct OracleOutcome {
    pub plan: Plan,
    pub objective: f64,
    pub report: PlanReport,
    /// Budget-feasible assignments whose scenarios all cleared.
    pub evaluated: usize,
}

/// Enumerate every budget-feasible binary assignment, evaluate it with the
/// same optimistic semantics as [`evaluate_plan`], and return the argmin.
/// Assignments are visited in increasing bitmask order (phase shifters in
/// the low bits), so ties resolve to the earliest assignment.
pub fn enumerate_oracle(study: &PlanningStudy) -> Result<OracleOutcome, SolveError> {
    let (n_pst, n_lines) = crate::formulation::binary_count(study);
    let n_bin = n_pst + n_lines;
    if n_bin > ENUMERATION_GUARD {
        return Err(SolveError::EnumerationGuard(n_bin, ENUMERATION_GUARD));
    }

    let matrices: Vec<ScenarioMatrices> = (0..study.scenarios.len())
        .map(|t| assemble_scenario_matrices(study, t))
        .collect();

    let pst_costs: Vec<f64> = study
        .network
        .pst_candidates()
        .map(|b| b.pst_candidate.as_ref().unwrap().invest_cost)
        .collect();
    let line_costs: Vec<f64> = study
        .network
        .prospective_branches()
        .map(|b| match b.kind {
            crate::model::BranchKind::Prospective { invest_cost } => invest_cost,
            crate::model::BranchKind::Existing => 0.0,
        })
        .collect();

    let mut best: Option<(f64, Plan)> = None;
    let mut evaluated = 0usize;

    'mask: for mask in 0u64..(1u64 << n_bin) {
        let plan = Plan {
            pst_built: (0..n_pst).map(|p| (mask >> p) & 1 == 1).collect(),
            lines_built: (0..n_lines).map(|l| (mask >> (n_pst + l)) & 1 == 1).collect(),
        };
        let pst_total: f64 = pst_costs
            .iter()
            .zip(&plan.pst_built)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c)
            .sum();
        let line_total: f64 = line_costs
            .iter()
            .zip(&plan.lines_built)
            .filter(|(_, &b)| b)
            .map(|(c, _)| c)
            .sum();
        if pst_total > study.pst_budget + 1e-9 || line_total > study.line_budget + 1e-9 {
            continue;
        }

        let x = plan_vector(&plan);
        let mut payment = 0.0;
        for sm in &matrices {
            match clear_scenario(sm, &x)? {
                Some(cleared) => payment += sm.hours * cleared.payment_rate,
                None => continue 'mask,
            }
        }
        evaluated += 1;

        let investment = plan_investment(&plan, study);
        let objective = investment.line_annualized + investment.pst_annualized + payment;
        let better = match &best {
            Some((obj, _)) => objective < *obj,
            None => true,
        };
        if better {
            best = Some((objective, plan));
        }
    }

    let (objective, plan) = best.ok_or(SolveError::MilpInfeasible)?;
    let report = evaluate_plan(study, &plan)?;
    Ok(OracleOutcome {
        plan,
        objective,
        report,
        evaluated,
    })
}
