//! Per-scenario market-clearing LPs in compact matrix form, their dual
//! systems, and the single-level MILP obtained by replacing each clearing
//! problem with primal constraints, dual constraints and strong duality.
//!
//! Per-scenario primal variables y are ordered generators, wind farms,
//! branch flows, phase-shifter shift variables, bus angles; the branch
//! angle difference is eliminated into the two bus angles at assembly. The
//! lower-level shape is
//!
//! ```text
//! min  w' y     s.t.   P y <= r - K x   (mu)
//!                      E y  = h         (lambda)
//! ```
//!
//! with binaries x stacked as phase-shifter flags followed by line flags.
//! Power is in per-unit on the study MVA base and costs in M$ per hour, so
//! balance-row duals price demand directly in the planning objective.
//! Balance rows are oriented "outflow minus generation equals minus
//! demand", which makes those duals the usual nonnegative-at-marginal-cost
//! locational prices.

use crate::model::{BranchKind, DispatchResult, Plan, PlanningStudy, ScenarioDispatch};
use crate::solver::{LpProblem, MilpProblem, MilpSolution, SparseMatrix};
use std::fmt;
use std::ops::Range;

/// Column tags of the per-scenario primal variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarTag {
    /// Generator output (index into network.generators).
    Gen(usize),
    /// Wind output (index into network.wind_farms).
    Wind(usize),
    /// Branch flow (index into network.branches).
    Flow(usize),
    /// Shift variable of a phase-shifter candidate (index into the
    /// candidate list).
    PstShift(usize),
    /// Bus angle (index into network.buses).
    Angle(usize),
}

/// Row tags naming each constraint instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    Balance(usize),
    FlowDef(usize),
    PstFlowDef(usize),
    RefAngle(usize),
    PstShiftUpper(usize),
    PstShiftLower(usize),
    ProspectiveFlowLower(usize),
    ProspectiveFlowUpper(usize),
    GenUpper(usize),
    GenLower(usize),
    WindUpper(usize),
    WindLower(usize),
    ThermalUpper(usize),
    ThermalLower(usize),
    ProspectiveThermalUpper(usize),
    ProspectiveThermalLower(usize),
    AngleUpper(usize),
    AngleLower(usize),
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use RowTag::*;
        match self {
            Balance(i) => write!(f, "bal{i}"),
            FlowDef(k) => write!(f, "flow{k}"),
            PstFlowDef(k) => write!(f, "pflow{k}"),
            RefAngle(i) => write!(f, "ref{i}"),
            PstShiftUpper(p) => write!(f, "shiftub{p}"),
            PstShiftLower(p) => write!(f, "shiftlb{p}"),
            ProspectiveFlowLower(l) => write!(f, "dflowlb{l}"),
            ProspectiveFlowUpper(l) => write!(f, "dflowub{l}"),
            GenUpper(n) => write!(f, "gub{n}"),
            GenLower(n) => write!(f, "glb{n}"),
            WindUpper(w) => write!(f, "wub{w}"),
            WindLower(w) => write!(f, "wlb{w}"),
            ThermalUpper(k) => write!(f, "sub{k}"),
            ThermalLower(k) => write!(f, "slb{k}"),
            ProspectiveThermalUpper(l) => write!(f, "psub{l}"),
            ProspectiveThermalLower(l) => write!(f, "pslb{l}"),
            AngleUpper(i) => write!(f, "aub{i}"),
            AngleLower(i) => write!(f, "alb{i}"),
        }
    }
}

impl fmt::Display for VarTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use VarTag::*;
        match self {
            Gen(n) => write!(f, "g{n}"),
            Wind(w) => write!(f, "w{w}"),
            Flow(k) => write!(f, "f{k}"),
            PstShift(p) => write!(f, "psi{p}"),
            Angle(i) => write!(f, "th{i}"),
        }
    }
}

/// Compact-form blocks of one scenario's market clearing problem.
#[derive(Debug, Clone)]
pub struct ScenarioMatrices {
    pub scenario: usize,
    /// P: inequality coefficients over y.
    pub ineq: SparseMatrix,
    /// K: coupling of inequality rows to the binaries.
    pub coupling: SparseMatrix,
    /// r: inequality right-hand side.
    pub rhs_ineq: Vec<f64>,
    /// E: equality coefficients over y.
    pub eq: SparseMatrix,
    /// h: equality right-hand side.
    pub rhs_eq: Vec<f64>,
    /// w: cost vector, M$ per hour per unit of y.
    pub cost: Vec<f64>,
    pub var_tags: Vec<VarTag>,
    pub ineq_tags: Vec<RowTag>,
    pub eq_tags: Vec<RowTag>,
    /// (inequality row, binary column, K coefficient) for every nonzero of
    /// K; these rows are the only sources of bilinear terms.
    pub coupled_rows: Vec<(usize, usize, f64)>,
    /// Demand per bus index, per-unit (the payment weights).
    pub bus_demand: Vec<f64>,
    /// Operating hours of this scenario.
    pub hours: f64,
}

impl ScenarioMatrices {
    pub fn num_vars(&self) -> usize {
        self.var_tags.len()
    }

    /// Equality-row position of a bus's balance row.
    pub fn balance_row(&self, bus: usize) -> usize {
        self.eq_tags
            .iter()
            .position(|t| *t == RowTag::Balance(bus))
            .expect("balance row exists")
    }
}

/// Disjunctive big-M for a candidate line: 2 pi / x, the largest possible
/// |b (theta_i - theta_j)| under the +/- pi angle bounds.
pub fn big_m_for_line(branch: &crate::model::Branch) -> f64 {
    debug_assert!(branch.reactance > 0.0);
    2.0 * std::f64::consts::PI / branch.reactance
}

/// Binary layout: phase-shifter flags first, then line flags.
pub fn binary_count(study: &PlanningStudy) -> (usize, usize) {
    (
        study.network.pst_candidates().count(),
        study.network.prospective_branches().count(),
    )
}

/// Assemble the compact-form blocks of scenario `t`.
pub fn assemble_scenario_matrices(study: &PlanningStudy, t: usize) -> ScenarioMatrices {
    let net = &study.network;
    let base = study.mva_base;
    let n_gen = net.generators.len();
    let n_wind = net.wind_farms.len();
    let n_branch = net.branches.len();
    let n_bus = net.buses.len();

    let pst_list: Vec<usize> = net
        .branches
        .iter()
        .enumerate()
        .filter(|(_, b)| b.pst_candidate.is_some())
        .map(|(i, _)| i)
        .collect();
    let prospective_list: Vec<usize> = net
        .branches
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_prospective())
        .map(|(i, _)| i)
        .collect();
    let (n_pst, n_lines) = (pst_list.len(), prospective_list.len());

    let bus_pos = |id| net.bus_index(id).expect("validated bus id");

    // Column layout.
    let mut var_tags = Vec::new();
    var_tags.extend((0..n_gen).map(VarTag::Gen));
    var_tags.extend((0..n_wind).map(VarTag::Wind));
    var_tags.extend((0..n_branch).map(VarTag::Flow));
    var_tags.extend((0..n_pst).map(VarTag::PstShift));
    var_tags.extend((0..n_bus).map(VarTag::Angle));
    let n_vars = var_tags.len();
    let col_gen = |n: usize| n;
    let col_wind = |w: usize| n_gen + w;
    let col_flow = |k: usize| n_gen + n_wind + k;
    let col_pst = |p: usize| n_gen + n_wind + n_branch + p;
    let col_angle = |i: usize| n_gen + n_wind + n_branch + n_pst + i;

    let mut cost = vec![0.0; n_vars];
    for (n, g) in net.generators.iter().enumerate() {
        // $/MWh on per-unit power, expressed in M$/h.
        cost[col_gen(n)] = g.marginal_cost * base * 1e-6;
    }

    // Demand per bus, per-unit.
    let mut bus_demand = vec![0.0; n_bus];
    for load in &net.loads {
        bus_demand[bus_pos(load.bus)] += study.scenario_demand(load, t) / base;
    }

    // Equalities.
    let mut eq = SparseMatrix::new(n_vars);
    let mut rhs_eq = Vec::new();
    let mut eq_tags = Vec::new();

    for (i, _bus) in net.buses.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (k, br) in net.branches.iter().enumerate() {
            if bus_pos(br.from_bus) == i {
                row.push((col_flow(k), 1.0));
            } else if bus_pos(br.to_bus) == i {
                row.push((col_flow(k), -1.0));
            }
        }
        for (n, g) in net.generators.iter().enumerate() {
            if bus_pos(g.bus) == i {
                row.push((col_gen(n), -1.0));
            }
        }
        for (w, farm) in net.wind_farms.iter().enumerate() {
            if bus_pos(farm.bus) == i {
                row.push((col_wind(w), -1.0));
            }
        }
        eq.push_row(&row);
        rhs_eq.push(-bus_demand[i]);
        eq_tags.push(RowTag::Balance(i));
    }

    for (k, br) in net.branches.iter().enumerate() {
        if br.is_prospective() {
            continue; // flow defined by the disjunctive rows below
        }
        let b = br.susceptance();
        let (fi, ti) = (bus_pos(br.from_bus), bus_pos(br.to_bus));
        match pst_list.iter().position(|&pk| pk == k) {
            Some(p) => {
                eq.push_row(&[
                    (col_flow(k), 1.0),
                    (col_angle(fi), -b),
                    (col_angle(ti), b),
                    (col_pst(p), -b),
                ]);
                eq_tags.push(RowTag::PstFlowDef(k));
            }
            None => {
                eq.push_row(&[(col_flow(k), 1.0), (col_angle(fi), -b), (col_angle(ti), b)]);
                eq_tags.push(RowTag::FlowDef(k));
            }
        }
        rhs_eq.push(0.0);
    }

    let ref_pos = bus_pos(net.reference_bus().expect("validated").id);
    eq.push_row(&[(col_angle(ref_pos), 1.0)]);
    rhs_eq.push(0.0);
    eq_tags.push(RowTag::RefAngle(ref_pos));

    // Inequalities, with coupling into the binaries.
    let mut ineq = SparseMatrix::new(n_vars);
    let mut coupling = SparseMatrix::new(n_pst + n_lines);
    let mut rhs_ineq = Vec::new();
    let mut ineq_tags = Vec::new();
    let push =
        |ineq: &mut SparseMatrix,
         coupling: &mut SparseMatrix,
         rhs: &mut Vec<f64>,
         tags: &mut Vec<RowTag>,
         row: &[(usize, f64)],
         couple: &[(usize, f64)],
         r: f64,
         tag: RowTag| {
            ineq.push_row(row);
            coupling.push_row(couple);
            rhs.push(r);
            tags.push(tag);
        };

    for (p, &k) in pst_list.iter().enumerate() {
        let pst = net.branches[k].pst_candidate.as_ref().unwrap();
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_pst(p), 1.0)],
            &[(p, -pst.angle_max)],
            0.0,
            RowTag::PstShiftUpper(p),
        );
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_pst(p), -1.0)],
            &[(p, pst.angle_min)],
            0.0,
            RowTag::PstShiftLower(p),
        );
    }

    for (l, &k) in prospective_list.iter().enumerate() {
        let br = &net.branches[k];
        let b = br.susceptance();
        let (fi, ti) = (bus_pos(br.from_bus), bus_pos(br.to_bus));
        let m_k = big_m_for_line(br);
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_flow(k), -1.0), (col_angle(fi), b), (col_angle(ti), -b)],
            &[(n_pst + l, m_k)],
            m_k,
            RowTag::ProspectiveFlowLower(l),
        );
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_flow(k), 1.0), (col_angle(fi), -b), (col_angle(ti), b)],
            &[(n_pst + l, m_k)],
            m_k,
            RowTag::ProspectiveFlowUpper(l),
        );
    }

    for (n, g) in net.generators.iter().enumerate() {
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_gen(n), 1.0)],
            &[],
            g.p_max / base,
            RowTag::GenUpper(n),
        );
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_gen(n), -1.0)],
            &[],
            -g.p_min / base,
            RowTag::GenLower(n),
        );
    }

    for (w, farm) in net.wind_farms.iter().enumerate() {
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_wind(w), 1.0)],
            &[],
            study.wind_available(farm, t) / base,
            RowTag::WindUpper(w),
        );
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_wind(w), -1.0)],
            &[],
            0.0,
            RowTag::WindLower(w),
        );
    }

    for (k, br) in net.branches.iter().enumerate() {
        let s = br.rating / base;
        if br.is_existing() {
            push(
                &mut ineq,
                &mut coupling,
                &mut rhs_ineq,
                &mut ineq_tags,
                &[(col_flow(k), 1.0)],
                &[],
                s,
                RowTag::ThermalUpper(k),
            );
            push(
                &mut ineq,
                &mut coupling,
                &mut rhs_ineq,
                &mut ineq_tags,
                &[(col_flow(k), -1.0)],
                &[],
                s,
                RowTag::ThermalLower(k),
            );
        }
    }
    for (l, &k) in prospective_list.iter().enumerate() {
        let s = net.branches[k].rating / base;
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_flow(k), 1.0)],
            &[(n_pst + l, -s)],
            0.0,
            RowTag::ProspectiveThermalUpper(l),
        );
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_flow(k), -1.0)],
            &[(n_pst + l, -s)],
            0.0,
            RowTag::ProspectiveThermalLower(l),
        );
    }

    for i in 0..n_bus {
        if i == ref_pos {
            continue;
        }
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_angle(i), 1.0)],
            &[],
            std::f64::consts::PI,
            RowTag::AngleUpper(i),
        );
        push(
            &mut ineq,
            &mut coupling,
            &mut rhs_ineq,
            &mut ineq_tags,
            &[(col_angle(i), -1.0)],
            &[],
            std::f64::consts::PI,
            RowTag::AngleLower(i),
        );
    }

    let coupled_rows: Vec<(usize, usize, f64)> = coupling
        .rows()
        .enumerate()
        .flat_map(|(row, entries)| entries.iter().map(move |&(col, v)| (row, col, v)))
        .collect();

    ScenarioMatrices {
        scenario: t,
        ineq,
        coupling,
        rhs_ineq,
        eq,
        rhs_eq,
        cost,
        var_tags,
        ineq_tags,
        eq_tags,
        coupled_rows,
        bus_demand,
        hours: study.scenarios[t].hours,
    }
}

/// Where a dual coefficient lives: on an inequality multiplier or an
/// equality multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualRef {
    Mu(usize),
    Lambda(usize),
}

/// Dual stationarity rows, one per primal column:
/// `P' mu + E' lambda = -w`.
pub fn build_dual_system(sm: &ScenarioMatrices) -> Vec<(Vec<(DualRef, f64)>, f64)> {
    let n = sm.num_vars();
    let mut per_col: Vec<Vec<(DualRef, f64)>> = vec![Vec::new(); n];
    for (row, entries) in sm.ineq.rows().enumerate() {
        for &(col, v) in entries {
            per_col[col].push((DualRef::Mu(row), v));
        }
    }
    for (row, entries) in sm.eq.rows().enumerate() {
        for &(col, v) in entries {
            per_col[col].push((DualRef::Lambda(row), v));
        }
    }
    per_col
        .into_iter()
        .enumerate()
        .map(|(j, terms)| (terms, -sm.cost[j]))
        .collect()
}

/// The strong-duality equality with the bilinear part isolated:
/// `w'y - sum K z + r'mu + h'lambda = 0`, where each z stands for the
/// product of a binary and the coupled row's multiplier.
#[derive(Debug, Clone)]
pub struct StrongDualityRow {
    pub y_terms: Vec<(usize, f64)>,
    pub mu_terms: Vec<(usize, f64)>,
    pub lambda_terms: Vec<(usize, f64)>,
    /// (inequality row, binary column, K coefficient); one auxiliary z per
    /// entry.
    pub bilinear: Vec<(usize, usize, f64)>,
}

pub fn build_strong_duality_row(sm: &ScenarioMatrices) -> StrongDualityRow {
    StrongDualityRow {
        y_terms: sm
            .cost
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w != 0.0)
            .map(|(j, &w)| (j, w))
            .collect(),
        mu_terms: sm
            .rhs_ineq
            .iter()
            .enumerate()
            .filter(|&(_, &r)| r != 0.0)
            .map(|(row, &r)| (row, r))
            .collect(),
        lambda_terms: sm
            .rhs_eq
            .iter()
            .enumerate()
            .filter(|&(_, &h)| h != 0.0)
            .map(|(row, &h)| (row, h))
            .collect(),
        bilinear: sm.coupled_rows.clone(),
    }
}

/// The three inequality rows replacing z = x * mu under 0 <= mu <= bound
/// (z >= 0 is kept as a variable bound). Each tuple is coefficients on
/// (z, x, mu) and the right-hand side of a <= row.
pub fn linearize_bilinear(bound: f64) -> [(f64, f64, f64, f64); 3] {
    debug_assert!(bound > 0.0);
    [
        (1.0, -bound, 0.0, 0.0),   // z <= bound * x
        (1.0, 0.0, -1.0, 0.0),     // z <= mu
        (-1.0, bound, 1.0, bound), // z >= mu - bound * (1 - x)
    ]
}

/// Column/row layout of one scenario inside the single-level MILP.
#[derive(Debug, Clone)]
pub struct ScenarioBlock {
    pub y: Range<usize>,
    pub lambda: Range<usize>,
    pub mu: Range<usize>,
    /// Auxiliary products, aligned with `ScenarioMatrices::coupled_rows`.
    pub z: Range<usize>,
}

/// The single-level MILP plus everything needed to interpret and audit a
/// solution of it.
#[derive(Debug, Clone)]
pub struct SingleLevelMilp {
    pub problem: MilpProblem,
    pub n_pst: usize,
    pub n_lines: usize,
    pub blocks: Vec<ScenarioBlock>,
    pub matrices: Vec<ScenarioMatrices>,
    /// Dual bound used for the bilinear linearization.
    pub dual_bound: f64,
}

impl SingleLevelMilp {
    pub fn binary_columns(&self) -> Range<usize> {
        0..self.n_pst + self.n_lines
    }
}

/// Build the single-level MILP for a validated study.
///
/// Budget rows and the strong-duality rows are equilibrated to unit maximum
/// coefficient; everything else keeps its natural per-unit scale.
pub fn build_single_level_milp(study: &PlanningStudy) -> crate::Result<SingleLevelMilp> {
    build_single_level_milp_with(study, study.dual_big_m)
}

pub fn build_single_level_milp_with(
    study: &PlanningStudy,
    dual_bound: f64,
) -> crate::Result<SingleLevelMilp> {
    if study.scenarios.is_empty() {
        return Err(crate::Error::Schema("study has no scenarios".into()));
    }
    let (n_pst, n_lines) = binary_count(study);
    let n_bin = n_pst + n_lines;
    let matrices: Vec<ScenarioMatrices> = (0..study.scenarios.len())
        .map(|t| assemble_scenario_matrices(study, t))
        .collect();

    // Column layout: binaries, then per scenario y, lambda, mu, z.
    let mut var_names: Vec<String> = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();

    let ec = &study.economics;
    for (p, br) in study.network.pst_candidates().enumerate() {
        let pst = br.pst_candidate.as_ref().unwrap();
        var_names.push(format!("pst{p}"));
        objective.push(crate::costs::annualize(
            pst.invest_cost,
            ec.interest_rate,
            ec.pst_lifetime,
        ));
        lower.push(0.0);
        upper.push(1.0);
    }
    for (l, br) in study.network.prospective_branches().enumerate() {
        let BranchKind::Prospective { invest_cost } = br.kind else {
            unreachable!()
        };
        var_names.push(format!("line{l}"));
        objective.push(crate::costs::annualize(
            invest_cost,
            ec.interest_rate,
            ec.line_lifetime,
        ));
        lower.push(0.0);
        upper.push(1.0);
    }

    let mut blocks: Vec<ScenarioBlock> = Vec::new();
    for sm in &matrices {
        let t = sm.scenario;
        let y_start = var_names.len();
        for tag in &sm.var_tags {
            var_names.push(format!("t{t}_y_{tag}"));
            objective.push(0.0);
            lower.push(f64::NEG_INFINITY);
            upper.push(f64::INFINITY);
        }
        let lambda_start = var_names.len();
        for (row, tag) in sm.eq_tags.iter().enumerate() {
            var_names.push(format!("t{t}_lam_{tag}"));
            // Payment: N_t * demand at the bus, on balance-row duals.
            let coeff = match tag {
                RowTag::Balance(bus) => sm.hours * sm.bus_demand[*bus],
                _ => 0.0,
            };
            objective.push(coeff);
            lower.push(f64::NEG_INFINITY);
            upper.push(f64::INFINITY);
            let _ = row;
        }
        let mu_start = var_names.len();
        let coupled: Vec<bool> = {
            let mut v = vec![false; sm.rhs_ineq.len()];
            for &(row, _, _) in &sm.coupled_rows {
                v[row] = true;
            }
            v
        };
        for (row, tag) in sm.ineq_tags.iter().enumerate() {
            var_names.push(format!("t{t}_mu_{tag}"));
            objective.push(0.0);
            lower.push(0.0);
            upper.push(if coupled[row] { dual_bound } else { f64::INFINITY });
        }
        let z_start = var_names.len();
        for (c, &(row, _, _)) in sm.coupled_rows.iter().enumerate() {
            var_names.push(format!("t{t}_z{c}_{}", sm.ineq_tags[row]));
            objective.push(0.0);
            lower.push(0.0);
            upper.push(dual_bound);
        }
        blocks.push(ScenarioBlock {
            y: y_start..lambda_start,
            lambda: lambda_start..mu_start,
            mu: mu_start..z_start,
            z: z_start..var_names.len(),
        });
    }

    let n_cols = var_names.len();
    let mut a_ineq = SparseMatrix::new(n_cols);
    let mut b_ineq: Vec<f64> = Vec::new();
    let mut ineq_names: Vec<String> = Vec::new();
    let mut a_eq = SparseMatrix::new(n_cols);
    let mut b_eq: Vec<f64> = Vec::new();
    let mut eq_names: Vec<String> = Vec::new();

    // Budgets over un-annualized capital costs, equilibrated to O(1).
    // Budget and strong-duality rows mix M$ and MWh-scale units; they are
    // equilibrated to unit maximum coefficient (row scaling changes no
    // variable values).
    let mut push_budget = |costs: Vec<(usize, f64)>, budget: f64, name: &str| {
        if !budget.is_finite() || costs.is_empty() {
            return;
        }
        let scale = 1.0 / costs.iter().fold(1.0f64, |a, &(_, c)| a.max(c.abs()));
        let row: Vec<(usize, f64)> = costs.iter().map(|&(c, v)| (c, v * scale)).collect();
        a_ineq.push_row(&row);
        b_ineq.push(budget * scale);
        ineq_names.push(name.to_string());
    };
    push_budget(
        study
            .network
            .pst_candidates()
            .enumerate()
            .map(|(p, br)| (p, br.pst_candidate.as_ref().unwrap().invest_cost))
            .collect(),
        study.pst_budget,
        "budget_pst",
    );
    push_budget(
        study
            .network
            .prospective_branches()
            .enumerate()
            .map(|(l, br)| {
                let BranchKind::Prospective { invest_cost } = br.kind else {
                    unreachable!()
                };
                (n_pst + l, invest_cost)
            })
            .collect(),
        study.line_budget,
        "budget_line",
    );

    for (sm, block) in matrices.iter().zip(&blocks) {
        let t = sm.scenario;

        // Primal inequalities: P y + K x <= r.
        for (row, entries) in sm.ineq.rows().enumerate() {
            let mut full: Vec<(usize, f64)> = entries
                .iter()
                .map(|&(col, v)| (block.y.start + col, v))
                .collect();
            for &(bin, v) in sm.coupling.row(row) {
                full.push((bin, v));
            }
            a_ineq.push_row(&full);
            b_ineq.push(sm.rhs_ineq[row]);
            ineq_names.push(format!("t{t}_pri_{}", sm.ineq_tags[row]));
        }

        // Bilinear linearization rows.
        for (c, &(row, bin, _)) in sm.coupled_rows.iter().enumerate() {
            let z = block.z.start + c;
            let mu = block.mu.start + row;
            for (i, (cz, cx, cmu, rhs)) in linearize_bilinear(dual_bound).iter().enumerate() {
                let mut full: Vec<(usize, f64)> = Vec::with_capacity(3);
                if *cz != 0.0 {
                    full.push((z, *cz));
                }
                if *cx != 0.0 {
                    full.push((bin, *cx));
                }
                if *cmu != 0.0 {
                    full.push((mu, *cmu));
                }
                a_ineq.push_row(&full);
                b_ineq.push(*rhs);
                ineq_names.push(format!("t{t}_lin{c}_{i}"));
            }
        }

        // Primal equalities: E y = h.
        for (row, entries) in sm.eq.rows().enumerate() {
            let full: Vec<(usize, f64)> = entries
                .iter()
                .map(|&(col, v)| (block.y.start + col, v))
                .collect();
            a_eq.push_row(&full);
            b_eq.push(sm.rhs_eq[row]);
            eq_names.push(format!("t{t}_eq_{}", sm.eq_tags[row]));
        }

        // Dual stationarity: P'mu + E'lambda = -w.
        for (col, (terms, rhs)) in build_dual_system(sm).into_iter().enumerate() {
            let full: Vec<(usize, f64)> = terms
                .iter()
                .map(|&(dref, v)| match dref {
                    DualRef::Mu(r) => (block.mu.start + r, v),
                    DualRef::Lambda(r) => (block.lambda.start + r, v),
                })
                .collect();
            a_eq.push_row(&full);
            b_eq.push(rhs);
            eq_names.push(format!("t{t}_dual_{}", sm.var_tags[col]));
        }

        // Strong duality: w'y - sum K z + r'mu + h'lambda = 0, equilibrated.
        let sd = build_strong_duality_row(sm);
        let mut full: Vec<(usize, f64)> = Vec::new();
        for &(j, wv) in &sd.y_terms {
            full.push((block.y.start + j, wv));
        }
        for (c, &(_, _, kv)) in sd.bilinear.iter().enumerate() {
            full.push((block.z.start + c, -kv));
        }
        for &(row, rv) in &sd.mu_terms {
            full.push((block.mu.start + row, rv));
        }
        for &(row, hv) in &sd.lambda_terms {
            full.push((block.lambda.start + row, hv));
        }
        let scale = 1.0 / full.iter().fold(1.0f64, |a, &(_, v)| a.max(v.abs()));
        let scaled: Vec<(usize, f64)> = full.iter().map(|&(c, v)| (c, v * scale)).collect();
        a_eq.push_row(&scaled);
        b_eq.push(0.0);
        eq_names.push(format!("t{t}_sd"));
    }

    let problem = MilpProblem {
        lp: LpProblem {
            cost: objective,
            a_ineq,
            b_ineq,
            a_eq,
            b_eq,
            lower,
            upper,
        },
        binaries: (0..n_bin).collect(),
        var_names,
        ineq_names,
        eq_names,
        mipgap: 0.001,
    };
    problem
        .check_shape()
        .map_err(|e| crate::Error::Schema(format!("single-level model: {e}")))?;

    Ok(SingleLevelMilp {
        problem,
        n_pst,
        n_lines,
        blocks,
        matrices,
        dual_bound,
    })
}

/// Integer tolerance accepted when reading binaries out of a MILP solution.
pub const BINARY_TOL: f64 = 1e-6;

/// Pull the investment plan and per-scenario dispatch out of a MILP
/// solution.
pub fn extract_solution(
    model: &SingleLevelMilp,
    study: &PlanningStudy,
    solution: &MilpSolution,
) -> crate::Result<(Plan, DispatchResult)> {
    let x = &solution.x;
    for &col in &model.problem.binaries {
        let v = x[col];
        if (v - v.round()).abs() > BINARY_TOL {
            return Err(crate::Error::Report(format!(
                "binary {} = {v} not integral",
                model.problem.var_names[col]
            )));
        }
    }
    let plan = Plan {
        pst_built: (0..model.n_pst).map(|p| x[p] > 0.5).collect(),
        lines_built: (0..model.n_lines).map(|l| x[model.n_pst + l] > 0.5).collect(),
    };

    let base = study.mva_base;
    let mut dispatch = Vec::new();
    for (sm, block) in model.matrices.iter().zip(&model.blocks) {
        let y = &x[block.y.clone()];
        let lam = &x[block.lambda.clone()];
        let mut d = ScenarioDispatch {
            scenario: sm.scenario,
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
                    d.pst_angle.push(if plan.pst_built[*p] { y[j] } else { 0.0 });
                }
                VarTag::Angle(_) => d.angles.push(y[j]),
            }
        }
        for (row, tag) in sm.eq_tags.iter().enumerate() {
            if let RowTag::Balance(_) = tag {
                // M$/h per p.u. -> $/MWh.
                d.lmp.push(lam[row] * 1e6 / base);
            }
        }
        dispatch.push(d);
    }
    Ok((plan, dispatch))
}

/// Residuals and big-M health of a single-level solution.
#[derive(Debug, Clone)]
pub struct SolutionAudit {
    /// max violation of P y + K x <= r and E y = h, per-unit.
    pub primal_residual: f64,
    /// max violation of P'mu + E'lambda + w = 0 and mu >= 0.
    pub dual_residual: f64,
    /// max per-scenario |w'y - dual objective| / (1 + |w'y|).
    pub strong_duality_rel: f64,
    /// max violation of the switched flow definitions: alpha = 1 rows must
    /// hold as equalities, alpha = 0 lines must carry zero flow.
    pub disjunctive_residual: f64,
    /// |b theta| must stay strictly inside the disjunctive constant on
    /// unbuilt lines.
    pub big_m_headroom: f64,
    /// Coupled multipliers sitting at the dual bound (scenario, row).
    pub mu_at_bound: Vec<(usize, usize)>,
}

impl SolutionAudit {
    pub fn passed(&self) -> bool {
        self.primal_residual <= 1e-8
            && self.dual_residual <= 1e-8
            && self.strong_duality_rel <= 1e-6
            && self.disjunctive_residual <= 1e-6
            && self.big_m_headroom > 0.0
            && self.mu_at_bound.is_empty()
    }
}

/// Check every optimality certificate of a single-level solution against
/// the unscaled scenario blocks.
pub fn audit_solution(model: &SingleLevelMilp, solution: &MilpSolution) -> SolutionAudit {
    let x = &solution.x;
    let nbin = model.n_pst + model.n_lines;
    let bins = &x[0..nbin];

    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut sd_rel: f64 = 0.0;
    let mut disj: f64 = 0.0;
    let mut headroom = f64::INFINITY;
    let mut mu_at_bound = Vec::new();

    for (sm, block) in model.matrices.iter().zip(&model.blocks) {
        let y = &x[block.y.clone()];
        let lam = &x[block.lambda.clone()];
        let mu = &x[block.mu.clone()];

        // Primal rows.
        let py = sm.ineq.mul_vec(y);
        let kx = sm.coupling.mul_vec(bins);
        for row in 0..sm.rhs_ineq.len() {
            primal = primal.max(py[row] + kx[row] - sm.rhs_ineq[row]);
        }
        for (row, &h) in sm.rhs_eq.iter().enumerate() {
            primal = primal.max((sm.eq.row_dot(row, y) - h).abs());
        }

        // Dual stationarity and sign.
        let stat = sm.ineq.mul_transpose_vec(mu);
        let et_lambda = sm.eq.mul_transpose_vec(lam);
        for j in 0..sm.num_vars() {
            dual = dual.max((stat[j] + et_lambda[j] + sm.cost[j]).abs());
        }
        for &m in mu {
            dual = dual.max(-m);
        }

        // Strong duality against the true (unscaled) data.
        let wy: f64 = sm.cost.iter().zip(y).map(|(w, v)| w * v).sum();
        let mut dual_obj: f64 = -sm
            .rhs_ineq
            .iter()
            .zip(mu)
            .map(|(r, m)| r * m)
            .sum::<f64>()
            - sm.rhs_eq.iter().zip(lam).map(|(h, l)| h * l).sum::<f64>();
        for &(row, bin, kv) in &sm.coupled_rows {
            dual_obj += kv * bins[bin] * mu[row];
        }
        sd_rel = sd_rel.max((wy - dual_obj).abs() / (1.0 + wy.abs()));

        // Disjunctive health per prospective line.
        for (row, tag) in sm.ineq_tags.iter().enumerate() {
            if let RowTag::ProspectiveFlowUpper(l) = tag {
                // Row reads P - b*theta <= M (1 - alpha); its left side is
                // the flow-definition residual.
                let resid = sm.ineq.row_dot(row, y);
                let m_k = sm.rhs_ineq[row];
                let alpha = bins[model.n_pst + l];
                if alpha > 0.5 {
                    disj = disj.max(resid.abs());
                } else {
                    // Unbuilt: flow must vanish and b*theta must stay
                    // strictly inside the big-M band.
                    let flow_col = sm
                        .ineq
                        .row(row)
                        .iter()
                        .find(|&&(c, _)| matches!(sm.var_tags[c], VarTag::Flow(_)))
                        .map(|&(c, _)| c)
                        .expect("flow column in disjunctive row");
                    let flow = y[flow_col];
                    disj = disj.max(flow.abs());
                    let b_theta = flow - resid; // P - (P - b theta)
                    headroom = headroom.min(m_k - b_theta.abs());
                }
            }
        }

        // Coupled multipliers against the dual bound.
        for &(row, _, _) in &sm.coupled_rows {
            if mu[row] >= model.dual_bound * (1.0 - 1e-6) {
                mu_at_bound.push((sm.scenario, row));
            }
        }
    }

    SolutionAudit {
        primal_residual: primal,
        dual_residual: dual,
        strong_duality_rel: sd_rel,
        disjunctive_residual: disj,
        big_m_headroom: if headroom.is_finite() { headroom } else { f64::INFINITY },
        mu_at_bound,
    }
}

/// A solved single-level model with its audit trail.
#[derive(Debug, Clone)]
pub struct SolvedPlan {
    pub model: SingleLevelMilp,
    pub solution: crate::solver::MilpSolution,
    pub audit: SolutionAudit,
    /// How many times the dual bound was raised tenfold because a coupled
    /// multiplier sat at it.
    pub escalations: usize,
}

/// Build and solve the single-level MILP, then audit the solution. If any
/// coupled multiplier rests on the dual bound the bound is raised tenfold
/// and the model re-solved (at most `max_escalations` times): an active
/// bound means the linearization may have clipped the true duals.
pub fn solve_single_level(
    study: &PlanningStudy,
    mipgap: f64,
    max_escalations: usize,
) -> crate::Result<SolvedPlan> {
    let mut dual_bound = study.dual_big_m;
    let mut escalations = 0;
    loop {
        let model = build_single_level_milp_with(study, dual_bound)?;
        let solution = crate::solver::branch_and_bound(&model.problem, mipgap)?;
        let audit = audit_solution(&model, &solution);
        if !audit.mu_at_bound.is_empty() && escalations < max_escalations {
            log::warn!(
                "{} coupled multipliers at the dual bound {dual_bound:e}; re-solving at 10x",
                audit.mu_at_bound.len()
            );
            dual_bound *= 10.0;
            escalations += 1;
            continue;
        }
        return Ok(SolvedPlan {
            model,
            solution,
            audit,
            escalations,
        });
    }
}
