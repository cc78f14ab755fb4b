//! Problem and solution containers for the embedded LP/MILP engine.
//!
//! An [`LpProblem`] is `min c'x` subject to `A x <= b`, `E x = h` and
//! elementwise bounds `lo <= x <= up` (infinite bounds allowed). Inequality
//! duals are reported with the sign convention
//!
//! ```text
//! c + A' mu + E' lambda = reduced costs,   mu >= 0
//! ```
//!
//! so that at an optimum with free variables the stationarity system
//! `c + A'mu + E'lambda = 0` holds exactly.

use super::sparse::SparseMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub a_ineq: SparseMatrix,
    pub b_ineq: Vec<f64>,
    pub a_eq: SparseMatrix,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// A problem with `n` free variables, zero cost and no constraints.
    pub fn with_free_vars(n: usize) -> Self {
        Self {
            cost: vec![0.0; n],
            a_ineq: SparseMatrix::new(n),
            b_ineq: Vec::new(),
            a_eq: SparseMatrix::new(n),
            b_eq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn check_shape(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.a_ineq.ncols() != n || self.a_eq.ncols() != n {
            return Err("matrix width differs from variable count".into());
        }
        if self.a_ineq.nrows() != self.b_ineq.len() || self.a_eq.nrows() != self.b_eq.len() {
            return Err("right-hand side length differs from row count".into());
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err("bound vector length differs from variable count".into());
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(format!("variable {j} has lower bound above upper bound"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (meaningful only when optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers of the equality rows.
    pub dual_eq: Vec<f64>,
    /// Multipliers of the inequality rows, nonnegative at an optimum.
    pub dual_ineq: Vec<f64>,
    /// c + A'mu + E'lambda per variable; zero for basic variables.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Worst-case residuals of an LP solution, used by tests and audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpCertificate {
    /// max violation of Ax <= b, Ex = h and the variable bounds.
    pub primal_infeasibility: f64,
    /// max of negative-mu violation and stationarity residual.
    pub dual_infeasibility: f64,
    /// max |mu_i * slack_i| and |reduced_cost_j * bound_slack_j|.
    pub complementarity: f64,
    /// |c'x - dual objective| / (1 + |c'x|).
    pub duality_gap: f64,
}

impl LpSolution {
    /// Measure optimality-certificate residuals against `lp`.
    pub fn certificate(&self, lp: &LpProblem) -> LpCertificate {
        let x = &self.x;
        let mut primal: f64 = 0.0;
        let ax = lp.a_ineq.mul_vec(x);
        let mut slacks = Vec::with_capacity(ax.len());
        for (i, &v) in ax.iter().enumerate() {
            let s = lp.b_ineq[i] - v;
            primal = primal.max(-s);
            slacks.push(s.max(0.0));
        }
        for (i, &v) in lp.a_eq.mul_vec(x).iter().enumerate() {
            primal = primal.max((v - lp.b_eq[i]).abs());
        }
        for j in 0..lp.num_vars() {
            primal = primal.max(lp.lower[j] - x[j]).max(x[j] - lp.upper[j]);
        }

        // Stationarity: c + A'mu + E'lambda must match the reported reduced
        // costs, and those must be sign-consistent with the active bounds.
        let mut stat = lp.a_ineq.mul_transpose_vec(&self.dual_ineq);
        let et_lambda = lp.a_eq.mul_transpose_vec(&self.dual_eq);
        let mut dual: f64 = 0.0;
        let mut comp: f64 = 0.0;
        for j in 0..lp.num_vars() {
            stat[j] += et_lambda[j] + lp.cost[j];
            let r = stat[j];
            dual = dual.max((r - self.reduced_costs[j]).abs());
            let at_lower = (x[j] - lp.lower[j]).abs() <= 1e-7 * (1.0 + lp.lower[j].abs());
            let at_upper = (x[j] - lp.upper[j]).abs() <= 1e-7 * (1.0 + lp.upper[j].abs());
            if at_lower && at_upper {
                continue; // fixed variable: any sign admissible
            } else if at_lower {
                dual = dual.max(-r);
            } else if at_upper {
                dual = dual.max(r);
            } else {
                // Strictly interior (or free): reduced cost must vanish.
                let dist = (x[j] - lp.lower[j]).min(lp.upper[j] - x[j]).min(1.0);
                comp = comp.max(r.abs() * dist);
            }
        }
        for (i, &mu) in self.dual_ineq.iter().enumerate() {
            dual = dual.max(-mu);
            comp = comp.max((mu * slacks[i]).abs());
        }

        let primal_obj: f64 = lp.cost.iter().zip(x).map(|(c, v)| c * v).sum();
        // Dual objective with bound multipliers folded in via reduced costs:
        // g = -b'mu - h'lambda + sum_j rc_j * (lo_j or up_j at the active bound).
        let mut dual_obj = -self
            .dual_ineq
            .iter()
            .zip(&lp.b_ineq)
            .map(|(m, b)| m * b)
            .sum::<f64>()
            - self
                .dual_eq
                .iter()
                .zip(&lp.b_eq)
                .map(|(l, h)| l * h)
                .sum::<f64>();
        for j in 0..lp.num_vars() {
            let r = self.reduced_costs[j];
            if r.abs() > 0.0 {
                let bound = if r > 0.0 { lp.lower[j] } else { lp.upper[j] };
                if bound.is_finite() {
                    dual_obj += r * bound;
                }
            }
        }
        let gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());

        LpCertificate {
            primal_infeasibility: primal,
            dual_infeasibility: dual,
            complementarity: comp,
            duality_gap: gap,
        }
    }
}

/// A mixed-integer problem: an LP plus a set of binary columns and naming
/// for export and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub lp: LpProblem,
    /// Column indices restricted to {0, 1}.
    pub binaries: Vec<usize>,
    pub var_names: Vec<String>,
    pub ineq_names: Vec<String>,
    pub eq_names: Vec<String>,
    /// Relative optimality gap targeted by the branch-and-bound search.
    pub mipgap: f64,
}

impl MilpProblem {
    pub fn check_shape(&self) -> Result<(), String> {
        self.lp.check_shape()?;
        let n = self.lp.num_vars();
        if self.var_names.len() != n {
            return Err("variable name count differs from variable count".into());
        }
        if self.ineq_names.len() != self.b_ineq_len() || self.eq_names.len() != self.lp.b_eq.len() {
            return Err("row name count differs from row count".into());
        }
        for &b in &self.binaries {
            if b >= n {
                return Err(format!("binary column {b} out of bounds"));
            }
        }
        let mut names: Vec<&str> = self
            .var_names
            .iter()
            .chain(&self.ineq_names)
            .chain(&self.eq_names)
            .map(|s| s.as_str())
            .collect();
        names.sort_unstable();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(format!("duplicate name '{}'", w[0]));
            }
        }
        Ok(())
    }

    fn b_ineq_len(&self) -> usize {
        self.lp.b_ineq.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    /// Proven optimal (gap zero within tolerance).
    Optimal,
    /// Terminated at the requested gap with a feasible incumbent.
    GapFeasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    /// (objective - best_bound) / max(1, |objective|).
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}
