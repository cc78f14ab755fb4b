//! Bounded-variable primal simplex with dual extraction.
//!
//! Two-phase method: phase 1 minimizes the sum of artificial variables
//! placed on equality rows and on inequality rows violated by the initial
//! bound-feasible point. Pricing is Dantzig's rule with a fall back to
//! Bland's rule after a degeneracy stall, which guarantees termination.
//! The basis is kept as a sparse LU factorization refreshed periodically,
//! with product-form updates between refactorizations.

use super::problem::{LpProblem, LpSolution, LpStatus};
use super::sparse::ColMatrix;
use super::SolveError;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Primal feasibility tolerance on row and bound residuals.
    pub feas_tol: f64,
    /// Reduced-cost tolerance, scaled by (1 + max |cost|).
    pub dual_tol: f64,
    /// Entries below this magnitude are treated as zero in the ratio test.
    pub pivot_tol: f64,
    /// Refactorize after this many basis updates.
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_limit: usize,
    /// Hard iteration cap; 0 picks one from the problem size.
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 64,
            stall_limit: 300,
            max_iterations: 0,
        }
    }
}

/// Solve with default options.
pub fn simplex_solve(lp: &LpProblem) -> Result<LpSolution, SolveError> {
    simplex_solve_with(lp, &SimplexOptions::default())
}

pub fn simplex_solve_with(
    lp: &LpProblem,
    options: &SimplexOptions,
) -> Result<LpSolution, SolveError> {
    lp.check_shape().map_err(SolveError::BadProblem)?;
    // Deterministic restart ladder: on numerical breakdown retry with
    // fresher factors and a coarser pivot threshold before giving up.
    let mut attempt = *options;
    let mut last_err = None;
    for round in 0..3 {
        let mut engine = Simplex::new(lp, attempt);
        match engine.solve() {
            Ok(solution) => return Ok(solution),
            Err(e @ (SolveError::Numerical(_) | SolveError::IterationLimit(_))) => {
                log::debug!("simplex restart {round}: {e}");
                last_err = Some(e);
                attempt.refactor_every = (attempt.refactor_every / 4).max(4);
                attempt.pivot_tol *= 100.0;
                attempt.stall_limit = (attempt.stall_limit / 2).max(50);
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.expect("restart ladder only runs after a failure"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable, held at zero.
    FreeZero,
}

/// Sparse LU factors of the basis, P*B = L*U with partial pivoting.
/// Row indices in `l_*` are original row numbers; `u_*` row indices are
/// pivot positions.
struct LuFactors {
    l_colptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    u_colptr: Vec<usize>,
    u_rows: Vec<usize>,
    u_vals: Vec<f64>,
    u_diag: Vec<f64>,
    /// perm[k] = original row pivoted at elimination step k.
    perm: Vec<usize>,
    /// pinv[original row] = elimination step, or usize::MAX.
    pinv: Vec<usize>,
}

/// One product-form update: basis position `pos` was replaced by a column
/// whose FTRAN image was `w` (stored sparse).
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

struct Simplex<'a> {
    lp: &'a LpProblem,
    opts: SimplexOptions,
    m_ineq: usize,
    m: usize,
    n_struct: usize,
    /// Structural columns (inequality rows stacked over equality rows).
    cols: ColMatrix,
    /// Stacked right-hand side.
    rhs: Vec<f64>,
    /// (row, sign) of each artificial variable, indexed from n_struct+m_ineq.
    artificials: Vec<(usize, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    x: Vec<f64>,
    basis: Vec<usize>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    iterations: usize,
    stall: usize,
    bland: bool,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Progress,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LpProblem, opts: SimplexOptions) -> Self {
        let m_ineq = lp.b_ineq.len();
        let m = m_ineq + lp.b_eq.len();
        let n_struct = lp.num_vars();
        let cols = ColMatrix::from_row_blocks(&[&lp.a_ineq, &lp.a_eq], n_struct);
        let mut rhs = lp.b_ineq.clone();
        rhs.extend_from_slice(&lp.b_eq);

        let n_total = n_struct + m_ineq;
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        lower.resize(n_total, 0.0);
        upper.resize(n_total, f64::INFINITY);

        Self {
            lp,
            opts,
            m_ineq,
            m,
            n_struct,
            cols,
            rhs,
            artificials: Vec::new(),
            lower,
            upper,
            cost: vec![0.0; n_total],
            status: vec![VarStatus::AtLower; n_total],
            x: vec![0.0; n_total],
            basis: Vec::with_capacity(m),
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            stall: 0,
            bland: false,
        }
    }

    fn num_vars(&self) -> usize {
        self.lower.len()
    }

    fn slack_var(&self, row: usize) -> usize {
        self.n_struct + row
    }

    /// Visit the nonzero entries of variable `v`'s constraint column.
    fn for_col<F: FnMut(usize, f64)>(&self, v: usize, mut f: F) {
        if v < self.n_struct {
            let (rows, vals) = self.cols.col(v);
            for (&r, &val) in rows.iter().zip(vals) {
                f(r, val);
            }
        } else if v < self.n_struct + self.m_ineq {
            f(v - self.n_struct, 1.0);
        } else {
            let (row, sign) = self.artificials[v - self.n_struct - self.m_ineq];
            f(row, sign);
        }
    }

    fn max_iterations(&self) -> usize {
        if self.opts.max_iterations > 0 {
            self.opts.max_iterations
        } else {
            20_000 + 200 * (self.m + self.num_vars())
        }
    }

    fn solve(&mut self) -> Result<LpSolution, SolveError> {
        self.init_phase1();
        let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if self.artificials.is_empty() {
            // Already bound-feasible; skip straight to phase 2.
        } else {
            match self.run_phase(true)? {
                StepOutcome::Unbounded => {
                    return Err(SolveError::Numerical(
                        "phase-1 objective unbounded".into(),
                    ))
                }
                _ => {}
            }
            self.refresh(true)?;
            let infeas: f64 = self.artificial_sum();
            if infeas > 1e-7 * scale {
                return Ok(self.build_solution(LpStatus::Infeasible));
            }
            // Pin artificials at zero for phase 2.
            let base = self.n_struct + self.m_ineq;
            for v in base..self.num_vars() {
                self.lower[v] = 0.0;
                self.upper[v] = 0.0;
                if !matches!(self.status[v], VarStatus::Basic(_)) {
                    self.status[v] = VarStatus::AtLower;
                    self.x[v] = 0.0;
                }
            }
        }

        for v in 0..self.num_vars() {
            self.cost[v] = if v < self.n_struct {
                self.lp.cost[v]
            } else {
                0.0
            };
        }
        self.bland = false;
        self.stall = 0;
        match self.run_phase(false)? {
            StepOutcome::Unbounded => Ok(self.build_solution(LpStatus::Unbounded)),
            _ => {
                self.refresh(true)?;
                Ok(self.build_solution(LpStatus::Optimal))
            }
        }
    }

    fn artificial_sum(&self) -> f64 {
        let base = self.n_struct + self.m_ineq;
        (base..self.num_vars()).map(|v| self.x[v].abs()).sum()
    }

    /// Build the initial point: structural variables at a finite bound (or
    /// zero when free), slacks basic where that is feasible, artificials on
    /// equality rows and violated inequality rows.
    fn init_phase1(&mut self) {
        for v in 0..self.n_struct {
            let (lo, up) = (self.lower[v], self.upper[v]);
            let (st, val) = if lo.is_finite() {
                (VarStatus::AtLower, lo)
            } else if up.is_finite() {
                (VarStatus::AtUpper, up)
            } else {
                (VarStatus::FreeZero, 0.0)
            };
            self.status[v] = st;
            self.x[v] = val;
        }

        // Row residuals at the initial nonbasic point.
        let mut resid = self.rhs.clone();
        for v in 0..self.n_struct {
            let xv = self.x[v];
            if xv != 0.0 {
                let (rows, vals) = self.cols.col(v);
                for (&r, &val) in rows.iter().zip(vals) {
                    resid[r] -= val * xv;
                }
            }
        }

        self.basis.clear();
        for r in 0..self.m {
            let is_ineq = r < self.m_ineq;
            if is_ineq && resid[r] >= 0.0 {
                let s = self.slack_var(r);
                self.status[s] = VarStatus::Basic(self.basis.len());
                self.x[s] = resid[r];
                self.basis.push(s);
            } else {
                if is_ineq {
                    let s = self.slack_var(r);
                    self.status[s] = VarStatus::AtLower;
                    self.x[s] = 0.0;
                }
                let sign = if resid[r] >= 0.0 { 1.0 } else { -1.0 };
                let v = self.num_vars();
                self.artificials.push((r, sign));
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.cost.push(0.0);
                self.status.push(VarStatus::Basic(self.basis.len()));
                self.x.push(resid[r].abs());
                self.basis.push(v);
            }
        }

        // Phase-1 objective: sum of artificials.
        let base = self.n_struct + self.m_ineq;
        for v in base..self.num_vars() {
            self.cost[v] = 1.0;
        }
        self.lu = None;
        self.etas.clear();
    }

    fn run_phase(&mut self, phase1: bool) -> Result<StepOutcome, SolveError> {
        let limit = self.max_iterations();
        self.refresh(false)?;
        loop {
            if self.iterations >= limit {
                return Err(SolveError::IterationLimit(self.iterations));
            }
            self.iterations += 1;
            match self.step()? {
                StepOutcome::Optimal => return Ok(StepOutcome::Optimal),
                StepOutcome::Unbounded => return Ok(StepOutcome::Unbounded),
                StepOutcome::Progress => {}
            }
            if phase1 && self.artificial_sum() <= 0.0 {
                return Ok(StepOutcome::Optimal);
            }
        }
    }

    /// One simplex iteration: price, ratio test, pivot.
    fn step(&mut self) -> Result<StepOutcome, SolveError> {
        let y = self.btran_cost();
        let dual_tol =
            self.opts.dual_tol * (1.0 + self.cost.iter().fold(0.0f64, |a, &c| a.max(c.abs())));

        // Pricing: Dantzig by default, Bland when stalled.
        let mut entering: Option<(usize, f64, f64)> = None; // (var, violation, direction)
        for v in 0..self.num_vars() {
            let st = self.status[v];
            if matches!(st, VarStatus::Basic(_)) {
                continue;
            }
            if self.upper[v] - self.lower[v] <= 0.0 {
                continue; // fixed
            }
            let mut d = self.cost[v];
            self.for_col(v, |r, a| d -= a * y[r]);
            let (violation, dir) = match st {
                VarStatus::AtLower => (-d, 1.0),
                VarStatus::AtUpper => (d, -1.0),
                VarStatus::FreeZero => (d.abs(), if d > 0.0 { -1.0 } else { 1.0 }),
                VarStatus::Basic(_) => unreachable!(),
            };
            if violation > dual_tol {
                if self.bland {
                    entering = Some((v, violation, dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if best >= violation => {}
                    _ => entering = Some((v, violation, dir)),
                }
            }
        }

        let Some((enter, _, dir)) = entering else {
            // Confirm optimality against fresh factors: a stale eta file
            // can hide eligible candidates behind drifted duals.
            if !self.etas.is_empty() {
                self.refresh(true)?;
                self.iterations -= 1;
                return Ok(StepOutcome::Progress);
            }
            return Ok(StepOutcome::Optimal);
        };

        let w = self.ftran_col(enter);

        // Two-pass ratio test. The entering variable moves by dir*t and
        // basic variable k changes by -dir*t*w[k]. Pass 1 finds the tightest
        // bound-relaxed ratio; pass 2 picks the numerically best pivot among
        // candidates inside that limit (under Bland's rule: the lowest
        // variable index at the exact minimum ratio).
        let own_range = self.upper[enter] - self.lower[enter];
        let mut t_limit = if own_range.is_finite() {
            own_range
        } else {
            f64::INFINITY
        };
        let room_of = |k: usize, wk: f64| -> Option<(f64, f64, bool, f64)> {
            // -> (room, |rate|, hits_upper, |limit|)
            let v = self.basis[k];
            let rate = -dir * wk;
            let (limit, hits_upper) = if rate > 0.0 {
                (self.upper[v], true)
            } else {
                (self.lower[v], false)
            };
            if !limit.is_finite() {
                return None;
            }
            let room = if hits_upper {
                limit - self.x[v]
            } else {
                self.x[v] - limit
            };
            Some((room.max(0.0), rate.abs(), hits_upper, limit.abs()))
        };
        for k in 0..self.m {
            let wk = w[k];
            if wk.abs() <= self.opts.pivot_tol {
                continue;
            }
            if let Some((room, rate, _, limit_mag)) = room_of(k, wk) {
                let relaxed = (room + self.opts.feas_tol * (1.0 + limit_mag)) / rate;
                if relaxed < t_limit {
                    t_limit = relaxed;
                }
            }
        }

        if !t_limit.is_finite() {
            return Ok(StepOutcome::Unbounded);
        }

        let mut blocker: Option<(usize, bool, f64)> = None; // (pos, hits_upper, exact ratio)
        for k in 0..self.m {
            let wk = w[k];
            if wk.abs() <= self.opts.pivot_tol {
                continue;
            }
            if let Some((room, rate, hits_upper, _)) = room_of(k, wk) {
                let exact = room / rate;
                if exact > t_limit + 1e-12 {
                    continue;
                }
                let better = match blocker {
                    None => true,
                    Some((bk, _, bratio)) => {
                        if self.bland {
                            exact < bratio - 1e-12
                                || (exact < bratio + 1e-12 && self.basis[k] < self.basis[bk])
                        } else {
                            wk.abs() > w[bk].abs()
                        }
                    }
                };
                if better {
                    blocker = Some((k, hits_upper, exact));
                }
            }
        }
        // Prefer the entering variable's own bound when it is at least as
        // tight as the chosen pivot.
        if let Some((_, _, exact)) = blocker {
            if own_range.is_finite() && own_range < exact {
                blocker = None;
            }
        }
        let t_best = match blocker {
            Some((_, _, exact)) => exact,
            None => own_range,
        };

        // A small pivot with a stale eta file is unreliable; rebuild the
        // factors and redo the iteration. With fresh factors it is simply
        // the best pivot available and is accepted.
        if let Some((k_leave, _, _)) = blocker {
            if w[k_leave].abs() < 1e-7 && !self.etas.is_empty() {
                self.refresh(true)?;
                self.iterations -= 1;
                return Ok(StepOutcome::Progress);
            }
        }

        // Track degeneracy. Bland's rule engages after a stall and stays
        // on until the plateau is left with a strict step; each plateau is
        // escaped in finitely many Bland pivots, so the phase terminates.
        if t_best <= 1e-10 {
            self.stall += 1;
            if self.stall > self.opts.stall_limit {
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }

        // Apply the move to the basic values.
        if t_best > 0.0 {
            for k in 0..self.m {
                if w[k].abs() > 0.0 {
                    let v = self.basis[k];
                    self.x[v] -= dir * t_best * w[k];
                }
            }
        }

        match blocker {
            None => {
                // Bound flip: entering runs to its opposite bound.
                self.x[enter] += dir * t_best;
                self.status[enter] = if dir > 0.0 {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                Ok(StepOutcome::Progress)
            }
            Some((k_leave, hits_upper, _)) => {
                let pivot = w[k_leave];
                let leave = self.basis[k_leave];
                self.x[leave] = if hits_upper {
                    self.upper[leave]
                } else {
                    self.lower[leave]
                };
                self.status[leave] = if hits_upper {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.x[enter] += dir * t_best;
                self.status[enter] = VarStatus::Basic(k_leave);
                self.basis[k_leave] = enter;

                let entries: Vec<(usize, f64)> = w
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| v.abs() > 1e-14)
                    .map(|(i, &v)| (i, v))
                    .collect();
                self.etas.push(Eta {
                    pos: k_leave,
                    pivot,
                    entries,
                });
                if self.etas.len() >= self.opts.refactor_every {
                    self.refresh(true)?;
                }
                Ok(StepOutcome::Progress)
            }
        }
    }

    /// Refactorize the basis and recompute basic values from the nonbasic
    /// point. `force` rebuilds even when factors exist and no update was
    /// applied since.
    fn refresh(&mut self, force: bool) -> Result<(), SolveError> {
        if self.lu.is_some() && self.etas.is_empty() && !force {
            return Ok(());
        }
        let lu = self.factorize()?;
        self.lu = Some(lu);
        self.etas.clear();

        // Recompute basic values: B x_B = rhs - N x_N.
        let mut r = self.rhs.clone();
        for v in 0..self.num_vars() {
            if matches!(self.status[v], VarStatus::Basic(_)) {
                continue;
            }
            let xv = self.x[v];
            if xv != 0.0 {
                self.for_col(v, |row, a| r[row] -= a * xv);
            }
        }
        let xb = self.ftran(&r);
        for k in 0..self.m {
            self.x[self.basis[k]] = xb[k];
        }

        // Iterative refinement: wide coefficient ranges leave the plain
        // solve a few digits short of the certificate tolerances.
        for _ in 0..2 {
            let mut res = self.rhs.clone();
            for v in 0..self.num_vars() {
                let xv = self.x[v];
                if xv != 0.0 {
                    self.for_col(v, |row, a| res[row] -= a * xv);
                }
            }
            let norm = res.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            if norm <= 1e-13 {
                break;
            }
            let delta = self.ftran(&res);
            for k in 0..self.m {
                self.x[self.basis[k]] += delta[k];
            }
        }
        Ok(())
    }

    /// Sparse left-looking LU of the current basis with partial pivoting
    /// (ties broken toward the lowest row index).
    fn factorize(&self) -> Result<LuFactors, SolveError> {
        let m = self.m;
        let mut lu = LuFactors {
            l_colptr: vec![0],
            l_rows: Vec::new(),
            l_vals: Vec::new(),
            u_colptr: vec![0],
            u_rows: Vec::new(),
            u_vals: Vec::new(),
            u_diag: Vec::with_capacity(m),
            perm: Vec::with_capacity(m),
            pinv: vec![usize::MAX; m],
        };
        let mut work = vec![0.0f64; m];
        let mut visited = vec![u32::MAX; m];
        let mut order: Vec<usize> = Vec::with_capacity(m);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for (step, &bvar) in self.basis.iter().enumerate() {
            let stamp = step as u32;
            // Reach of the column pattern through the finished part of L,
            // collected in topological order.
            order.clear();
            let mut pattern: Vec<usize> = Vec::new();
            self.for_col(bvar, |r, v| {
                pattern.push(r);
                work[r] = v;
            });
            for &start in &pattern {
                if visited[start] == stamp {
                    continue;
                }
                stack.push((start, 0));
                visited[start] = stamp;
                while let Some(top) = stack.last_mut() {
                    let node = top.0;
                    let k = lu.pinv[node];
                    let mut descend = None;
                    if k != usize::MAX {
                        let lo = lu.l_colptr[k];
                        let hi = lu.l_colptr[k + 1];
                        while lo + top.1 < hi {
                            let next = lu.l_rows[lo + top.1];
                            top.1 += 1;
                            if visited[next] != stamp {
                                descend = Some(next);
                                break;
                            }
                        }
                    }
                    match descend {
                        Some(next) => {
                            visited[next] = stamp;
                            stack.push((next, 0));
                        }
                        None => {
                            order.push(node);
                            stack.pop();
                        }
                    }
                }
            }

            // Eliminate in topological order (reverse of post-order).
            for idx in (0..order.len()).rev() {
                let r = order[idx];
                let k = lu.pinv[r];
                if k == usize::MAX {
                    continue;
                }
                let xk = work[r];
                if xk == 0.0 {
                    continue;
                }
                for p in lu.l_colptr[k]..lu.l_colptr[k + 1] {
                    work[lu.l_rows[p]] -= lu.l_vals[p] * xk;
                }
            }

            // Partial pivot among rows not pivoted yet.
            let mut pivot_row = usize::MAX;
            let mut pivot_val = 0.0f64;
            for &r in &order {
                if lu.pinv[r] == usize::MAX {
                    let a = work[r].abs();
                    if a > pivot_val || (a == pivot_val && r < pivot_row) {
                        pivot_val = a;
                        pivot_row = r;
                    }
                }
            }
            if pivot_row == usize::MAX || pivot_val < 1e-12 {
                // Clean scatter before bailing out.
                for &r in &order {
                    work[r] = 0.0;
                }
                return Err(SolveError::Numerical(format!(
                    "singular basis at column {step}"
                )));
            }
            let piv = work[pivot_row];

            for &r in &order {
                let v = work[r];
                work[r] = 0.0;
                if v == 0.0 {
                    continue;
                }
                let k = lu.pinv[r];
                if k != usize::MAX {
                    lu.u_rows.push(k);
                    lu.u_vals.push(v);
                } else if r != pivot_row {
                    lu.l_rows.push(r);
                    lu.l_vals.push(v / piv);
                }
            }
            lu.u_colptr.push(lu.u_rows.len());
            lu.l_colptr.push(lu.l_rows.len());
            lu.u_diag.push(piv);
            lu.perm.push(pivot_row);
            lu.pinv[pivot_row] = step;
        }
        Ok(lu)
    }

    /// w = B^{-1} a for a dense right-hand side in row indexing; result is
    /// indexed by basis position.
    fn ftran(&self, a: &[f64]) -> Vec<f64> {
        let lu = self.lu.as_ref().expect("factorized");
        let mut x = a.to_vec();
        for k in 0..self.m {
            let xk = x[lu.perm[k]];
            if xk != 0.0 {
                for p in lu.l_colptr[k]..lu.l_colptr[k + 1] {
                    x[lu.l_rows[p]] -= lu.l_vals[p] * xk;
                }
            }
        }
        let mut w = vec![0.0f64; self.m];
        for k in (0..self.m).rev() {
            let v = x[lu.perm[k]] / lu.u_diag[k];
            w[k] = v;
            if v != 0.0 {
                for p in lu.u_colptr[k]..lu.u_colptr[k + 1] {
                    x[lu.perm[lu.u_rows[p]]] -= lu.u_vals[p] * v;
                }
            }
        }
        for eta in &self.etas {
            if w[eta.pos] != 0.0 {
                let wp = w[eta.pos] / eta.pivot;
                for &(i, v) in &eta.entries {
                    if i != eta.pos {
                        w[i] -= v * wp;
                    }
                }
                w[eta.pos] = wp;
            }
        }
        w
    }

    fn ftran_col(&self, var: usize) -> Vec<f64> {
        let mut a = vec![0.0f64; self.m];
        self.for_col(var, |r, v| a[r] += v);
        self.ftran(&a)
    }

    /// y solving B' y = c_B, indexed by original row.
    fn btran_cost(&self) -> Vec<f64> {
        let lu = self.lu.as_ref().expect("factorized");
        let mut c: Vec<f64> = self.basis.iter().map(|&v| self.cost[v]).collect();
        for eta in self.etas.iter().rev() {
            let mut dot = 0.0;
            for &(i, v) in &eta.entries {
                if i != eta.pos {
                    dot += v * c[i];
                }
            }
            c[eta.pos] = (c[eta.pos] - dot) / eta.pivot;
        }
        // Solve U' z = c (forward over pivot positions).
        let mut z = vec![0.0f64; self.m];
        for k in 0..self.m {
            let mut s = c[k];
            for p in lu.u_colptr[k]..lu.u_colptr[k + 1] {
                s -= lu.u_vals[p] * z[lu.u_rows[p]];
            }
            z[k] = s / lu.u_diag[k];
        }
        // Solve L' t = z (backward), then scatter by row permutation.
        for k in (0..self.m).rev() {
            let mut s = z[k];
            for p in lu.l_colptr[k]..lu.l_colptr[k + 1] {
                s -= lu.l_vals[p] * z[lu.pinv[lu.l_rows[p]]];
            }
            z[k] = s;
        }
        let mut y = vec![0.0f64; self.m];
        for k in 0..self.m {
            y[lu.perm[k]] = z[k];
        }
        y
    }

    fn build_solution(&mut self, status: LpStatus) -> LpSolution {
        let n = self.n_struct;
        let x: Vec<f64> = self.x[..n].to_vec();
        let objective: f64 = self.lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        let (dual_eq, dual_ineq, reduced) = if status == LpStatus::Optimal {
            let y = self.btran_cost();
            // Only round-off-sized negatives are clamped; real sign errors
            // must stay visible to the certificate checks.
            let mu: Vec<f64> = (0..self.m_ineq)
                .map(|r| {
                    let v = -y[r];
                    if v < 0.0 && v > -1e-9 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            let lambda: Vec<f64> = (self.m_ineq..self.m).map(|r| -y[r]).collect();
            let mut reduced = Vec::with_capacity(n);
            for v in 0..n {
                if matches!(self.status[v], VarStatus::Basic(_)) {
                    reduced.push(0.0);
                } else {
                    let mut d = self.cost[v];
                    self.for_col(v, |r, a| d -= a * y[r]);
                    reduced.push(d);
                }
            }
            (lambda, mu, reduced)
        } else {
            (
                vec![0.0; self.m - self.m_ineq],
                vec![0.0; self.m_ineq],
                vec![0.0; n],
            )
        };
        LpSolution {
            status,
            x,
            objective,
            dual_eq,
            dual_ineq,
            reduced_costs: reduced,
            iterations: self.iterations,
        }
    }
}
