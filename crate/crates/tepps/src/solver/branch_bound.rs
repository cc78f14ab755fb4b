//! Best-first branch and bound over binary variables.
//!
//! Nodes are ordered by their parent relaxation bound, ties broken by
//! creation index; branching picks the most fractional binary, ties broken
//! by the lowest column index. The search stops when the relative gap
//! between incumbent and bound reaches the target.

use super::problem::{MilpProblem, MilpSolution, MilpStatus};
use super::simplex::{simplex_solve_with, SimplexOptions};
use super::{LpStatus, SolveError};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Integrality tolerance: a binary within this distance of 0/1 counts as
/// integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct BranchBoundOptions {
    pub simplex: SimplexOptions,
    /// Abort after this many explored nodes (0 = unlimited).
    pub max_nodes: usize,
}

impl Default for BranchBoundOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            max_nodes: 0,
        }
    }
}

struct Node {
    /// Relaxation bound inherited from the parent (root: -inf).
    bound: f64,
    id: usize,
    /// (binary column, fixed value) decisions along the path.
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; we want the smallest bound first and,
        // on ties, the earliest-created node.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solve a binary MILP to the requested relative gap.
pub fn branch_and_bound(
    milp: &MilpProblem,
    mipgap: f64,
) -> Result<MilpSolution, SolveError> {
    branch_and_bound_with(milp, mipgap, &BranchBoundOptions::default())
}

pub fn branch_and_bound_with(
    milp: &MilpProblem,
    mipgap: f64,
    options: &BranchBoundOptions,
) -> Result<MilpSolution, SolveError> {
    milp.check_shape().map_err(SolveError::BadProblem)?;
    for &b in &milp.binaries {
        if milp.lp.lower[b] < -INTEGRALITY_TOL || milp.lp.upper[b] > 1.0 + INTEGRALITY_TOL {
            return Err(SolveError::BadProblem(format!(
                "binary column {b} has bounds outside [0, 1]"
            )));
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut lp = milp.lp.clone();

    let rel_gap = |inc: f64, bound: f64| (inc - bound) / 1.0f64.max(inc.abs());

    while let Some(node) = heap.pop() {
        // Global bound = smallest bound among open nodes (heap top after
        // popping is not smaller than this node's bound).
        if let Some((inc_obj, _)) = &incumbent {
            if rel_gap(*inc_obj, node.bound) <= mipgap {
                // Everything still open is within the gap target.
                let best_bound = node.bound;
                let (objective, x) = incumbent.unwrap();
                let gap = rel_gap(objective, best_bound).max(0.0);
                return Ok(MilpSolution {
                    status: if gap <= 1e-12 {
                        MilpStatus::Optimal
                    } else {
                        MilpStatus::GapFeasible
                    },
                    x,
                    objective,
                    best_bound,
                    gap,
                    nodes,
                    lp_iterations,
                });
            }
        }
        nodes += 1;
        if options.max_nodes > 0 && nodes > options.max_nodes {
            return Err(SolveError::Numerical(format!(
                "node limit {} exceeded",
                options.max_nodes
            )));
        }

        // Apply this node's fixings on top of the base bounds.
        for &b in &milp.binaries {
            lp.lower[b] = milp.lp.lower[b];
            lp.upper[b] = milp.lp.upper[b];
        }
        for &(col, val) in &node.fixings {
            lp.lower[col] = val;
            lp.upper[col] = val;
        }

        let relax = simplex_solve_with(&lp, &options.simplex)?;
        lp_iterations += relax.iterations;
        match relax.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(SolveError::UnboundedRelaxation),
            LpStatus::Optimal => {}
        }
        if let Some((inc_obj, _)) = &incumbent {
            if relax.objective >= *inc_obj - 1e-12 * (1.0 + inc_obj.abs()) {
                continue; // cannot improve
            }
        }

        // Most fractional binary, ties by lowest index.
        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = INTEGRALITY_TOL;
        for &b in &milp.binaries {
            let v = relax.x[b];
            let frac = (v - v.round()).abs();
            if frac > best_frac {
                best_frac = frac;
                branch = Some((b, v));
            }
        }

        let push_children = |col: usize, bound: f64, next_id: &mut usize,
                                 heap: &mut BinaryHeap<Node>| {
            for val in [0.0, 1.0] {
                let mut fixings = node.fixings.clone();
                fixings.push((col, val));
                heap.push(Node {
                    bound,
                    id: *next_id,
                    fixings,
                });
                *next_id += 1;
            }
        };

        match branch {
            None => {
                // Integral relaxation. Accept it as an incumbent only when
                // every binary is pinned by bounds: a binary that merely
                // lands within tolerance of 0/1 can still exploit the big-M
                // linearization rows by the tolerance amount, so unpinned
                // nodes get a repair solve at the rounded assignment and
                // the subtree is partitioned further.
                let unfixed = milp
                    .binaries
                    .iter()
                    .copied()
                    .find(|&b| lp.lower[b] < lp.upper[b]);
                match unfixed {
                    None => {
                        let mut x = relax.x.clone();
                        for &b in &milp.binaries {
                            x[b] = x[b].round();
                        }
                        let better = match &incumbent {
                            Some((obj, _)) => relax.objective < *obj,
                            None => true,
                        };
                        if better {
                            incumbent = Some((relax.objective, x));
                        }
                    }
                    Some(col) => {
                        let mut repair = lp.clone();
                        for &b in &milp.binaries {
                            let v = relax.x[b].round();
                            repair.lower[b] = v;
                            repair.upper[b] = v;
                        }
                        let rsol = simplex_solve_with(&repair, &options.simplex)?;
                        lp_iterations += rsol.iterations;
                        if rsol.status == LpStatus::Optimal {
                            let better = match &incumbent {
                                Some((obj, _)) => rsol.objective < *obj,
                                None => true,
                            };
                            if better {
                                let mut x = rsol.x.clone();
                                for &b in &milp.binaries {
                                    x[b] = x[b].round();
                                }
                                incumbent = Some((rsol.objective, x));
                            }
                        }
                        push_children(col, relax.objective, &mut next_id, &mut heap);
                    }
                }
            }
            Some((col, _)) => {
                push_children(col, relax.objective, &mut next_id, &mut heap);
            }
        }
    }

    match incumbent {
        Some((objective, x)) => Ok(MilpSolution {
            status: MilpStatus::Optimal,
            x,
            objective,
            best_bound: objective,
            gap: 0.0,
            nodes,
            lp_iterations,
        }),
        None => Err(SolveError::MilpInfeasible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::problem::LpProblem;
    use crate::solver::sparse::SparseMatrix;

    fn knapsack(values: &[f64], weights: &[f64], capacity: f64) -> MilpProblem {
        let n = values.len();
        let mut a = SparseMatrix::new(n);
        a.push_row(&weights.iter().cloned().enumerate().collect::<Vec<_>>());
        let lp = LpProblem {
            cost: values.iter().map(|v| -v).collect(),
            a_ineq: a,
            b_ineq: vec![capacity],
            a_eq: SparseMatrix::new(n),
            b_eq: vec![],
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        };
        MilpProblem {
            lp,
            binaries: (0..n).collect(),
            var_names: (0..n).map(|i| format!("x{i}")).collect(),
            ineq_names: vec!["cap".into()],
            eq_names: vec![],
            mipgap: 0.0,
        }
    }

    fn enumerate_best(milp: &MilpProblem) -> Option<f64> {
        let n = milp.binaries.len();
        let mut best: Option<f64> = None;
        'outer: for mask in 0..(1u64 << n) {
            let mut x = vec![0.0; milp.lp.num_vars()];
            for (i, &col) in milp.binaries.iter().enumerate() {
                x[col] = ((mask >> i) & 1) as f64;
            }
            // Feasibility (binary-only problems in these tests).
            for (row, &b) in milp
                .lp
                .a_ineq
                .rows()
                .zip(&milp.lp.b_ineq)
            {
                let lhs: f64 = row.iter().map(|&(c, v)| v * x[c]).sum();
                if lhs > b + 1e-9 {
                    continue 'outer;
                }
            }
            let obj: f64 = milp.lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(match best {
                Some(cur) if cur <= obj => cur,
                _ => obj,
            });
        }
        best
    }

    #[test]
    fn five_item_knapsack_matches_enumeration() {
        let milp = knapsack(
            &[8.0, 5.0, 4.0, 7.0, 6.0],
            &[6.0, 4.0, 3.0, 5.0, 4.0],
            12.0,
        );
        let sol = branch_and_bound(&milp, 0.0).unwrap();
        let best = enumerate_best(&milp).unwrap();
        assert!((sol.objective - best).abs() < 1e-9, "{} vs {best}", sol.objective);
        assert_eq!(sol.status, MilpStatus::Optimal);
    }

    #[test]
    fn fixed_binaries_reduce_to_lp() {
        let mut milp = knapsack(&[3.0, 2.0], &[1.0, 1.0], 2.0);
        milp.lp.lower = vec![1.0, 1.0];
        milp.lp.upper = vec![1.0, 1.0];
        let sol = branch_and_bound(&milp, 0.0).unwrap();
        assert!((sol.objective + 5.0).abs() < 1e-9);
        assert_eq!(sol.nodes, 1);
    }

    #[test]
    fn infeasible_milp_reported() {
        // Two binaries must sum to 3: impossible.
        let mut milp = knapsack(&[1.0, 1.0], &[1.0, 1.0], 10.0);
        let mut eq = SparseMatrix::new(2);
        eq.push_row(&[(0, 1.0), (1, 1.0)]);
        milp.lp.a_eq = eq;
        milp.lp.b_eq = vec![3.0];
        milp.eq_names = vec!["sum3".into()];
        match branch_and_bound(&milp, 0.0) {
            Err(SolveError::MilpInfeasible) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn twelve_binary_randomized_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..8 {
            let n = 12;
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..20.0)).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..10.0)).collect();
            let cap = weights.iter().sum::<f64>() * rng.gen_range(0.3..0.7);
            let milp = knapsack(&values, &weights, cap);
            let sol = branch_and_bound(&milp, 0.0).unwrap();
            let best = enumerate_best(&milp).unwrap();
            assert!(
                (sol.objective - best).abs() < 1e-8,
                "{} vs {best}",
                sol.objective
            );
        }
    }
}
