//! Exact transportation simplex (MODI / u-v method).
//!
//! Starts from a northwest-corner basis (always n + k - 1 cells including
//! degenerate zeros, forming a spanning tree of the bipartite node graph),
//! prices arcs with duals propagated over that tree, and pivots along the
//! unique tree cycle closed by the entering arc. Entering arcs are found by
//! a wrapping block search over the cost matrix (best reduced cost within
//! the current block), which keeps scans short without giving up much pivot
//! quality; after a long run of consecutive degenerate pivots the rule
//! switches to Bland's (first eligible arc, lowest-index leaving cell),
//! which cannot cycle, until flow moves again.

use std::cmp::Ordering;

use super::{ground_cost, CostMatrix, TransportPlan};
use crate::copula::Signature;
use crate::error::{Error, Result};

/// Optimality tolerance on reduced costs. Termination with all reduced
/// costs above -RC_EPS leaves at most RC_EPS of suboptimality because the
/// total flow is one.
const RC_EPS: f64 = 1e-11;

/// Accepted deviation of each signature's total mass from one.
const MASS_TOL: f64 = 1e-9;

/// Earth mover's distance between two signatures of equal dimension, with
/// the optimal plan. Arguments are oriented canonically before solving, so
/// `emd_exact(a, b)` and `emd_exact(b, a)` return bit-identical costs and
/// mutually transposed plans.
pub fn emd_exact(a: &Signature, b: &Signature) -> Result<TransportPlan> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    if a.canonical_cmp(b) == Ordering::Greater {
        let plan = emd_oriented(b, a)?;
        return Ok(plan.transposed());
    }
    emd_oriented(a, b)
}

fn emd_oriented(a: &Signature, b: &Signature) -> Result<TransportPlan> {
    let cost = ground_cost(a, b)?;
    solve(&a.weights(), &b.weights(), &cost)
}

pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &CostMatrix) -> Result<TransportPlan> {
    let sa: f64 = supply.iter().sum();
    let sb: f64 = demand.iter().sum();
    if (sa - 1.0).abs() > MASS_TOL || (sb - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidSignature(format!(
            "masses {sa} and {sb} are not normalized to 1"
        )));
    }
    let a: Vec<f64> = supply.iter().map(|w| w / sa).collect();
    let b: Vec<f64> = demand.iter().map(|w| w / sb).collect();
    let mut solver = Solver::new(&a, &b, cost);
    solver.run()?;
    solver.into_plan(&a, &b)
}

#[derive(Clone, Copy)]
struct Cell {
    row: u32,
    col: u32,
    flow: f64,
}

struct Solver<'c> {
    n: usize,
    k: usize,
    cost: &'c CostMatrix,
    basis: Vec<Cell>,
    /// basis-cell indices incident to each node (rows 0..n, cols n..n+k)
    adj: Vec<Vec<u32>>,
    u: Vec<f64>,
    v: Vec<f64>,
    visited: Vec<bool>,
    parent_node: Vec<u32>,
    parent_cell: Vec<u32>,
    stack: Vec<u32>,
    next_arc: usize,
    block: usize,
}

impl<'c> Solver<'c> {
    fn new(a: &[f64], b: &[f64], cost: &'c CostMatrix) -> Self {
        let n = a.len();
        let k = b.len();
        let basis = northwest_corner(a, b);
        let mut adj = vec![Vec::new(); n + k];
        for (ci, cell) in basis.iter().enumerate() {
            adj[cell.row as usize].push(ci as u32);
            adj[n + cell.col as usize].push(ci as u32);
        }
        let block = ((n * k) as f64).sqrt().ceil() as usize;
        Solver {
            n,
            k,
            cost,
            basis,
            adj,
            u: vec![0.0; n],
            v: vec![0.0; k],
            visited: vec![false; n + k],
            parent_node: vec![0; n + k],
            parent_cell: vec![0; n + k],
            stack: Vec::with_capacity(n + k),
            next_arc: 0,
            block: block.max(16),
        }
    }

    fn run(&mut self) -> Result<()> {
        let nodes = self.n + self.k;
        let max_pivots = 10_000 + 200 * nodes;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        for _ in 0..max_pivots {
            self.compute_duals()?;
            let entering = if bland {
                self.find_entering_bland()
            } else {
                self.find_entering_block()
            };
            let Some((ei, ej)) = entering else {
                return Ok(());
            };
            let theta = self.pivot(ei, ej)?;
            if theta == 0.0 {
                degenerate_run += 1;
                if degenerate_run > 2 * nodes {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
        Err(Error::Solver(
            "transportation simplex exceeded its pivot budget".into(),
        ))
    }

    /// Duals satisfying u_i + v_j = c_ij on every basic cell, anchored at
    /// u_0 = 0 and propagated over the basis tree.
    fn compute_duals(&mut self) -> Result<()> {
        let n = self.n;
        self.visited.fill(false);
        self.visited[0] = true;
        self.u[0] = 0.0;
        self.stack.clear();
        self.stack.push(0);
        let mut seen = 1;
        while let Some(node) = self.stack.pop() {
            let node = node as usize;
            for idx in &self.adj[node] {
                let cell = self.basis[*idx as usize];
                let (row, col) = (cell.row as usize, cell.col as usize);
                let other = if node < n { n + col } else { row };
                if self.visited[other] {
                    continue;
                }
                let c = self.cost.get(row, col);
                if node < n {
                    self.v[col] = c - self.u[row];
                } else {
                    self.u[row] = c - self.v[col];
                }
                self.visited[other] = true;
                seen += 1;
                self.stack.push(other as u32);
            }
        }
        if seen != n + self.k {
            return Err(Error::Solver("basis does not span the node graph".into()));
        }
        Ok(())
    }

    /// Most negative reduced cost within the first block (wrapping scan
    /// resumed where the last search stopped) that contains any negative
    /// arc. Deterministic: ties keep the earliest arc in scan order.
    fn find_entering_block(&mut self) -> Option<(usize, usize)> {
        let arcs = self.n * self.k;
        let mut best = -RC_EPS;
        let mut best_arc = None;
        let mut pos = self.next_arc;
        let mut scanned = 0;
        while scanned < arcs {
            let stop = (scanned + self.block).min(arcs);
            while scanned < stop {
                let i = pos / self.k;
                let j = pos % self.k;
                let rc = self.cost.get(i, j) - self.u[i] - self.v[j];
                if rc < best {
                    best = rc;
                    best_arc = Some(pos);
                }
                pos += 1;
                if pos == arcs {
                    pos = 0;
                }
                scanned += 1;
            }
            if let Some(arc) = best_arc {
                self.next_arc = pos;
                return Some((arc / self.k, arc % self.k));
            }
        }
        None
    }

    fn find_entering_bland(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in 0..self.k {
                if self.cost.get(i, j) - self.u[i] - self.v[j] < -RC_EPS {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Brings arc (ei, ej) into the basis: finds the unique tree path from
    /// row node ei to column node ej, alternates signs along the closed
    /// cycle, moves theta = min flow over the minus cells, and swaps the
    /// limiting cell out. Returns theta.
    fn pivot(&mut self, ei: usize, ej: usize) -> Result<f64> {
        let n = self.n;
        let target = n + ej;
        self.visited.fill(false);
        self.visited[ei] = true;
        self.stack.clear();
        self.stack.push(ei as u32);
        'search: while let Some(node) = self.stack.pop() {
            let node = node as usize;
            for idx in &self.adj[node] {
                let cell = self.basis[*idx as usize];
                let (row, col) = (cell.row as usize, cell.col as usize);
                let other = if node < n { n + col } else { row };
                if self.visited[other] {
                    continue;
                }
                self.visited[other] = true;
                self.parent_node[other] = node as u32;
                self.parent_cell[other] = *idx;
                if other == target {
                    break 'search;
                }
                self.stack.push(other as u32);
            }
        }
        if !self.visited[target] {
            return Err(Error::Solver("entering arc closes no cycle".into()));
        }

        // Path cells from ei to ej; odd positions (0-based) share a column
        // with their predecessor. Walking from the entering arc, cells at
        // even path index lose flow, odd index gain.
        let mut path = Vec::new();
        let mut node = target;
        while node != ei {
            path.push(self.parent_cell[node]);
            node = self.parent_node[node] as usize;
        }
        path.reverse();

        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &ci) in path.iter().enumerate() {
            if pos % 2 != 0 {
                continue;
            }
            let cell = self.basis[ci as usize];
            let replace = match leaving {
                None => true,
                Some(cur) => {
                    let best = self.basis[cur];
                    cell.flow < theta
                        || (cell.flow == theta
                            && (cell.row, cell.col) < (best.row, best.col))
                }
            };
            if replace {
                theta = cell.flow;
                leaving = Some(ci as usize);
            }
        }
        let leave_idx = leaving.ok_or_else(|| Error::Solver("cycle has no minus cell".into()))?;

        for (pos, &ci) in path.iter().enumerate() {
            let cell = &mut self.basis[ci as usize];
            if pos % 2 == 0 {
                cell.flow -= theta;
            } else {
                cell.flow += theta;
            }
        }

        let old = self.basis[leave_idx];
        self.detach(old.row as usize, n + old.col as usize, leave_idx as u32);
        self.basis[leave_idx] = Cell {
            row: ei as u32,
            col: ej as u32,
            flow: theta,
        };
        self.adj[ei].push(leave_idx as u32);
        self.adj[target].push(leave_idx as u32);
        Ok(theta)
    }

    fn detach(&mut self, node_a: usize, node_b: usize, ci: u32) {
        for node in [node_a, node_b] {
            let list = &mut self.adj[node];
            let at = list.iter().position(|&x| x == ci).expect("cell in adjacency");
            list.swap_remove(at);
        }
    }

    fn into_plan(self, a: &[f64], b: &[f64]) -> Result<TransportPlan> {
        let mut cost_sum = 0.0;
        let mut comp = 0.0;
        let mut entries = Vec::with_capacity(self.basis.len());
        for cell in &self.basis {
            debug_assert!(cell.flow >= 0.0);
            if cell.flow > 0.0 {
                let term = cell.flow * self.cost.get(cell.row as usize, cell.col as usize);
                let t = cost_sum + term;
                comp += if cost_sum.abs() >= term.abs() {
                    (cost_sum - t) + term
                } else {
                    (term - t) + cost_sum
                };
                cost_sum = t;
                entries.push((cell.row, cell.col, cell.flow));
            }
        }
        let plan = TransportPlan::new(self.n, self.k, entries, cost_sum + comp);
        let rows = plan.row_sums();
        let cols = plan.col_sums();
        for (i, &w) in a.iter().enumerate() {
            if (rows[i] - w).abs() > 1e-9 {
                return Err(Error::Solver(format!(
                    "plan violates source marginal {i} by {}",
                    (rows[i] - w).abs()
                )));
            }
        }
        for (j, &w) in b.iter().enumerate() {
            if (cols[j] - w).abs() > 1e-9 {
                return Err(Error::Solver(format!(
                    "plan violates sink marginal {j} by {}",
                    (cols[j] - w).abs()
                )));
            }
        }
        Ok(plan)
    }
}

/// Northwest-corner initial basis: exactly n + k - 1 cells, padding with
/// degenerate zero-flow cells when a supply and a demand exhaust together.
fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<Cell> {
    let n = a.len();
    let k = b.len();
    let mut ra = a.to_vec();
    let mut rb = b.to_vec();
    let mut cells = Vec::with_capacity(n + k - 1);
    let (mut i, mut j) = (0usize, 0usize);
    for _ in 0..n + k - 1 {
        let f = ra[i].min(rb[j]);
        cells.push(Cell {
            row: i as u32,
            col: j as u32,
            flow: f,
        });
        ra[i] -= f;
        rb[j] -= f;
        if i + 1 == n && j + 1 == k {
            break;
        }
        if ra[i] == 0.0 && i + 1 < n {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{monotone_signature, Signature};

    fn sig(res: usize, cells: &[(usize, usize, f64)]) -> Signature {
        let m = res as f64;
        let atoms = cells
            .iter()
            .map(|&(x, y, w)| (vec![(x as f64 + 0.5) / m, (y as f64 + 0.5) / m], w))
            .collect();
        Signature::new(2, res, atoms).unwrap()
    }

    #[test]
    fn northwest_corner_has_full_basis() {
        let cells = northwest_corner(&[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(cells.len(), 3);
        let total: f64 = cells.iter().map(|c| c.flow).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_signatures_cost_exactly_zero() {
        let s = sig(4, &[(0, 1, 0.25), (1, 3, 0.5), (3, 0, 0.25)]);
        let plan = emd_exact(&s, &s).unwrap();
        assert_eq!(plan.cost(), 0.0);
    }

    #[test]
    fn two_atom_shift_is_the_gap_distance() {
        // all mass moves one cell to the right: distance 1/4
        let a = sig(4, &[(0, 0, 1.0)]);
        let b = sig(4, &[(1, 0, 1.0)]);
        let plan = emd_exact(&a, &b).unwrap();
        assert!((plan.cost() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn comonotone_vs_countermonotone_at_m2() {
        // every pairing of the two diagonal and two antidiagonal atoms costs
        // 1/2, so any feasible plan costs exactly 1/2
        let a = monotone_signature(2, 2, &[1, 1]).unwrap();
        let b = monotone_signature(2, 2, &[1, -1]).unwrap();
        let plan = emd_exact(&a, &b).unwrap();
        assert!((plan.cost() - 0.5).abs() < 1e-12);
        assert_eq!(plan.rows(), 2);
        assert_eq!(plan.cols(), 2);
    }

    #[test]
    fn symmetry_is_bit_identical() {
        let a = sig(8, &[(0, 1, 0.125), (2, 7, 0.5), (5, 5, 0.375)]);
        let b = sig(8, &[(1, 1, 0.25), (6, 2, 0.25), (7, 7, 0.5)]);
        let ab = emd_exact(&a, &b).unwrap();
        let ba = emd_exact(&b, &a).unwrap();
        assert_eq!(ab.cost().to_bits(), ba.cost().to_bits());
        let mut transposed: Vec<_> = ba.entries().iter().map(|&(i, j, f)| (j, i, f)).collect();
        transposed.sort_unstable_by_key(|&(i, j, _)| (i, j));
        assert_eq!(ab.entries(), transposed.as_slice());
    }

    #[test]
    fn plan_marginals_match_weights() {
        let a = sig(8, &[(0, 0, 0.2), (3, 4, 0.3), (7, 7, 0.5)]);
        let b = sig(8, &[(1, 1, 0.6), (6, 6, 0.4)]);
        let plan = emd_exact(&a, &b).unwrap();
        let rows = plan.row_sums();
        let cols = plan.col_sums();
        for (got, want) in rows.iter().zip(a.weights()) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in cols.iter().zip(b.weights()) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(plan.entries().len() <= a.len() + b.len() - 1);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = sig(4, &[(0, 0, 1.0)]);
        let b = Signature::new(3, 4, vec![(vec![0.125, 0.125, 0.125], 1.0)]).unwrap();
        assert!(matches!(
            emd_exact(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
