//! Optimal transport between signatures.
//!
//! The distance is the minimum-cost flow between two normalized atom sets
//! under the Euclidean ground cost: minimize sum c_ij f_ij subject to
//! f >= 0, row sums bounded by the source weights, column sums bounded by
//! the sink weights, and total flow equal to the smaller total mass. Both
//! sides carry mass one here, so every constraint binds and the program is
//! the balanced transportation problem; its optimum is the 1-Wasserstein
//! distance and in particular a true metric on signatures over a common
//! grid.
//!
//! Two solvers are provided: an exact transportation simplex
//! ([`emd_exact`]) and an entropically regularized log-domain Sinkhorn
//! iteration ([`emd_sinkhorn`]) whose cost approaches the exact value from
//! above as epsilon shrinks.

mod exact;
mod sinkhorn;

pub use exact::emd_exact;
pub use sinkhorn::{emd_sinkhorn, SinkhornOutcome, SinkhornParams};

use crate::copula::Signature;
use crate::error::{Error, Result};

/// Dense pairwise ground-cost matrix between atom positions.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    /// Largest entry; an upper bound on any transport cost between the two
    /// atom sets.
    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Euclidean distances between all atom pairs of two signatures on grids of
/// equal dimension.
pub fn ground_cost(a: &Signature, b: &Signature) -> Result<CostMatrix> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let rows = a.len();
    let cols = b.len();
    let mut values = Vec::with_capacity(rows * cols);
    for pa in a.atoms() {
        for pb in b.atoms() {
            let d2: f64 = pa
                .position
                .iter()
                .zip(&pb.position)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            values.push(d2.sqrt());
        }
    }
    Ok(CostMatrix { values, rows, cols })
}

/// Optimal flow returned by the exact solver. Basic solutions of the
/// transportation problem have at most rows + cols - 1 nonzero flows, so the
/// plan is stored sparsely as (source atom, sink atom, flow) triples.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, f64)>,
    cost: f64,
}

impl TransportPlan {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total transport cost, i.e. the earth mover's distance.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Nonzero flows as (source, sink, amount), sorted by (source, sink).
    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.rows];
        for &(i, _, f) in &self.entries {
            sums[i as usize] += f;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for &(_, j, f) in &self.entries {
            sums[j as usize] += f;
        }
        sums
    }

    pub(crate) fn new(rows: usize, cols: usize, mut entries: Vec<(u32, u32, f64)>, cost: f64) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        TransportPlan {
            rows,
            cols,
            entries,
            cost,
        }
    }

    pub(crate) fn transposed(self) -> Self {
        let entries = self
            .entries
            .into_iter()
            .map(|(i, j, f)| (j, i, f))
            .collect();
        TransportPlan::new(self.cols, self.rows, entries, self.cost)
    }
}
