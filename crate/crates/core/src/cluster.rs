//! Agglomerative clustering over precomputed distance matrices.
//!
//! Implements the Lance-Williams update for single, complete, and average
//! linkage. These three linkages are reducible, so merge heights are
//! nondecreasing and cutting the tree at a count k is well defined.

use crate::error::{Error, Result};

/// Symmetric nonnegative matrix with a zero diagonal and one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    entries: Vec<f64>,
    n: usize,
}

impl DistanceMatrix {
    /// Validates shape, symmetry (within 1e-12), zero diagonal, and
    /// nonnegative finite entries.
    pub fn new(labels: Vec<String>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "distance matrix needs at least 2 rows".into(),
            ));
        }
        if entries.len() != n {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: n,
            });
        }
        let mut flat = vec![0.0; n * n];
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Ragged {
                    row: i,
                    got: row.len(),
                    expected: n,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                flat[i * n + j] = v;
            }
        }
        for i in 0..n {
            if flat[i * n + i] != 0.0 {
                return Err(Error::Degenerate(format!(
                    "diagonal entry ({i},{i}) is {}, expected 0",
                    flat[i * n + i]
                )));
            }
            for j in i + 1..n {
                if (flat[i * n + j] - flat[j * n + i]).abs() > 1e-12 {
                    return Err(Error::Degenerate(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            labels,
            entries: flat,
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.entries[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::InvalidParameter(format!(
                "unknown linkage '{other}' (expected single, complete, or average)"
            ))),
        }
    }
}

/// One merge step: clusters are numbered like leaves 0..n-1, then each merge
/// creates cluster n + step. `size` is the leaf count of the new cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n_leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(n_leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        if n_leaves < 2 || merges.len() != n_leaves - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} merges do not assemble {n_leaves} leaves",
                merges.len()
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for m in &merges {
            if !m.height.is_finite() || m.height < prev - 1e-12 {
                return Err(Error::Degenerate(format!(
                    "merge heights are not nondecreasing: {} after {prev}",
                    m.height
                )));
            }
            prev = m.height;
        }
        Ok(Dendrogram { n_leaves, merges })
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }
}

/// Bottom-up clustering of the matrix under the given linkage. At every
/// step the closest active pair merges; ties break toward the smallest
/// cluster index (then the smallest partner index), so the output is a
/// deterministic function of the input.
pub fn agglomerate(matrix: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = matrix.len();
    // dist[a][b] between active clusters, indexed by cluster id
    let total = 2 * n - 1;
    let mut dist = vec![f64::INFINITY; total * total];
    for i in 0..n {
        for j in 0..n {
            dist[i * total + j] = matrix.get(i, j);
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; total];
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a * total + b];
                if d < best_d || (d == best_d && (a, b) < best) {
                    best_d = d;
                    best = (a, b);
                }
            }
        }
        let (a, b) = best;
        let new = n + step;
        sizes[new] = sizes[a] + sizes[b];
        merges.push(Merge {
            left: a,
            right: b,
            height: best_d,
            size: sizes[new],
        });
        active.retain(|&c| c != a && c != b);
        for &c in &active {
            let da = dist[a * total + c];
            let db = dist[b * total + c];
            let d = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
                Linkage::Average => {
                    (sizes[a] as f64 * da + sizes[b] as f64 * db) / sizes[new] as f64
                }
            };
            dist[new * total + c] = d;
            dist[c * total + new] = d;
        }
        active.push(new);
    }
    Dendrogram::new(n, merges)
}

/// Leaf assignments after undoing the last k-1 merges. Cluster ids are
/// renumbered 0..k-1 in order of first appearance by leaf index.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let n = dendrogram.n_leaves();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cannot cut {n} leaves into {k} clusters"
        )));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step, m) in dendrogram.merges().iter().take(n - k).enumerate() {
        let target = n + step;
        let ra = find(&mut parent, m.left);
        let rb = find(&mut parent, m.right);
        parent[ra] = target;
        parent[rb] = target;
    }
    let mut relabel = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        let next = relabel.len();
        out.push(*relabel.entry(root).or_insert(next));
    }
    Ok(out)
}

/// Adjusted Rand index between two flat partitions of the same items.
/// Identical partitions (including the degenerate all-singletons and
/// single-cluster cases, where the raw index is undefined) score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter(
            "adjusted Rand index needs at least 2 items".into(),
        ));
    }
    let n = a.len();
    let mut table = std::collections::HashMap::<(usize, usize), f64>::new();
    let mut rows = std::collections::HashMap::<usize, f64>::new();
    let mut cols = std::collections::HashMap::<usize, f64>::new();
    for i in 0..n {
        *table.entry((a[i], b[i])).or_insert(0.0) += 1.0;
        *rows.entry(a[i]).or_insert(0.0) += 1.0;
        *cols.entry(b[i]).or_insert(0.0) += 1.0;
    }
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| c2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| c2(v)).sum();
    let pairs = c2(n as f64);
    let expected = sum_a * sum_b / pairs;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-12 {
        // both partitions all-singletons or both one cluster: identical
        Ok(1.0)
    } else {
        Ok((index - expected) / (max - expected))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(entries: &[&[f64]]) -> DistanceMatrix {
        let labels = (0..entries.len()).map(|i| format!("p{i}")).collect();
        DistanceMatrix::new(labels, entries.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn rejects_asymmetry_and_bad_diagonal() {
        let labels = vec!["a".into(), "b".into()];
        assert!(DistanceMatrix::new(
            labels.clone(),
            vec![vec![0.0, 1.0], vec![2.0, 0.0]]
        )
        .is_err());
        assert!(DistanceMatrix::new(labels, vec![vec![0.5, 1.0], vec![1.0, 0.0]]).is_err());
    }

    // Two tight pairs {0,1} and {2,3} far apart; every linkage recovers them.
    #[test]
    fn two_clear_clusters() {
        let m = matrix(&[
            &[0.0, 1.0, 10.0, 9.0],
            &[1.0, 0.0, 9.0, 10.0],
            &[10.0, 9.0, 0.0, 2.0],
            &[9.0, 10.0, 2.0, 0.0],
        ]);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let d = agglomerate(&m, linkage).unwrap();
            let parts = cut(&d, 2).unwrap();
            assert_eq!(parts, vec![0, 0, 1, 1], "{linkage:?}");
        }
    }

    // Hand-traced average linkage on a 3-point instance: merge (0,1) at 1,
    // then d({0,1},2) = (4 + 6)/2 = 5.
    #[test]
    fn average_linkage_heights() {
        let m = matrix(&[&[0.0, 1.0, 4.0], &[1.0, 0.0, 6.0], &[4.0, 6.0, 0.0]]);
        let d = agglomerate(&m, Linkage::Average).unwrap();
        assert_eq!(d.merges()[0].left, 0);
        assert_eq!(d.merges()[0].right, 1);
        assert_eq!(d.merges()[0].height, 1.0);
        assert_eq!(d.merges()[1].height, 5.0);
        assert_eq!(d.merges()[1].size, 3);
    }

    #[test]
    fn single_and_complete_disagree_on_chains() {
        // chain 0-1-2 with d(0,1)=1, d(1,2)=1.5, d(0,2)=2.4: single merges
        // the chain at 1.5, complete at 2.4
        let m = matrix(&[&[0.0, 1.0, 2.4], &[1.0, 0.0, 1.5], &[2.4, 1.5, 0.0]]);
        let s = agglomerate(&m, Linkage::Single).unwrap();
        let c = agglomerate(&m, Linkage::Complete).unwrap();
        assert_eq!(s.merges()[1].height, 1.5);
        assert_eq!(c.merges()[1].height, 2.4);
    }

    #[test]
    fn ties_break_to_smallest_index() {
        // equilateral: first merge must be (0,1)
        let m = matrix(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let d = agglomerate(&m, Linkage::Single).unwrap();
        assert_eq!((d.merges()[0].left, d.merges()[0].right), (0, 1));
    }

    #[test]
    fn cut_bounds_are_checked() {
        let m = matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let d = agglomerate(&m, Linkage::Single).unwrap();
        assert!(cut(&d, 0).is_err());
        assert!(cut(&d, 3).is_err());
        assert_eq!(cut(&d, 1).unwrap(), vec![0, 0]);
        assert_eq!(cut(&d, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn ari_matches_pair_counting_oracle() {
        let cases: [(&[usize], &[usize]); 4] = [
            (&[0, 0, 1, 1], &[1, 1, 0, 0]),
            (&[0, 0, 1, 1], &[0, 0, 0, 1]),
            (&[0, 0, 1, 1], &[0, 0, 1, 2]),
            (&[0, 1, 2, 3], &[0, 0, 1, 1]),
        ];
        for (a, b) in cases {
            let got = adjusted_rand_index(a, b).unwrap();
            let want = copula_transport_oracle::ari_pairs(a, b);
            assert!((got - want).abs() < 1e-12, "{a:?} vs {b:?}: {got} != {want}");
        }
    }

    #[test]
    fn ari_known_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        let zero = adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 0, 1]).unwrap();
        assert!(zero.abs() < 1e-12, "got {zero}");
        let partial = adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]).unwrap();
        assert!((partial - 4.0 / 7.0).abs() < 1e-12, "got {partial}");
        assert_eq!(
            adjusted_rand_index(&[0, 1, 2], &[5, 9, 7]).unwrap(),
            1.0
        );
    }

    #[test]
    fn ari_is_symmetric() {
        let a = [0, 0, 1, 2, 2, 1];
        let b = [0, 1, 1, 2, 0, 2];
        assert_eq!(
            adjusted_rand_index(&a, &b).unwrap(),
            adjusted_rand_index(&b, &a).unwrap()
        );
    }
}
