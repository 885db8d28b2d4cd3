//! Panels, empirical copula transforms, and grid signatures.
//!
//! A panel holds a multivariate time series as a dense T x d matrix. The
//! empirical copula transform replaces every column by its normalized ranks
//! R/T (average ranks on ties), which makes everything downstream invariant
//! under strictly increasing per-column transformations of the raw data. The
//! transformed sample lives in (0,1]^d and is summarized by a `Signature`: a
//! sparse histogram over the regular m^d grid whose atoms sit at cell centers
//! and whose weights sum to one.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::synth::{self, PatternKind, PatternSpec};

/// Hard cap on atoms per signature and on dense grid enumeration. Keeps cost
/// matrices (atoms^2 floats) within a few hundred MB in the worst case.
pub const SPARSE_BUDGET: usize = 65_536;

/// Cells are upper-closed intervals ((k)/m, (k+1)/m]. The slack below shifts
/// the boundary test so that rank-grid values r/T never misclassify by one
/// ulp; it only matters for coordinates within 1e-9 of a cell edge, which the
/// rank grid cannot produce for any realistic T and m.
const BOUNDARY_SLACK: f64 = 1e-9;

/// Dense row-major T x d matrix of raw observations. Rows are time points,
/// columns are channels. Construction rejects non-finite values and shapes
/// smaller than 2 x 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    series_id: Option<String>,
}

impl Panel {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows < 2 || ncols < 1 {
            return Err(Error::PanelShape {
                rows: nrows,
                cols: ncols,
            });
        }
        let mut values = Vec::with_capacity(nrows * ncols);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Ragged {
                    row: t,
                    got: row.len(),
                    expected: ncols,
                });
            }
            for (i, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: t, col: i });
                }
                values.push(x);
            }
        }
        Ok(Panel {
            values,
            rows: nrows,
            cols: ncols,
            series_id: None,
        })
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, Vec::len);
        if nrows < 2 || ncols < 1 {
            return Err(Error::PanelShape {
                rows: nrows,
                cols: ncols,
            });
        }
        for (i, c) in cols.iter().enumerate() {
            if c.len() != nrows {
                return Err(Error::Ragged {
                    row: i,
                    got: c.len(),
                    expected: nrows,
                });
            }
        }
        let mut values = Vec::with_capacity(nrows * ncols);
        for t in 0..nrows {
            for (i, c) in cols.iter().enumerate() {
                if !c[t].is_finite() {
                    return Err(Error::NonFinite { row: t, col: i });
                }
                values.push(c[t]);
            }
        }
        Ok(Panel {
            values,
            rows: nrows,
            cols: ncols,
            series_id: None,
        })
    }

    pub fn with_series_id(mut self, id: impl Into<String>) -> Self {
        self.series_id = Some(id.into());
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn series_id(&self) -> Option<&str> {
        self.series_id.as_deref()
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.cols + i]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.cols..(t + 1) * self.cols]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.get(t, i)).collect()
    }

    /// Column-wise concatenation of two panels over the same time index,
    /// used to form the stacked sample behind the TDC.
    pub fn hstack(&self, other: &Panel) -> Result<Panel> {
        if self.rows != other.rows {
            return Err(Error::LengthMismatch {
                left: self.rows,
                right: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut values = Vec::with_capacity(self.rows * cols);
        for t in 0..self.rows {
            values.extend_from_slice(self.row(t));
            values.extend_from_slice(other.row(t));
        }
        Ok(Panel {
            values,
            rows: self.rows,
            cols,
            series_id: None,
        })
    }
}

/// Rank-transformed sample with entries in (0,1]. Produced by
/// [`empirical_copula_transform`]; can also be reloaded from disk, in which
/// case only the range is validated.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaSample {
    points: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl CopulaSample {
    pub fn from_points(points: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 1 || points.len() != rows * cols {
            return Err(Error::PanelShape { rows, cols });
        }
        for (idx, &u) in points.iter().enumerate() {
            if !u.is_finite() || u <= 0.0 || u > 1.0 {
                return Err(Error::NonFinite {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(CopulaSample { points, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.points[t * self.cols + i]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.points[t * self.cols..(t + 1) * self.cols]
    }
}

/// Average ranks (1-based, ties get the mean of the ranks they span).
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // mean of ranks i+1 ..= j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Replaces every column by its normalized average ranks R^t_i / T. The
/// output depends on the data only through the column orderings, so any
/// strictly increasing per-column transform of the input leaves it
/// bit-identical.
pub fn empirical_copula_transform(panel: &Panel) -> CopulaSample {
    let t = panel.rows();
    let d = panel.cols();
    let mut points = vec![0.0; t * d];
    for i in 0..d {
        let ranks = average_ranks(&panel.column(i));
        for (row, &r) in ranks.iter().enumerate() {
            points[row * d + i] = r / t as f64;
        }
    }
    CopulaSample {
        points,
        rows: t,
        cols: d,
    }
}

/// One weighted grid-cell center of a signature.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub position: Vec<f64>,
    pub weight: f64,
}

/// Sparse normalized histogram over the regular m^d grid of (0,1)^d. Atoms
/// are cell centers ((k + 0.5)/m per axis) with positive weights summing to
/// one within 1e-12; they are stored sorted by cell index, so structurally
/// equal signatures compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    dimension: usize,
    resolution: usize,
    atoms: Vec<Atom>,
}

impl Signature {
    /// Validates and canonicalizes raw atoms: positions must sit on grid
    /// centers (within 1e-12, then snapped exactly), be distinct, and carry
    /// positive weights with a compensated sum within 1e-12 of one.
    pub fn new(dimension: usize, resolution: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if dimension < 1 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidSignature("no atoms".into()));
        }
        if atoms.len() > SPARSE_BUDGET {
            return Err(Error::SparseBudget {
                cells: atoms.len() as u128,
                budget: SPARSE_BUDGET,
            });
        }
        let m = resolution as f64;
        let mut keyed: Vec<(Vec<usize>, Atom)> = Vec::with_capacity(atoms.len());
        for (position, weight) in atoms {
            if position.len() != dimension {
                return Err(Error::InvalidSignature(format!(
                    "atom has {} coordinates, expected {dimension}",
                    position.len()
                )));
            }
            if !weight.is_finite() || weight <= 0.0 {
                return Err(Error::InvalidSignature(format!(
                    "atom weight {weight} is not positive"
                )));
            }
            let mut cell = Vec::with_capacity(dimension);
            let mut snapped = Vec::with_capacity(dimension);
            for &c in &position {
                if !c.is_finite() {
                    return Err(Error::InvalidSignature("non-finite coordinate".into()));
                }
                let k = (c * m - 0.5).round();
                let center = (k + 0.5) / m;
                if k < 0.0 || k >= m || (c - center).abs() > 1e-12 {
                    return Err(Error::InvalidSignature(format!(
                        "coordinate {c} is not a grid center at resolution {resolution}"
                    )));
                }
                cell.push(k as usize);
                snapped.push(center);
            }
            keyed.push((
                cell,
                Atom {
                    position: snapped,
                    weight,
                },
            ));
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in keyed.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidSignature(format!(
                    "duplicate atom at cell {:?}",
                    pair[0].0
                )));
            }
        }
        let atoms: Vec<Atom> = keyed.into_iter().map(|(_, a)| a).collect();
        let total = compensated_sum(atoms.iter().map(|a| a.weight));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSignature(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Signature {
            dimension,
            resolution,
            atoms,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Total order used to orient EMD arguments canonically; `Equal` implies
    /// structural equality.
    pub(crate) fn canonical_cmp(&self, other: &Signature) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        self.dimension
            .cmp(&other.dimension)
            .then(self.resolution.cmp(&other.resolution))
            .then(self.atoms.len().cmp(&other.atoms.len()))
            .then_with(|| {
                for (a, b) in self.atoms.iter().zip(&other.atoms) {
                    for (x, y) in a.position.iter().zip(&b.position) {
                        match x.total_cmp(y) {
                            Ordering::Equal => {}
                            ord => return ord,
                        }
                    }
                    match a.weight.total_cmp(&b.weight) {
                        Ordering::Equal => {}
                        ord => return ord,
                    }
                }
                Ordering::Equal
            })
    }
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    // Neumaier summation; the plain sum of up to 65536 weights can drift
    // past the 1e-12 normalization tolerance on its own.
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn cell_index(u: f64, resolution: usize) -> usize {
    let c = (u * resolution as f64 - BOUNDARY_SLACK).ceil() as isize - 1;
    c.clamp(0, resolution as isize - 1) as usize
}

/// Histograms a copula sample on the m^d grid. Output is sparse: at most
/// min(T, m^d) atoms, each weighted count/T.
pub fn bin_copula(sample: &CopulaSample, resolution: usize) -> Result<Signature> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    let d = sample.cols();
    let t = sample.rows();
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for row in 0..t {
        let cell: Vec<usize> = sample
            .row(row)
            .iter()
            .map(|&u| cell_index(u, resolution))
            .collect();
        *counts.entry(cell).or_insert(0) += 1;
    }
    let m = resolution as f64;
    let atoms: Vec<(Vec<f64>, f64)> = counts
        .into_iter()
        .map(|(cell, count)| {
            let position = cell.iter().map(|&k| (k as f64 + 0.5) / m).collect();
            (position, count as f64 / t as f64)
        })
        .collect();
    Signature::new(d, resolution, atoms)
}

/// Dense uniform signature: every one of the m^d cells carries weight m^-d.
/// Rejected when the cell count exceeds [`SPARSE_BUDGET`].
pub fn independence_signature(dimension: usize, resolution: usize) -> Result<Signature> {
    if dimension < 1 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    let cells = (resolution as u128)
        .checked_pow(dimension as u32)
        .unwrap_or(u128::MAX);
    if cells > SPARSE_BUDGET as u128 {
        return Err(Error::SparseBudget {
            cells,
            budget: SPARSE_BUDGET,
        });
    }
    let n = cells as usize;
    let m = resolution as f64;
    let w = 1.0 / n as f64;
    let mut atoms = Vec::with_capacity(n);
    let mut cell = vec![0usize; dimension];
    loop {
        let position: Vec<f64> = cell.iter().map(|&k| (k as f64 + 0.5) / m).collect();
        atoms.push((position, w));
        // lexicographic odometer, last axis fastest
        let mut axis = dimension;
        loop {
            if axis == 0 {
                return Signature::new(dimension, resolution, atoms);
            }
            axis -= 1;
            cell[axis] += 1;
            if cell[axis] < resolution {
                break;
            }
            cell[axis] = 0;
        }
    }
}

/// Signature of a perfectly monotone relationship: m diagonal cells, each
/// weighted 1/m, ascending on axes with orientation +1 and descending on
/// axes with orientation -1.
pub fn monotone_signature(dimension: usize, resolution: usize, orientation: &[i8]) -> Result<Signature> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if orientation.len() != dimension || dimension < 1 {
        return Err(Error::InvalidParameter(format!(
            "orientation has {} entries, expected {dimension}",
            orientation.len()
        )));
    }
    if orientation.iter().any(|&o| o != 1 && o != -1) {
        return Err(Error::InvalidParameter(
            "orientation entries must be +1 or -1".into(),
        ));
    }
    let m = resolution as f64;
    let w = 1.0 / resolution as f64;
    let atoms = (0..resolution)
        .map(|k| {
            let position = orientation
                .iter()
                .map(|&o| {
                    let idx = if o == 1 { k } else { resolution - 1 - k };
                    (idx as f64 + 0.5) / m
                })
                .collect();
            (position, w)
        })
        .collect();
    Signature::new(dimension, resolution, atoms)
}

/// Default Monte Carlo size for [`signature_from_pattern`]: 100 points per
/// grid cell of the bivariate histogram.
pub fn default_pattern_sample_size(resolution: usize) -> usize {
    100 * resolution * resolution
}

/// Bivariate target signature sampled from a noiseless pattern: draws
/// `sample_size` clean points, rank-transforms, and bins at `resolution`.
/// Deterministic given the seed. Requires sample_size >= 10 m^2 so every
/// populated cell's weight is estimated from a meaningful number of points.
pub fn signature_from_pattern(
    kind: PatternKind,
    resolution: usize,
    sample_size: usize,
    seed: u64,
) -> Result<Signature> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    if sample_size < 10 * resolution * resolution {
        return Err(Error::InvalidParameter(format!(
            "sample_size {sample_size} is below 10*m^2 = {}",
            10 * resolution * resolution
        )));
    }
    let spec = PatternSpec {
        kind,
        noise_level: 0.0,
        sample_size,
        seed,
    };
    let panel = synth::generate_pattern(&spec)?;
    bin_copula(&empirical_copula_transform(&panel), resolution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(values: &[f64]) -> Vec<f64> {
        values.to_vec()
    }

    #[test]
    fn ranks_without_ties() {
        let r = average_ranks(&[3.0, 1.0, 2.0]);
        assert_eq!(r, vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn ranks_average_ties() {
        // values 5,5 share ranks 2 and 3 -> both 2.5
        let r = average_ranks(&[1.0, 5.0, 5.0, 9.0]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn transform_is_rank_over_t() {
        let p = Panel::from_columns(&[col(&[10.0, -3.0, 7.0, 0.5])]).unwrap();
        let u = empirical_copula_transform(&p);
        assert_eq!(
            (0..4).map(|t| u.get(t, 0)).collect::<Vec<_>>(),
            vec![1.0, 0.25, 0.75, 0.5]
        );
    }

    #[test]
    fn transform_invariant_under_increasing_maps() {
        let x = col(&[0.3, -1.2, 2.5, 0.9, -0.4]);
        let y = col(&[1.0, 4.0, 2.0, 5.0, 3.0]);
        let p = Panel::from_columns(&[x.clone(), y.clone()]).unwrap();
        let fx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let fy: Vec<f64> = y.iter().map(|v| v.powi(3) + 10.0 * v).collect();
        let q = Panel::from_columns(&[fx, fy]).unwrap();
        assert_eq!(
            empirical_copula_transform(&p),
            empirical_copula_transform(&q)
        );
    }

    #[test]
    fn panel_rejects_nan_with_location() {
        let err = Panel::from_rows(&[vec![1.0, 2.0], vec![3.0, f64::NAN]]).unwrap_err();
        match err {
            Error::NonFinite { row, col } => assert_eq!((row, col), (1, 1)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn comonotone_pair_bins_on_the_diagonal() {
        // T = 4 comonotone sample at m = 2: cells (0,0) and (1,1), weight 1/2
        // each; ranks 1/4 and 2/4 must land in the lower cell (upper-closed
        // binning), ranks 3/4 and 4/4 in the upper.
        let p = Panel::from_columns(&[col(&[1.0, 2.0, 3.0, 4.0]), col(&[10.0, 20.0, 30.0, 40.0])])
            .unwrap();
        let sig = bin_copula(&empirical_copula_transform(&p), 2).unwrap();
        assert_eq!(sig.len(), 2);
        assert_eq!(sig.atoms()[0].position, vec![0.25, 0.25]);
        assert_eq!(sig.atoms()[1].position, vec![0.75, 0.75]);
        assert_eq!(sig.atoms()[0].weight, 0.5);
        assert_eq!(sig.atoms()[1].weight, 0.5);
    }

    #[test]
    fn binning_matches_monotone_signature_on_comonotone_data() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64).exp2().min(1e300)).collect();
        let p = Panel::from_columns(&[x, y]).unwrap();
        let sig = bin_copula(&empirical_copula_transform(&p), 8).unwrap();
        assert_eq!(sig, monotone_signature(2, 8, &[1, 1]).unwrap());
    }

    #[test]
    fn independence_signature_is_uniform() {
        let sig = independence_signature(2, 4).unwrap();
        assert_eq!(sig.len(), 16);
        assert!(sig.atoms().iter().all(|a| a.weight == 1.0 / 16.0));
        assert_eq!(sig.atoms()[0].position, vec![0.125, 0.125]);
        assert_eq!(sig.atoms()[15].position, vec![0.875, 0.875]);
    }

    #[test]
    fn independence_signature_enforces_budget() {
        // 16^5 = 1_048_576 cells > 65_536
        let err = independence_signature(5, 16).unwrap_err();
        assert!(matches!(err, Error::SparseBudget { .. }));
    }

    #[test]
    fn monotone_signature_orientations() {
        let anti = monotone_signature(2, 4, &[1, -1]).unwrap();
        assert_eq!(anti.atoms()[0].position, vec![0.125, 0.875]);
        assert_eq!(anti.atoms()[3].position, vec![0.875, 0.125]);
        assert!(monotone_signature(2, 4, &[1]).is_err());
        assert!(monotone_signature(2, 4, &[1, 0]).is_err());
    }

    #[test]
    fn signature_rejects_bad_weights() {
        let atoms = vec![(vec![0.25, 0.25], 0.6), (vec![0.75, 0.75], 0.6)];
        assert!(matches!(
            Signature::new(2, 2, atoms),
            Err(Error::InvalidSignature(_))
        ));
        let atoms = vec![(vec![0.25, 0.25], 1.0), (vec![0.25, 0.25], 0.0)];
        assert!(Signature::new(2, 2, atoms).is_err());
    }

    #[test]
    fn signature_rejects_off_grid_positions() {
        let atoms = vec![(vec![0.3, 0.25], 1.0)];
        assert!(matches!(
            Signature::new(2, 2, atoms),
            Err(Error::InvalidSignature(_))
        ));
    }

    #[test]
    fn signature_atoms_are_sorted_canonically() {
        let a = Signature::new(
            2,
            2,
            vec![(vec![0.75, 0.25], 0.5), (vec![0.25, 0.75], 0.5)],
        )
        .unwrap();
        let b = Signature::new(
            2,
            2,
            vec![(vec![0.25, 0.75], 0.5), (vec![0.75, 0.25], 0.5)],
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.atoms()[0].position, vec![0.25, 0.75]);
    }

    #[test]
    fn pattern_signature_is_deterministic_and_normalized() {
        let s1 = signature_from_pattern(PatternKind::Linear, 4, 200, 7).unwrap();
        let s2 = signature_from_pattern(PatternKind::Linear, 4, 200, 7).unwrap();
        assert_eq!(s1, s2);
        // noiseless linear data is comonotone
        assert_eq!(s1, monotone_signature(2, 4, &[1, 1]).unwrap());
    }

    #[test]
    fn pattern_signature_rejects_small_samples() {
        let err = signature_from_pattern(PatternKind::Linear, 8, 100, 7).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    // At m = 8 the central 2x2 block of the circle copula is empty: for
    // u in (3/8, 5/8) the clean circle has |y| >= sqrt(1 - (1/4)^2) ~ 0.968,
    // whose y-rank sits above 7/8 up to O(1/sqrt(M)) fluctuations, far from
    // the (3/8, 5/8] band.
    #[test]
    fn circle_signature_has_empty_center() {
        let sig = signature_from_pattern(PatternKind::Circle, 8, 6400, 11).unwrap();
        for atom in sig.atoms() {
            let central = atom
                .position
                .iter()
                .all(|&c| (c - 0.5).abs() < 0.125 - 1e-9);
            assert!(!central, "unexpected central atom at {:?}", atom.position);
        }
    }
}
