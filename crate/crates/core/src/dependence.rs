//! The intra-dependence distance and the target dependencies coefficient.
//!
//! `intra_distance` compares the dependence structures of two multivariate
//! panels as the transport distance between their binned empirical copulas.
//! `tdc` locates a pair of (possibly multivariate) series on the segment
//! between independence and a chosen set of perfect-dependence targets: via
//! the stacked sample Z = [x | y] it computes
//!
//! ```text
//! TDC = EMD(C_ind, C~) / (EMD(C_ind, C~) + min_i EMD(C~, C_i))
//! ```
//!
//! which is exactly 0 when the stacked copula equals the independence
//! reference and exactly 1 when it equals one of the targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cluster::DistanceMatrix;
use crate::copula::{
    bin_copula, default_pattern_sample_size, empirical_copula_transform, independence_signature,
    monotone_signature, Panel, Signature, SPARSE_BUDGET,
};
use crate::error::{Error, Result};
use crate::transport::emd_exact;

/// Seed of the sampled independence reference used when the dense m^d grid
/// would blow the sparse budget.
pub const INDEPENDENCE_SAMPLE_SEED: u64 = 0x1ce_b00da;

/// Default histogram resolution by stacked dimension: 16 for bivariate
/// copulas, 8 for three dimensions, 4 beyond that.
pub fn default_resolution(dimension: usize) -> usize {
    match dimension {
        0..=2 => 16,
        3 => 8,
        _ => 4,
    }
}

/// Independence reference at the given dimension and resolution: the dense
/// uniform signature when m^d fits the sparse budget, otherwise a fixed-seed
/// Monte Carlo approximation from 100 m^2 uniform points.
pub fn independence_reference(dimension: usize, resolution: usize) -> Result<Signature> {
    let cells = (resolution as u128)
        .checked_pow(dimension as u32)
        .unwrap_or(u128::MAX);
    if cells <= SPARSE_BUDGET as u128 {
        return independence_signature(dimension, resolution);
    }
    let n = default_pattern_sample_size(resolution);
    let mut rng = ChaCha8Rng::seed_from_u64(INDEPENDENCE_SAMPLE_SEED);
    let cols: Vec<Vec<f64>> = (0..dimension)
        .map(|_| (0..n).map(|_| rng.random()).collect())
        .collect();
    let panel = Panel::from_columns(&cols)?;
    bin_copula(&empirical_copula_transform(&panel), resolution)
}

/// Named perfect-dependence targets sharing one grid, plus the independence
/// reference for the same grid. Construction rejects mixed dimensions or
/// resolutions, duplicate names, and any target equal to the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    dimension: usize,
    resolution: usize,
    targets: Vec<(String, Signature)>,
    independence: Signature,
}

impl TargetSet {
    pub fn new(targets: Vec<(String, Signature)>, independence: Signature) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidTargets("no targets given".into()));
        }
        let dimension = independence.dimension();
        let resolution = independence.resolution();
        for (name, sig) in &targets {
            if sig.dimension() != dimension {
                return Err(Error::InvalidTargets(format!(
                    "target '{name}' has dimension {}, expected {dimension}",
                    sig.dimension()
                )));
            }
            if sig.resolution() != resolution {
                return Err(Error::InvalidTargets(format!(
                    "target '{name}' has resolution {}, expected {resolution}",
                    sig.resolution()
                )));
            }
            if *sig == independence {
                return Err(Error::InvalidTargets(format!(
                    "target '{name}' equals the independence reference"
                )));
            }
        }
        for i in 1..targets.len() {
            if targets[..i].iter().any(|(n, _)| n == &targets[i].0) {
                return Err(Error::InvalidTargets(format!(
                    "duplicate target name '{}'",
                    targets[i].0
                )));
            }
        }
        Ok(TargetSet {
            dimension,
            resolution,
            targets,
            independence,
        })
    }

    /// Comonotone and countermonotone targets with the dense independence
    /// reference. The countermonotone orientation flips the second half of
    /// the axes, matching a stacked [x | y] layout.
    pub fn monotone_pair(dimension: usize, resolution: usize) -> Result<Self> {
        let co = monotone_signature(dimension, resolution, &vec![1; dimension])?;
        let mut orientation = vec![1i8; dimension];
        for o in orientation.iter_mut().skip(dimension.div_ceil(2)) {
            *o = -1;
        }
        let counter = monotone_signature(dimension, resolution, &orientation)?;
        let independence = independence_reference(dimension, resolution)?;
        TargetSet::new(
            vec![
                ("comonotone".into(), co),
                ("countermonotone".into(), counter),
            ],
            independence,
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn targets(&self) -> &[(String, Signature)] {
        &self.targets
    }

    pub fn independence(&self) -> &Signature {
        &self.independence
    }
}

/// TDC value with the distances behind it. `activated` names the closest
/// target (ties keep the earliest in target order).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TdcResult {
    pub value: f64,
    pub activated: String,
    pub independence_distance: f64,
    pub target_distances: Vec<(String, f64)>,
}

/// Distance between the dependence structures of two panels with the same
/// number of channels (at least 2): EMD between their copulas binned at
/// `resolution`. Panels may differ in length.
pub fn intra_distance(x1: &Panel, x2: &Panel, resolution: usize) -> Result<f64> {
    if x1.cols() != x2.cols() {
        return Err(Error::DimensionMismatch {
            left: x1.cols(),
            right: x2.cols(),
        });
    }
    if x1.cols() < 2 {
        return Err(Error::InvalidParameter(
            "intra-dependence distance needs at least 2 channels".into(),
        ));
    }
    let s1 = bin_copula(&empirical_copula_transform(x1), resolution)?;
    let s2 = bin_copula(&empirical_copula_transform(x2), resolution)?;
    Ok(emd_exact(&s1, &s2)?.cost())
}

/// Target dependencies coefficient between two equal-length panels. The
/// target set must live on the stacked dimension x.cols() + y.cols() and on
/// the requested resolution.
pub fn tdc(x: &Panel, y: &Panel, targets: &TargetSet, resolution: usize) -> Result<TdcResult> {
    let stacked_dim = x.cols() + y.cols();
    if targets.dimension() != stacked_dim {
        return Err(Error::DimensionMismatch {
            left: targets.dimension(),
            right: stacked_dim,
        });
    }
    if targets.resolution() != resolution {
        return Err(Error::InvalidParameter(format!(
            "targets are built at resolution {}, requested {resolution}",
            targets.resolution()
        )));
    }
    let z = x.hstack(y)?;
    let c = bin_copula(&empirical_copula_transform(&z), resolution)?;
    let independence_distance = emd_exact(targets.independence(), &c)?.cost();
    let mut target_distances = Vec::with_capacity(targets.targets().len());
    for (name, sig) in targets.targets() {
        target_distances.push((name.clone(), emd_exact(&c, sig)?.cost()));
    }
    let (activated, nearest) = target_distances
        .iter()
        .fold(None::<(&str, f64)>, |acc, (name, d)| match acc {
            Some((_, best)) if *d >= best => acc,
            _ => Some((name, *d)),
        })
        .expect("target set is never empty");
    let value = if independence_distance == 0.0 {
        0.0
    } else {
        independence_distance / (independence_distance + nearest)
    };
    Ok(TdcResult {
        value,
        activated: activated.to_string(),
        independence_distance,
        target_distances,
    })
}

/// What the entries of a pairwise matrix mean.
#[derive(Debug, Clone)]
pub enum MatrixMode {
    /// Intra-dependence distance between panels (a metric).
    Intra,
    /// 1 - TDC of the pair (i, j) with i < j, mirrored to keep the matrix
    /// symmetric. A dissimilarity, not a metric.
    TdcDissimilarity(TargetSet),
}

/// Pairwise matrix over panels; rows are labeled by each panel's series id
/// (falling back to its index). Pairs are computed independently, in
/// parallel when a rayon pool is available, and the result does not depend
/// on the computation order.
pub fn distance_matrix(panels: &[Panel], mode: &MatrixMode, resolution: usize) -> Result<DistanceMatrix> {
    if panels.len() < 2 {
        return Err(Error::InvalidParameter(
            "distance matrix needs at least 2 panels".into(),
        ));
    }
    let d = panels[0].cols();
    for p in panels {
        if p.cols() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: p.cols(),
            });
        }
    }
    let labels: Vec<String> = panels
        .iter()
        .enumerate()
        .map(|(i, p)| p.series_id().map_or_else(|| format!("panel{i}"), String::from))
        .collect();

    let n = panels.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = match mode {
        MatrixMode::Intra => {
            let sigs: Vec<Signature> = panels
                .par_iter()
                .map(|p| bin_copula(&empirical_copula_transform(p), resolution))
                .collect::<Result<_>>()?;
            pairs
                .par_iter()
                .map(|&(i, j)| Ok(emd_exact(&sigs[i], &sigs[j])?.cost()))
                .collect::<Result<_>>()?
        }
        MatrixMode::TdcDissimilarity(targets) => pairs
            .par_iter()
            .map(|&(i, j)| Ok(1.0 - tdc(&panels[i], &panels[j], targets, resolution)?.value))
            .collect::<Result<_>>()?,
    };
    let mut entries = vec![vec![0.0; n]; n];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        entries[i][j] = v;
        entries[j][i] = v;
    }
    DistanceMatrix::new(labels, entries)
}
