//! Baseline dependence measures the benchmark compares against, plus the
//! estimator identifiers the power harness dispatches on.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::copula::{average_ranks, empirical_copula_transform, Panel};
use crate::dependence::TargetSet;
use crate::error::{Error, Result};

/// Pearson correlation of two equal-length vectors. Constant input is
/// rejected rather than returning NaN.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::SampleTooSmall {
            need: 1,
            got: x.len(),
        });
    }
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        if !b.is_finite() {
            return Err(Error::NonFinite { row: i, col: 1 });
        }
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("constant input has no correlation".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        if !b.is_finite() {
            return Err(Error::NonFinite { row: i, col: 1 });
        }
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Distance correlation between two panels over the same time index
/// (columns may differ). Uses the O(T^2) doubly-centered distance matrices;
/// memory is two T x T buffers.
pub fn dcor(x: &Panel, y: &Panel) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: y.rows(),
        });
    }
    let a = centered_distances(x);
    let b = centered_distances(y);
    let t = x.rows();
    let (mut vab, mut vaa, mut vbb) = (0.0, 0.0, 0.0);
    for idx in 0..t * t {
        vab += a[idx] * b[idx];
        vaa += a[idx] * a[idx];
        vbb += b[idx] * b[idx];
    }
    let norm = (t * t) as f64;
    let (vab, vaa, vbb) = (vab / norm, vaa / norm, vbb / norm);
    if vaa <= 0.0 || vbb <= 0.0 {
        return Err(Error::Degenerate(
            "constant panel has no distance correlation".into(),
        ));
    }
    Ok((vab.max(0.0) / (vaa * vbb).sqrt()).sqrt().clamp(0.0, 1.0))
}

fn centered_distances(p: &Panel) -> Vec<f64> {
    let t = p.rows();
    let mut d = vec![0.0; t * t];
    for i in 0..t {
        for j in i + 1..t {
            let dist: f64 = p
                .row(i)
                .iter()
                .zip(p.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i * t + j] = dist;
            d[j * t + i] = dist;
        }
    }
    let tf = t as f64;
    let mut row_means = vec![0.0; t];
    for i in 0..t {
        row_means[i] = d[i * t..(i + 1) * t].iter().sum::<f64>() / tf;
    }
    let grand = row_means.iter().sum::<f64>() / tf;
    for i in 0..t {
        for j in 0..t {
            d[i * t + j] += grand - row_means[i] - row_means[j];
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdcParams {
    /// Number of random projections k.
    pub projections: usize,
    /// Scale s of the projection weights.
    pub scale: f64,
    pub seed: u64,
}

impl Default for RdcParams {
    fn default() -> Self {
        RdcParams {
            projections: 20,
            scale: 1.0 / 6.0,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Randomized dependence coefficient: copula-transform each panel, append a
/// ones column, project through k random N(0,1) directions scaled by
/// s/(p+1), take sin features plus a ones column, and return the first
/// canonical correlation. The projections for x are drawn before those for
/// y (row-major) from a ChaCha8 stream seeded by `params.seed`.
pub fn rdc(x: &Panel, y: &Panel, params: &RdcParams) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: y.rows(),
        });
    }
    if params.projections < 1 {
        return Err(Error::InvalidParameter("projections must be positive".into()));
    }
    if !params.scale.is_finite() || params.scale <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "scale must be positive, got {}",
            params.scale
        )));
    }
    let t = x.rows();
    if t <= params.projections {
        return Err(Error::SampleTooSmall {
            need: params.projections,
            got: t,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let fx = sine_features(x, params, &mut rng);
    let fy = sine_features(y, params, &mut rng);
    first_canonical_correlation(fx, fy)
}

fn sine_features(p: &Panel, params: &RdcParams, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let t = p.rows();
    let d = p.cols();
    let k = params.projections;
    let u = empirical_copula_transform(p);
    // T x (d+1) rank matrix with a ones column, times (d+1) x k weights,
    // then sin features plus an intercept column
    let mut features = DMatrix::zeros(t, k + 1);
    let scale = params.scale / (d + 1) as f64;
    let w: Vec<f64> = (0..(d + 1) * k)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    for row in 0..t {
        for col in 0..k {
            let mut acc = w[d * k + col]; // ones-column weight
            for i in 0..d {
                acc += u.get(row, i) * w[i * k + col];
            }
            features[(row, col)] = (scale * acc).sin();
        }
        features[(row, k)] = 1.0;
    }
    features
}

/// First canonical correlation between the column spaces of two feature
/// matrices: center, orthonormalize by rank-truncated SVD, and take the
/// largest singular value of the cross product.
fn first_canonical_correlation(mut a: DMatrix<f64>, mut b: DMatrix<f64>) -> Result<f64> {
    for m in [&mut a, &mut b] {
        for c in 0..m.ncols() {
            let mean = m.column(c).sum() / m.nrows() as f64;
            for r in 0..m.nrows() {
                m[(r, c)] -= mean;
            }
        }
    }
    let ua = orthonormal_basis(a)?;
    let ub = orthonormal_basis(b)?;
    let cross = ua.transpose() * ub;
    let sv = cross.svd(false, false).singular_values;
    Ok(sv.iter().fold(0.0f64, |m, &s| m.max(s)).clamp(0.0, 1.0))
}

fn orthonormal_basis(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.svd(true, false);
    let u = svd.u.expect("u requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0f64, |acc, &s| acc.max(s));
    if smax <= 0.0 {
        return Err(Error::Degenerate(
            "feature matrix has rank zero (constant input)".into(),
        ));
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > smax * 1e-9).collect();
    let mut basis = DMatrix::zeros(u.nrows(), keep.len());
    for (out, &i) in keep.iter().enumerate() {
        basis.set_column(out, &u.column(i));
    }
    Ok(basis)
}

/// Which dependence statistic the power harness runs.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorId {
    Pearson,
    Spearman,
    Dcor,
    Rdc { projections: usize, scale: f64 },
    Tdc { resolution: usize, targets: TargetPolicy },
}

/// How the TDC estimator obtains its target set inside the harness.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetPolicy {
    /// A noiseless signature of the pattern under test (the comonotone /
    /// countermonotone pair is substituted under the independence pattern,
    /// whose matched target would coincide with the independence
    /// reference). `sample_size` defaults to 100 m^2.
    PatternMatched { sample_size: Option<usize> },
    /// The comonotone / countermonotone pair for every pattern.
    MonotonePair,
    /// One fixed, caller-supplied target set for every pattern.
    Fixed(TargetSet),
}

impl EstimatorId {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorId::Pearson => "pearson",
            EstimatorId::Spearman => "spearman",
            EstimatorId::Dcor => "dcor",
            EstimatorId::Rdc { .. } => "rdc",
            EstimatorId::Tdc { .. } => "tdc",
        }
    }
}
