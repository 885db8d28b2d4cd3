//! Power-versus-noise benchmark harness.
//!
//! For every (estimator, pattern, noise level) point the harness draws
//! `trials` null samples and `trials` alternative samples of size
//! `sample_size`, takes the empirical (1 - alpha) quantile of the null
//! statistics as the rejection threshold, and reports the fraction of
//! alternative statistics strictly above it. Null samples keep the pattern
//! marginals: under `Resample` the x and y columns come from two
//! independent draws of the pattern; under `Permute` a single draw has its
//! y column shuffled.
//!
//! Every trial consumes its own ChaCha8 stream (see [`crate::synth`]), so
//! trials can run in any order or thread count and still produce identical
//! output, and results are reproducible from (seed, grid position) alone.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::baselines::{self, EstimatorId, RdcParams, TargetPolicy};
use crate::copula::{default_pattern_sample_size, signature_from_pattern, Panel};
use crate::dependence::{independence_reference, tdc, TargetSet};
use crate::error::{Error, Result};
use crate::synth::{
    derive_seed, generate_pattern_with, trial_rng, PatternKind, ARM_ALTERNATIVE, ARM_NULL_A,
    ARM_NULL_B,
};

pub use crate::synth::default_noise_levels;

const TARGET_SALT: u64 = 0x7464_635f_7467;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullModel {
    /// x and y taken from two independent pattern draws.
    Resample,
    /// One pattern draw with the y column randomly permuted.
    Permute,
}

impl std::str::FromStr for NullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resample" => Ok(NullModel::Resample),
            "permute" => Ok(NullModel::Permute),
            other => Err(Error::InvalidParameter(format!(
                "unknown null model '{other}' (expected resample or permute)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    /// Trials per ensemble (B); at least 100.
    pub trials: usize,
    /// Test size in (0, 1]; 1 puts the threshold at the null minimum.
    pub alpha: f64,
    /// Observations per trial sample.
    pub sample_size: usize,
    pub seed: u64,
    pub null: NullModel,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            trials: 500,
            alpha: 0.05,
            sample_size: 500,
            seed: crate::DEFAULT_SEED,
            null: NullModel::Resample,
        }
    }
}

impl PowerConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 100 {
            return Err(Error::InvalidParameter(format!(
                "trials must be at least 100, got {}",
                self.trials
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.sample_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "sample_size must be at least 2, got {}",
                self.sample_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerPoint {
    pub pattern: PatternKind,
    pub noise_level: f64,
    pub power: f64,
    /// Alternative trials that contributed (trials minus reported failures).
    pub trials: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub estimator: String,
    pub points: Vec<PowerPoint>,
}

/// 0-based index of the empirical (1 - alpha) quantile in an ascending
/// sample of size b: max(ceil((1 - alpha) b), 1) - 1.
pub(crate) fn quantile_index(b: usize, alpha: f64) -> usize {
    let raw = ((1.0 - alpha) * b as f64).ceil() as usize;
    raw.clamp(1, b) - 1
}

fn alternative_stat(
    est: &EstimatorId,
    targets: Option<&TargetSet>,
    pattern: PatternKind,
    level: f64,
    level_idx: usize,
    trial: usize,
    cfg: &PowerConfig,
) -> Result<f64> {
    let mut rng = trial_rng(cfg.seed, pattern, level_idx, trial, ARM_ALTERNATIVE);
    let p = generate_pattern_with(&mut rng, pattern, level, cfg.sample_size)?;
    let stat_seed = rng.random();
    statistic(est, targets, &p.column(0), &p.column(1), stat_seed)
}

fn null_stat(
    est: &EstimatorId,
    targets: Option<&TargetSet>,
    pattern: PatternKind,
    level: f64,
    level_idx: usize,
    trial: usize,
    cfg: &PowerConfig,
) -> Result<f64> {
    let (x, y, stat_seed) = match cfg.null {
        NullModel::Resample => {
            let mut ra = trial_rng(cfg.seed, pattern, level_idx, trial, ARM_NULL_A);
            let pa = generate_pattern_with(&mut ra, pattern, level, cfg.sample_size)?;
            let mut rb = trial_rng(cfg.seed, pattern, level_idx, trial, ARM_NULL_B);
            let pb = generate_pattern_with(&mut rb, pattern, level, cfg.sample_size)?;
            (pa.column(0), pb.column(1), rb.random())
        }
        NullModel::Permute => {
            let mut ra = trial_rng(cfg.seed, pattern, level_idx, trial, ARM_NULL_A);
            let p = generate_pattern_with(&mut ra, pattern, level, cfg.sample_size)?;
            let mut rb = trial_rng(cfg.seed, pattern, level_idx, trial, ARM_NULL_B);
            let mut y = p.column(1);
            y.shuffle(&mut rb);
            (p.column(0), y, rb.random())
        }
    };
    statistic(est, targets, &x, &y, stat_seed)
}

fn statistic(
    est: &EstimatorId,
    targets: Option<&TargetSet>,
    x: &[f64],
    y: &[f64],
    stat_seed: u64,
) -> Result<f64> {
    match est {
        EstimatorId::Pearson => Ok(baselines::pearson(x, y)?.abs()),
        EstimatorId::Spearman => Ok(baselines::spearman(x, y)?.abs()),
        EstimatorId::Dcor => {
            baselines::dcor(&Panel::from_columns(&[x.to_vec()])?, &Panel::from_columns(&[y.to_vec()])?)
        }
        EstimatorId::Rdc { projections, scale } => baselines::rdc(
            &Panel::from_columns(&[x.to_vec()])?,
            &Panel::from_columns(&[y.to_vec()])?,
            &RdcParams {
                projections: *projections,
                scale: *scale,
                seed: stat_seed,
            },
        ),
        EstimatorId::Tdc { resolution, .. } => {
            let ts = targets.expect("tdc estimator always resolves targets");
            Ok(tdc(
                &Panel::from_columns(&[x.to_vec()])?,
                &Panel::from_columns(&[y.to_vec()])?,
                ts,
                *resolution,
            )?
            .value)
        }
    }
}

/// Builds the target set a TDC estimator uses for one pattern; None for the
/// baselines. Pattern-matched targets are sampled noiselessly with a seed
/// derived from (cfg.seed, pattern), so they are shared by all trials.
fn resolve_targets(
    est: &EstimatorId,
    pattern: PatternKind,
    cfg: &PowerConfig,
) -> Result<Option<TargetSet>> {
    let EstimatorId::Tdc {
        resolution,
        targets,
    } = est
    else {
        return Ok(None);
    };
    let set = match targets {
        TargetPolicy::MonotonePair => TargetSet::monotone_pair(2, *resolution)?,
        TargetPolicy::Fixed(set) => {
            if set.dimension() != 2 || set.resolution() != *resolution {
                return Err(Error::InvalidTargets(format!(
                    "fixed target set is {}-dimensional at resolution {}, need 2 at {resolution}",
                    set.dimension(),
                    set.resolution()
                )));
            }
            set.clone()
        }
        TargetPolicy::PatternMatched { sample_size } => {
            if pattern == PatternKind::Independence {
                // a matched target would equal the independence reference
                TargetSet::monotone_pair(2, *resolution)?
            } else {
                let m = *resolution;
                let sample = sample_size.unwrap_or_else(|| default_pattern_sample_size(m));
                let seed = derive_seed(cfg.seed, TARGET_SALT.wrapping_add(pattern as u64));
                let sig = signature_from_pattern(pattern, m, sample, seed)?;
                TargetSet::new(
                    vec![(pattern.name().to_string(), sig)],
                    independence_reference(2, m)?,
                )?
            }
        }
    };
    Ok(Some(set))
}

/// Runs one trial ensemble in parallel and splits successes from failures,
/// preserving trial order. More than 5% failures aborts.
fn collect_stats<F>(cfg: &PowerConfig, eval: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let outcomes: Vec<Result<f64>> = (0..cfg.trials).into_par_iter().map(eval).collect();
    let mut stats = Vec::with_capacity(cfg.trials);
    let mut failed = 0usize;
    let mut first: Option<String> = None;
    for out in outcomes {
        match out {
            Ok(v) => stats.push(v),
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed * 20 > cfg.trials {
        return Err(Error::TrialFailures {
            failed,
            total: cfg.trials,
            first: first.unwrap_or_default(),
        });
    }
    Ok(stats)
}

fn threshold_from(null_stats: &mut [f64], alpha: f64) -> f64 {
    null_stats.sort_unstable_by(f64::total_cmp);
    null_stats[quantile_index(null_stats.len(), alpha)]
}

/// Empirical (1 - alpha) null quantile of the estimator's statistic under
/// the pattern's marginals at the given noise level.
pub fn null_threshold(
    est: &EstimatorId,
    pattern: PatternKind,
    noise_level: f64,
    cfg: &PowerConfig,
) -> Result<f64> {
    cfg.validate()?;
    let targets = resolve_targets(est, pattern, cfg)?;
    let mut stats = collect_stats(cfg, |trial| {
        null_stat(est, targets.as_ref(), pattern, noise_level, 0, trial, cfg)
    })?;
    if stats.is_empty() {
        return Err(Error::TrialFailures {
            failed: cfg.trials,
            total: cfg.trials,
            first: "all trials failed".into(),
        });
    }
    Ok(threshold_from(&mut stats, cfg.alpha))
}

/// Full power sweep of one estimator over patterns x noise levels. Points
/// appear in the given order; streams are keyed by grid position, so the
/// same (config, grid) always reproduces byte-identical results.
pub fn power_curve(
    est: &EstimatorId,
    patterns: &[PatternKind],
    levels: &[f64],
    cfg: &PowerConfig,
) -> Result<PowerCurve> {
    cfg.validate()?;
    if patterns.is_empty() || levels.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one pattern and one noise level".into(),
        ));
    }
    for &l in levels {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise levels must be finite and non-negative, got {l}"
            )));
        }
    }
    let mut points = Vec::with_capacity(patterns.len() * levels.len());
    for &pattern in patterns {
        let targets = resolve_targets(est, pattern, cfg)?;
        for (level_idx, &level) in levels.iter().enumerate() {
            let mut null_stats = collect_stats(cfg, |trial| {
                null_stat(est, targets.as_ref(), pattern, level, level_idx, trial, cfg)
            })?;
            let alt_stats = collect_stats(cfg, |trial| {
                alternative_stat(est, targets.as_ref(), pattern, level, level_idx, trial, cfg)
            })?;
            if null_stats.is_empty() || alt_stats.is_empty() {
                return Err(Error::TrialFailures {
                    failed: cfg.trials,
                    total: cfg.trials,
                    first: "all trials failed".into(),
                });
            }
            let threshold = threshold_from(&mut null_stats, cfg.alpha);
            let rejected = alt_stats.iter().filter(|&&s| s > threshold).count();
            points.push(PowerPoint {
                pattern,
                noise_level: level,
                power: rejected as f64 / alt_stats.len() as f64,
                trials: alt_stats.len(),
                threshold,
            });
        }
    }
    Ok(PowerCurve {
        estimator: est.name().to_string(),
        points,
    })
}

/// Long-format CSV with one row per (estimator, pattern, noise level).
/// Floats are printed with Rust's shortest round-trip formatting, so equal
/// results render byte-identically.
pub fn power_csv(curves: &[PowerCurve]) -> String {
    let mut out = String::from("estimator,pattern,noise_level,power,trials,threshold\n");
    for curve in curves {
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                curve.estimator, p.pattern, p.noise_level, p.power, p.trials, p.threshold
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_index_boundaries() {
        assert_eq!(quantile_index(500, 0.05), 474);
        assert_eq!(quantile_index(100, 1.0), 0); // threshold = null minimum
        assert_eq!(quantile_index(100, 1e-12), 99);
        assert_eq!(quantile_index(1, 0.5), 0);
    }

    #[test]
    fn config_validation() {
        let bad_trials = PowerConfig {
            trials: 50,
            ..Default::default()
        };
        assert!(bad_trials.validate().is_err());
        let bad_alpha = PowerConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad_alpha.validate().is_err());
        let alpha_one = PowerConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(alpha_one.validate().is_ok());
    }

    fn small_cfg() -> PowerConfig {
        PowerConfig {
            trials: 100,
            alpha: 0.05,
            sample_size: 60,
            seed: 7,
            null: NullModel::Resample,
        }
    }

    #[test]
    fn pearson_has_full_power_on_clean_linear_data() {
        let curve = power_curve(
            &EstimatorId::Pearson,
            &[PatternKind::Linear],
            &[0.0],
            &small_cfg(),
        )
        .unwrap();
        assert_eq!(curve.points[0].power, 1.0);
        assert_eq!(curve.points[0].trials, 100);
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = small_cfg();
        let run = || {
            power_curve(
                &EstimatorId::Rdc {
                    projections: 5,
                    scale: 1.0 / 6.0,
                },
                &[PatternKind::Quadratic],
                &[0.0, 1.0],
                &cfg,
            )
            .unwrap()
        };
        assert_eq!(power_csv(&[run()]), power_csv(&[run()]));
    }

    #[test]
    fn permute_null_is_supported() {
        let cfg = PowerConfig {
            null: NullModel::Permute,
            ..small_cfg()
        };
        let t = null_threshold(&EstimatorId::Pearson, PatternKind::Linear, 1.0, &cfg).unwrap();
        assert!(t > 0.0 && t < 1.0, "threshold {t}");
    }

    #[test]
    fn csv_shape_is_stable() {
        let curve = PowerCurve {
            estimator: "pearson".into(),
            points: vec![PowerPoint {
                pattern: PatternKind::Step,
                noise_level: 1.0 / 3.0,
                power: 0.52,
                trials: 500,
                threshold: 0.0875,
            }],
        };
        assert_eq!(
            power_csv(&[curve]),
            "estimator,pattern,noise_level,power,trials,threshold\n\
             pearson,step,0.3333333333333333,0.52,500,0.0875\n"
        );
    }
}
