//! Synthetic bivariate dependence patterns and labeled panel datasets.
//!
//! All randomness flows through ChaCha8, a portable counter-based generator:
//! the same seed produces the same bytes on every platform and the 64-bit
//! stream id lets independent draws be split deterministically. The power
//! harness derives one stream per (pattern, noise level, trial, arm) as
//!
//! ```text
//! stream = pattern_index << 48 | level_index << 32 | trial << 2 | arm
//! ```
//!
//! with arms 0 = alternative draw, 1/2 = the two independent null draws.
//! Dataset panels use `1 << 62 | class << 32 | panel` so they can never
//! collide with trial streams under the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::copula::Panel;
use crate::error::{Error, Result};

pub const ARM_ALTERNATIVE: u64 = 0;
pub const ARM_NULL_A: u64 = 1;
pub const ARM_NULL_B: u64 = 2;

/// The eight noisy dependence shapes plus an independence control. Every
/// pattern draws x ~ U(0,1) (the circle additionally flips a sign for the
/// y branch) and sets y = g(x) plus optional Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    Linear,
    Quadratic,
    Cubic,
    SineLow,
    SineHigh,
    FourthRoot,
    Circle,
    Step,
    Independence,
}

impl PatternKind {
    pub const ALL: [PatternKind; 9] = [
        PatternKind::Linear,
        PatternKind::Quadratic,
        PatternKind::Cubic,
        PatternKind::SineLow,
        PatternKind::SineHigh,
        PatternKind::FourthRoot,
        PatternKind::Circle,
        PatternKind::Step,
        PatternKind::Independence,
    ];

    /// The eight dependence shapes, independence excluded.
    pub const SHAPES: [PatternKind; 8] = [
        PatternKind::Linear,
        PatternKind::Quadratic,
        PatternKind::Cubic,
        PatternKind::SineLow,
        PatternKind::SineHigh,
        PatternKind::FourthRoot,
        PatternKind::Circle,
        PatternKind::Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Linear => "linear",
            PatternKind::Quadratic => "quadratic",
            PatternKind::Cubic => "cubic",
            PatternKind::SineLow => "sine_low",
            PatternKind::SineHigh => "sine_high",
            PatternKind::FourthRoot => "fourth_root",
            PatternKind::Circle => "circle",
            PatternKind::Step => "step",
            PatternKind::Independence => "independence",
        }
    }

    /// Noise scale for the y coordinate: the exact range of the clean g(x)
    /// over x in [0,1], so one unit of noise level means the same relative
    /// corruption for every shape. The cubic's range is 44/3: its endpoint
    /// values are -164/27 and 232/27 and the interior extrema stay inside.
    pub fn noise_sigma(self) -> f64 {
        match self {
            PatternKind::Linear => 1.0,
            PatternKind::Quadratic => 1.0,
            PatternKind::Cubic => 44.0 / 3.0,
            PatternKind::SineLow => 2.0,
            PatternKind::SineHigh => 2.0,
            PatternKind::FourthRoot => 1.0,
            PatternKind::Circle => 2.0,
            PatternKind::Step => 1.0,
            PatternKind::Independence => 1.0,
        }
    }

    fn index(self) -> u64 {
        PatternKind::ALL.iter().position(|&k| k == self).unwrap() as u64
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pattern '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    pub kind: PatternKind,
    /// Noise level l >= 0; the y coordinate gets l * sigma_kind * N(0,1)
    /// added (the circle also perturbs x with sigma 1).
    pub noise_level: f64,
    pub sample_size: usize,
    pub seed: u64,
}

/// The benchmark grid: ten levels 0, 1/3, ..., 3.
pub fn default_noise_levels() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 3.0).collect()
}

pub(crate) fn trial_rng(
    seed: u64,
    pattern: PatternKind,
    level_index: usize,
    trial: usize,
    arm: u64,
) -> ChaCha8Rng {
    debug_assert!(arm < 4 && level_index < (1 << 16) && trial < (1 << 30));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(
        (pattern.index() << 48) | ((level_index as u64) << 32) | ((trial as u64) << 2) | arm,
    );
    rng
}

fn dataset_rng(seed: u64, class: usize, panel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1 << 62) | ((class as u64) << 32) | panel as u64);
    rng
}

/// splitmix64; used to derive auxiliary seeds (e.g. per-pattern target
/// sampling) from a base seed without touching its ChaCha streams.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn clean_y(kind: PatternKind, x: f64, sign: f64) -> f64 {
    match kind {
        PatternKind::Linear => x,
        PatternKind::Quadratic => 4.0 * (x - 0.5) * (x - 0.5),
        PatternKind::Cubic => {
            let u = x - 1.0 / 3.0;
            128.0 * u * u * u - 48.0 * u * u - 12.0 * u
        }
        PatternKind::SineLow => (4.0 * std::f64::consts::PI * x).sin(),
        PatternKind::SineHigh => (16.0 * std::f64::consts::PI * x).sin(),
        PatternKind::FourthRoot => x.powf(0.25),
        PatternKind::Circle => {
            let w = 2.0 * x - 1.0;
            sign * (1.0 - w * w).max(0.0).sqrt()
        }
        PatternKind::Step => {
            if x > 0.5 {
                1.0
            } else {
                0.0
            }
        }
        PatternKind::Independence => unreachable!("independence has no link function"),
    }
}

pub(crate) fn generate_pattern_with(
    rng: &mut ChaCha8Rng,
    kind: PatternKind,
    noise_level: f64,
    n: usize,
) -> Result<Panel> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sample_size must be at least 2, got {n}"
        )));
    }
    if !noise_level.is_finite() || noise_level < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_level must be finite and non-negative, got {noise_level}"
        )));
    }
    let mut x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let mut y = vec![0.0; n];
    match kind {
        PatternKind::Independence => {
            for v in &mut y {
                *v = rng.random();
            }
        }
        PatternKind::Circle => {
            for t in 0..n {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                y[t] = clean_y(kind, x[t], sign);
            }
        }
        _ => {
            for t in 0..n {
                y[t] = clean_y(kind, x[t], 1.0);
            }
        }
    }
    if noise_level > 0.0 && kind != PatternKind::Independence {
        let sy = noise_level * kind.noise_sigma();
        for t in 0..n {
            if kind == PatternKind::Circle {
                let ex: f64 = rng.sample(StandardNormal);
                x[t] += noise_level * ex;
            }
            let ey: f64 = rng.sample(StandardNormal);
            y[t] += sy * ey;
        }
    }
    Panel::from_columns(&[x, y])
}

/// Draws `sample_size` points of the pattern. Bit-reproducible: the same
/// spec yields the same panel on every platform.
pub fn generate_pattern(spec: &PatternSpec) -> Result<Panel> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    generate_pattern_with(&mut rng, spec.kind, spec.noise_level, spec.sample_size)
}

/// Bivariate Gaussian sample with correlation rho: x = z1 and
/// y = rho z1 + sqrt(1 - rho^2) z2, drawn interleaved per row.
pub fn gaussian_pair(rho: f64, n: usize, seed: u64) -> Result<Panel> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sample_size must be at least 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cross = (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        x.push(z1);
        y.push(rho * z1 + cross * z2);
    }
    Panel::from_columns(&[x, y])
}

/// Dependence structure of one dataset class.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassPattern {
    /// Shared latent u with per-column strictly increasing maps u^(j+1).
    Comonotone,
    /// Two columns moving in opposite directions (d = 2 only).
    Countermonotone,
    /// One of the bivariate shapes (d = 2 only).
    Shape(PatternKind),
}

impl ClassPattern {
    pub fn name(&self) -> String {
        match self {
            ClassPattern::Comonotone => "comonotone".into(),
            ClassPattern::Countermonotone => "countermonotone".into(),
            ClassPattern::Shape(kind) => kind.name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub pattern: ClassPattern,
    pub dimension: usize,
    pub noise_level: f64,
}

#[derive(Debug, Clone)]
pub struct LabeledPanel {
    pub panel: Panel,
    /// Index into the class list the panel was drawn from.
    pub class: usize,
    pub class_name: String,
}

/// Draws `n_per_class` panels of length `t` from every class. Labels are
/// kept so external validation (e.g. ARI against recovered clusters) has a
/// ground truth to compare with.
pub fn generate_mts_dataset(
    n_per_class: usize,
    classes: &[ClassSpec],
    t: usize,
    seed: u64,
) -> Result<Vec<LabeledPanel>> {
    if classes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes, got {}",
            classes.len()
        )));
    }
    if n_per_class < 1 {
        return Err(Error::InvalidParameter("n_per_class must be positive".into()));
    }
    if t < 2 {
        return Err(Error::InvalidParameter(format!(
            "panel length must be at least 2, got {t}"
        )));
    }
    for (ci, class) in classes.iter().enumerate() {
        if class.dimension < 2 {
            return Err(Error::InvalidParameter(format!(
                "class {ci}: dimension must be at least 2"
            )));
        }
        if !class.noise_level.is_finite() || class.noise_level < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "class {ci}: invalid noise level {}",
                class.noise_level
            )));
        }
        match class.pattern {
            ClassPattern::Countermonotone | ClassPattern::Shape(_) if class.dimension != 2 => {
                return Err(Error::InvalidParameter(format!(
                    "class {ci}: {} requires dimension 2",
                    class.pattern.name()
                )));
            }
            _ => {}
        }
    }

    let mut out = Vec::with_capacity(classes.len() * n_per_class);
    for (ci, class) in classes.iter().enumerate() {
        for pi in 0..n_per_class {
            let mut rng = dataset_rng(seed, ci, pi);
            let panel = match &class.pattern {
                ClassPattern::Comonotone => {
                    comonotone_panel(&mut rng, class.dimension, class.noise_level, t)?
                }
                ClassPattern::Countermonotone => {
                    countermonotone_panel(&mut rng, class.noise_level, t)?
                }
                ClassPattern::Shape(kind) => {
                    generate_pattern_with(&mut rng, *kind, class.noise_level, t)?
                }
            };
            out.push(LabeledPanel {
                panel: panel.with_series_id(format!("class{ci}-{pi}")),
                class: ci,
                class_name: class.pattern.name(),
            });
        }
    }
    Ok(out)
}

fn comonotone_panel(rng: &mut ChaCha8Rng, d: usize, noise: f64, t: usize) -> Result<Panel> {
    let latent: Vec<f64> = (0..t).map(|_| rng.random()).collect();
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|j| latent.iter().map(|&u| u.powi(j as i32 + 1)).collect())
        .collect();
    add_noise(rng, &mut cols, noise);
    Panel::from_columns(&cols)
}

fn countermonotone_panel(rng: &mut ChaCha8Rng, noise: f64, t: usize) -> Result<Panel> {
    let latent: Vec<f64> = (0..t).map(|_| rng.random()).collect();
    let up = latent.clone();
    let down: Vec<f64> = latent.iter().map(|&u| (1.0 - u).powi(3)).collect();
    let mut cols = vec![up, down];
    add_noise(rng, &mut cols, noise);
    Panel::from_columns(&cols)
}

fn add_noise(rng: &mut ChaCha8Rng, cols: &mut [Vec<f64>], noise: f64) {
    if noise <= 0.0 {
        return;
    }
    for t in 0..cols[0].len() {
        for col in cols.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            col[t] += noise * e;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{bin_copula, empirical_copula_transform, monotone_signature};

    #[test]
    fn pattern_names_round_trip() {
        for kind in PatternKind::ALL {
            assert_eq!(kind.name().parse::<PatternKind>().unwrap(), kind);
        }
        assert!("triangle".parse::<PatternKind>().is_err());
    }

    #[test]
    fn noiseless_patterns_are_exact() {
        for kind in PatternKind::SHAPES {
            if kind == PatternKind::Circle {
                continue; // sign branch is not a function of x alone
            }
            let spec = PatternSpec {
                kind,
                noise_level: 0.0,
                sample_size: 64,
                seed: 3,
            };
            let p = generate_pattern(&spec).unwrap();
            for t in 0..p.rows() {
                assert_eq!(p.get(t, 1), clean_y(kind, p.get(t, 0), 1.0));
            }
        }
    }

    #[test]
    fn circle_points_are_on_the_unit_circle() {
        let spec = PatternSpec {
            kind: PatternKind::Circle,
            noise_level: 0.0,
            sample_size: 128,
            seed: 9,
        };
        let p = generate_pattern(&spec).unwrap();
        let mut saw_negative = false;
        for t in 0..p.rows() {
            let w = 2.0 * p.get(t, 0) - 1.0;
            let y = p.get(t, 1);
            assert!((w * w + y * y - 1.0).abs() < 1e-12);
            saw_negative |= y < 0.0;
        }
        assert!(saw_negative, "sign branch never fired");
    }

    #[test]
    fn cubic_range_is_44_thirds() {
        let lo = clean_y(PatternKind::Cubic, 0.0, 1.0);
        let hi = clean_y(PatternKind::Cubic, 1.0, 1.0);
        assert!((lo - (-164.0 / 27.0)).abs() < 1e-12);
        assert!((hi - 232.0 / 27.0).abs() < 1e-12);
        assert!((PatternKind::Cubic.noise_sigma() - (hi - lo)).abs() < 1e-12);
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = PatternSpec {
            kind: PatternKind::SineHigh,
            noise_level: 1.5,
            sample_size: 200,
            seed: 77,
        };
        assert_eq!(generate_pattern(&spec).unwrap(), generate_pattern(&spec).unwrap());
    }

    #[test]
    fn trial_streams_are_disjoint_arms() {
        let mut a = trial_rng(1, PatternKind::Linear, 0, 0, ARM_NULL_A);
        let mut b = trial_rng(1, PatternKind::Linear, 0, 0, ARM_NULL_B);
        let xa: Vec<f64> = (0..8).map(|_| a.random()).collect();
        let xb: Vec<f64> = (0..8).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn gaussian_pair_matches_requested_correlation() {
        let p = gaussian_pair(0.8, 20_000, 5).unwrap();
        let x = p.column(0);
        let y = p.column(1);
        let r = crate::baselines::pearson(&x, &y).unwrap();
        assert!((r - 0.8).abs() < 0.02, "sample correlation {r}");
        assert!(gaussian_pair(1.5, 10, 0).is_err());
    }

    #[test]
    fn dataset_classes_have_expected_copulas() {
        let classes = [
            ClassSpec {
                pattern: ClassPattern::Comonotone,
                dimension: 2,
                noise_level: 0.0,
            },
            ClassSpec {
                pattern: ClassPattern::Countermonotone,
                dimension: 2,
                noise_level: 0.0,
            },
        ];
        let data = generate_mts_dataset(2, &classes, 64, 17).unwrap();
        assert_eq!(data.len(), 4);
        let co = bin_copula(&empirical_copula_transform(&data[0].panel), 8).unwrap();
        assert_eq!(co, monotone_signature(2, 8, &[1, 1]).unwrap());
        let anti = bin_copula(&empirical_copula_transform(&data[2].panel), 8).unwrap();
        assert_eq!(anti, monotone_signature(2, 8, &[1, -1]).unwrap());
        assert_eq!(data[2].class, 1);
    }

    #[test]
    fn dataset_rejects_single_class() {
        let classes = [ClassSpec {
            pattern: ClassPattern::Comonotone,
            dimension: 2,
            noise_level: 0.0,
        }];
        assert!(matches!(
            generate_mts_dataset(3, &classes, 32, 0),
            Err(Error::InvalidParameter(_))
        ));
    }
}
