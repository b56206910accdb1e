//! Seeded synthetic joint distributions for power studies.
//!
//! Bivariate shapes use `u, v ~ U(-1, 1)` and Gaussian jitter with standard
//! deviation [`JITTER_SD`] unless stated otherwise:
//!
//! | name            | X                            | Y                              |
//! |-----------------|------------------------------|--------------------------------|
//! | `w`             | `u`                          | `4 (u^2 - 1/2)^2 + jitter`     |
//! | `diamond`       | `(u + v) / sqrt 2`           | `(u - v) / sqrt 2`             |
//! | `parabola`      | `u`                          | `u^2 + jitter`                 |
//! | `two_parabolas` | `u`                          | `s (u^2 + jitter)`, `s = +-1`  |
//! | `circle`        | `cos t + jitter`             | `sin t + jitter`               |
//! | `four_clouds`   | `N(+-1, 0.04)` mixture       | independent copy of the same   |
//!
//! The multivariate scenarios are five-dimensional (`log_square5`,
//! `multiplicative5`, `quadratic`), hundred-dimensional block-correlated
//! (`block100_*`) and thousand-dimensional ten-component mixtures
//! (`mixture1000_*`). `copy` and `constant_y` are degenerate checks.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive, stream_rng, tag};

pub const JITTER_SD: f64 = 0.05;
const CLOUD_SD: f64 = 0.2;

pub const MIXTURE_DIM: usize = 1000;
pub const MIXTURE_COMPONENTS: usize = 10;
pub const BLOCK_DIM: usize = 100;
const BLOCK_SIZE: usize = 10;
const BLOCK_NOISE_VAR: f64 = 9.0;

/// Noise law of the mixture scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Noise {
    Cauchy,
    T3,
    Normal,
}

/// Coordinates of the 100-dimensional scenario that carry signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockIndexSet {
    /// Coordinates 1..=10 and 51..=55: the two most correlated blocks.
    Strong,
    /// Coordinates 41..=50 and 91..=100.
    Weak,
    /// No signal; X and Y independent.
    Null,
}

impl BlockIndexSet {
    /// Zero-based indices.
    pub fn indices(self) -> Vec<usize> {
        match self {
            BlockIndexSet::Strong => (0..10).chain(50..55).collect(),
            BlockIndexSet::Weak => (40..50).chain(90..100).collect(),
            BlockIndexSet::Null => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    W,
    Diamond,
    Parabola,
    TwoParabolas,
    Circle,
    FourClouds,
    LogSquare5,
    Multiplicative5,
    Quadratic { m1: usize, beta1: f64, beta2: f64, sigma2: f64 },
    BlockCorrelated100 { index_set: BlockIndexSet },
    Mixture1000 { noise: Noise },
    /// `Y = X` with `X ~ N(0, 1)`.
    Copy,
    /// `X ~ N(0, 1)`, `Y = 0`.
    ConstantY,
}

/// Names accepted by [`Scenario::from_name`], in a stable order.
pub const SCENARIO_NAMES: &[&str] = &[
    "w",
    "diamond",
    "parabola",
    "two_parabolas",
    "circle",
    "four_clouds",
    "log_square5",
    "multiplicative5",
    "quadratic",
    "quadratic_null",
    "quadratic_linear",
    "block100_strong",
    "block100_weak",
    "block100_null",
    "mixture1000_cauchy",
    "mixture1000_t3",
    "mixture1000_normal",
    "copy",
    "constant_y",
];

impl Scenario {
    pub fn from_name(name: &str) -> Result<Self> {
        let s = match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "w" => Scenario::W,
            "diamond" => Scenario::Diamond,
            "parabola" => Scenario::Parabola,
            "two_parabolas" => Scenario::TwoParabolas,
            "circle" => Scenario::Circle,
            "four_clouds" => Scenario::FourClouds,
            "log_square5" => Scenario::LogSquare5,
            "multiplicative5" => Scenario::Multiplicative5,
            "quadratic" => Scenario::quadratic(2, 1.0, 4.0, 9.0),
            "quadratic_null" => Scenario::quadratic(0, 0.0, 0.0, 1.0),
            "quadratic_linear" => Scenario::quadratic(2, 3.0, 2.5, 9.0),
            "block100_strong" => Scenario::BlockCorrelated100 {
                index_set: BlockIndexSet::Strong,
            },
            "block100_weak" => Scenario::BlockCorrelated100 {
                index_set: BlockIndexSet::Weak,
            },
            "block100_null" => Scenario::BlockCorrelated100 {
                index_set: BlockIndexSet::Null,
            },
            "mixture1000_cauchy" => Scenario::Mixture1000 { noise: Noise::Cauchy },
            "mixture1000_t3" => Scenario::Mixture1000 { noise: Noise::T3 },
            "mixture1000_normal" => Scenario::Mixture1000 { noise: Noise::Normal },
            "copy" => Scenario::Copy,
            "constant_y" => Scenario::ConstantY,
            _ => {
                return Err(Error::UnknownScenario {
                    name: name.to_string(),
                    valid: SCENARIO_NAMES.join(", "),
                })
            }
        };
        Ok(s)
    }

    pub fn quadratic(m1: usize, beta1: f64, beta2: f64, sigma2: f64) -> Self {
        Scenario::Quadratic { m1, beta1, beta2, sigma2 }
    }

    pub fn name(&self) -> String {
        match *self {
            Scenario::W => "w".into(),
            Scenario::Diamond => "diamond".into(),
            Scenario::Parabola => "parabola".into(),
            Scenario::TwoParabolas => "two_parabolas".into(),
            Scenario::Circle => "circle".into(),
            Scenario::FourClouds => "four_clouds".into(),
            Scenario::LogSquare5 => "log_square5".into(),
            Scenario::Multiplicative5 => "multiplicative5".into(),
            Scenario::Quadratic { m1, beta1, beta2, sigma2 } => {
                format!("quadratic(m1={m1},b1={beta1},b2={beta2},s2={sigma2})")
            }
            Scenario::BlockCorrelated100 { index_set } => match index_set {
                BlockIndexSet::Strong => "block100_strong".into(),
                BlockIndexSet::Weak => "block100_weak".into(),
                BlockIndexSet::Null => "block100_null".into(),
            },
            Scenario::Mixture1000 { noise } => match noise {
                Noise::Cauchy => "mixture1000_cauchy".into(),
                Noise::T3 => "mixture1000_t3".into(),
                Noise::Normal => "mixture1000_normal".into(),
            },
            Scenario::Copy => "copy".into(),
            Scenario::ConstantY => "constant_y".into(),
        }
    }

    /// Dimensions of X and Y.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Scenario::LogSquare5 | Scenario::Multiplicative5 | Scenario::Quadratic { .. } => (5, 5),
            Scenario::BlockCorrelated100 { .. } => (BLOCK_DIM, BLOCK_DIM),
            Scenario::Mixture1000 { .. } => (MIXTURE_DIM, MIXTURE_DIM),
            _ => (1, 1),
        }
    }

    /// Whether X and Y are independent by construction.
    pub fn is_null(&self) -> bool {
        match *self {
            Scenario::FourClouds | Scenario::ConstantY => true,
            Scenario::Quadratic { m1, .. } => m1 == 0,
            Scenario::BlockCorrelated100 { index_set } => index_set == BlockIndexSet::Null,
            _ => false,
        }
    }

    /// Checks the parameters of a quadratic scenario.
    pub fn validate(&self) -> Result<()> {
        if let Scenario::Quadratic { m1, beta1, beta2, sigma2 } = *self {
            if m1 > 5 {
                return Err(Error::InvalidParameter(format!("m1 = {m1} exceeds the dimension 5")));
            }
            if !(sigma2 >= 0.0 && sigma2.is_finite() && beta1.is_finite() && beta2.is_finite()) {
                return Err(Error::InvalidParameter(
                    "quadratic scenario needs finite betas and sigma2 >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A scenario with its fixed structure (mixture means) drawn once.
#[derive(Debug, Clone)]
pub struct Generator {
    scenario: Scenario,
    /// `MIXTURE_COMPONENTS` rows of X means followed by as many Y means.
    means: Vec<f64>,
}

impl Generator {
    /// Draws any per-instance structure from `structure_seed`.
    pub fn new(scenario: Scenario, structure_seed: u64) -> Result<Self> {
        scenario.validate()?;
        let means = match scenario {
            Scenario::Mixture1000 { .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive(structure_seed, &[tag("mixture-means")]));
                (0..2 * MIXTURE_COMPONENTS * MIXTURE_DIM)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            _ => Vec::new(),
        };
        Ok(Self { scenario, means })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Draws `n` paired samples.
    pub fn sample(&self, n: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, 0);
        let rng = &mut rng;
        let (px, py) = self.scenario.dims();
        let mut xs = Vec::with_capacity(n * px);
        let mut ys = Vec::with_capacity(n * py);
        for _ in 0..n {
            self.draw_pair(rng, &mut xs, &mut ys);
        }
        Ok((Dataset::new(xs, n, px)?, Dataset::new(ys, n, py)?))
    }

    fn draw_pair(&self, rng: &mut ChaCha8Rng, xs: &mut Vec<f64>, ys: &mut Vec<f64>) {
        match self.scenario {
            Scenario::W => {
                let u = uniform(rng);
                xs.push(u);
                ys.push(4.0 * (u * u - 0.5).powi(2) + jitter(rng));
            }
            Scenario::Diamond => {
                let (u, v) = (uniform(rng), uniform(rng));
                xs.push((u + v) * FRAC_1_SQRT_2);
                ys.push((u - v) * FRAC_1_SQRT_2);
            }
            Scenario::Parabola => {
                let u = uniform(rng);
                xs.push(u);
                ys.push(u * u + jitter(rng));
            }
            Scenario::TwoParabolas => {
                let u = uniform(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                xs.push(u);
                ys.push(sign * (u * u + jitter(rng)));
            }
            Scenario::Circle => {
                let theta = rng.random::<f64>() * TAU;
                xs.push(theta.cos() + jitter(rng));
                ys.push(theta.sin() + jitter(rng));
            }
            Scenario::FourClouds => {
                xs.push(cloud(rng));
                ys.push(cloud(rng));
            }
            Scenario::LogSquare5 => {
                for _ in 0..5 {
                    let x = normal(rng);
                    xs.push(x);
                    ys.push((x * x).ln());
                }
            }
            Scenario::Multiplicative5 => {
                for _ in 0..5 {
                    let x = normal(rng);
                    xs.push(x);
                    ys.push(x * normal(rng));
                }
            }
            Scenario::Quadratic { m1, beta1, beta2, sigma2 } => {
                let sd = sigma2.sqrt();
                for j in 0..5 {
                    let x = normal(rng);
                    let eps = sd * normal(rng);
                    xs.push(x);
                    ys.push(if j < m1 { beta1 * x + beta2 * x * x + eps } else { eps });
                }
            }
            Scenario::BlockCorrelated100 { index_set } => {
                let start = xs.len();
                for block in 0..BLOCK_DIM / BLOCK_SIZE {
                    let rho = 0.9 - 0.1 * block as f64;
                    let shared = normal(rng);
                    for _ in 0..BLOCK_SIZE {
                        xs.push(rho.sqrt() * shared + (1.0 - rho).max(0.0).sqrt() * normal(rng));
                    }
                }
                let signal = index_set.indices();
                let noise_sd = BLOCK_NOISE_VAR.sqrt();
                for j in 0..BLOCK_DIM {
                    let eps = noise_sd * normal(rng);
                    let x = xs[start + j];
                    ys.push(if signal.contains(&j) { x + 4.0 * x * x + eps } else { eps });
                }
            }
            Scenario::Mixture1000 { noise } => {
                let c = rng.random_range(0..MIXTURE_COMPONENTS);
                let mx = &self.means[c * MIXTURE_DIM..(c + 1) * MIXTURE_DIM];
                let off = MIXTURE_COMPONENTS * MIXTURE_DIM;
                let my = &self.means[off + c * MIXTURE_DIM..off + (c + 1) * MIXTURE_DIM];
                push_noisy(rng, noise, mx, xs);
                push_noisy(rng, noise, my, ys);
            }
            Scenario::Copy => {
                let x = normal(rng);
                xs.push(x);
                ys.push(x);
            }
            Scenario::ConstantY => {
                xs.push(normal(rng));
                ys.push(0.0);
            }
        }
    }
}

/// One-shot generation; mixture means are drawn from `seed` as well.
pub fn generate(scenario: Scenario, n: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    Generator::new(scenario, seed)?.sample(n, seed)
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

#[inline]
fn jitter(rng: &mut ChaCha8Rng) -> f64 {
    JITTER_SD * normal(rng)
}

fn cloud(rng: &mut ChaCha8Rng) -> f64 {
    let center = if rng.random::<bool>() { 1.0 } else { -1.0 };
    center + CLOUD_SD * normal(rng)
}

// Coordinatewise-independent heavy-tailed noise around `mean`.
fn push_noisy(rng: &mut ChaCha8Rng, noise: Noise, mean: &[f64], out: &mut Vec<f64>) {
    for &m in mean {
        let e = match noise {
            Noise::Normal => normal(rng),
            Noise::Cauchy => normal(rng) / normal(rng),
            Noise::T3 => {
                let chi2: f64 = (0..3).map(|_| normal(rng).powi(2)).sum();
                normal(rng) / (chi2 / 3.0).sqrt()
            }
        };
        out.push(m + e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(ds: &Dataset, j: usize) -> Vec<f64> {
        ds.rows().map(|r| r[j]).collect()
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    /// E[log Z^2] for Z ~ N(0, 1) by midpoint quadrature of the density,
    /// substituting z = e^s to tame the log singularity at 0.
    fn expected_log_chi2_quadrature() -> f64 {
        let (lo, hi, steps) = (-40.0f64, 4.0f64, 400_000);
        let h = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for k in 0..steps {
            let s = lo + (k as f64 + 0.5) * h;
            let z = s.exp();
            let density = 2.0 * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            acc += 2.0 * s * density * z * h;
        }
        acc
    }

    #[test]
    fn all_names_parse_and_round_trip() {
        for name in SCENARIO_NAMES {
            let s = Scenario::from_name(name).unwrap();
            if !matches!(s, Scenario::Quadratic { .. }) {
                assert_eq!(&s.name(), name);
            }
        }
        let err = Scenario::from_name("spiral").unwrap_err();
        assert!(err.to_string().contains("four_clouds"), "{err}");
    }

    #[test]
    fn dimensions_match_scenario() {
        for name in SCENARIO_NAMES {
            let s = Scenario::from_name(name).unwrap();
            let (x, y) = generate(s, 7, 1).unwrap();
            assert_eq!((x.n(), y.n()), (7, 7));
            assert_eq!((x.dim(), y.dim()), s.dims(), "{name}");
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(generate(Scenario::quadratic(6, 1.0, 1.0, 1.0), 10, 1).is_err());
        assert!(generate(Scenario::quadratic(2, 1.0, 1.0, -1.0), 10, 1).is_err());
        assert!(generate(Scenario::Circle, 0, 1).is_err());
    }

    #[test]
    fn reproducible_per_seed() {
        for name in ["circle", "mixture1000_t3", "block100_strong", "log_square5"] {
            let s = Scenario::from_name(name).unwrap();
            assert_eq!(generate(s, 20, 9).unwrap(), generate(s, 20, 9).unwrap());
            assert_ne!(generate(s, 20, 9).unwrap().0, generate(s, 20, 10).unwrap().0);
        }
    }

    #[test]
    fn mixture_means_fixed_per_generator() {
        let g = Generator::new(Scenario::Mixture1000 { noise: Noise::Normal }, 3).unwrap();
        let h = Generator::new(Scenario::Mixture1000 { noise: Noise::Normal }, 3).unwrap();
        assert_eq!(g.means, h.means);
        assert_eq!(g.means.len(), 2 * MIXTURE_COMPONENTS * MIXTURE_DIM);
        // different sample seeds share the component centers
        let (a, _) = g.sample(400, 1).unwrap();
        let (b, _) = g.sample(400, 2).unwrap();
        let center = |ds: &Dataset| mean(&column(ds, 0));
        let means0: Vec<f64> = (0..MIXTURE_COMPONENTS).map(|c| g.means[c * MIXTURE_DIM]).collect();
        assert!((center(&a) - center(&b)).abs() < 0.3);
        assert!((center(&a) - mean(&means0)).abs() < 0.3);
    }

    #[test]
    fn four_clouds_uncorrelated() {
        let (x, y) = generate(Scenario::FourClouds, 10_000, 5).unwrap();
        assert!(correlation(&column(&x, 0), &column(&y, 0)).abs() < 0.03);
    }

    #[test]
    fn circle_radius_moment() {
        let (x, y) = generate(Scenario::Circle, 10_000, 6).unwrap();
        let r2: Vec<f64> = x.rows().zip(y.rows()).map(|(a, b)| a[0] * a[0] + b[0] * b[0]).collect();
        assert!((mean(&r2) - (1.0 + 2.0 * JITTER_SD * JITTER_SD)).abs() < 0.02);
    }

    #[test]
    fn log_square_marginal_mean() {
        let analytic = -(0.577_215_664_901_532_9 + std::f64::consts::LN_2);
        assert!((expected_log_chi2_quadrature() - analytic).abs() < 1e-6);
        let (_, y) = generate(Scenario::LogSquare5, 10_000, 7).unwrap();
        for j in 0..5 {
            assert!((mean(&column(&y, j)) - analytic).abs() < 0.05, "coordinate {j}");
        }
    }

    #[test]
    fn block_structure_correlations() {
        let (x, y) = generate(Scenario::BlockCorrelated100 { index_set: BlockIndexSet::Null }, 4000, 8).unwrap();
        // within the first block 0.9, across blocks 0, last block 0
        assert!((correlation(&column(&x, 0), &column(&x, 1)) - 0.9).abs() < 0.03);
        assert!(correlation(&column(&x, 0), &column(&x, 10)).abs() < 0.05);
        assert!(correlation(&column(&x, 90), &column(&x, 91)).abs() < 0.05);
        let var = |v: &[f64]| mean(&v.iter().map(|a| a * a).collect::<Vec<_>>());
        assert!((var(&column(&y, 3)) - 9.0).abs() < 0.6);
    }

    #[test]
    fn quadratic_null_has_no_signal() {
        let (x, y) = generate(Scenario::quadratic(0, 0.0, 0.0, 1.0), 5000, 9).unwrap();
        for j in 0..5 {
            assert!(correlation(&column(&x, j), &column(&y, j)).abs() < 0.05);
        }
        let (x, y) = generate(Scenario::quadratic(2, 3.0, 0.0, 1.0), 5000, 9).unwrap();
        assert!(correlation(&column(&x, 0), &column(&y, 0)) > 0.9);
        assert!(correlation(&column(&x, 2), &column(&y, 2)).abs() < 0.05);
    }

    #[test]
    fn degenerate_scenarios() {
        let (x, y) = generate(Scenario::Copy, 10, 1).unwrap();
        assert_eq!(x, y);
        let (_, y) = generate(Scenario::ConstantY, 10, 1).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
        assert!(Scenario::ConstantY.is_null() && Scenario::FourClouds.is_null());
        assert!(!Scenario::Circle.is_null());
    }
}
