//! Monte-Carlo permutation tests.
//!
//! Replicate `b` relabels the Y sample by a uniform random permutation drawn
//! from stream `b` of the generator keyed by the plan's seed. Rank tables are
//! relabeled, never recomputed from distances. Replicates run on the rayon
//! pool and are reduced by an integer count, so the exceed count does not
//! depend on the number of workers.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RankTable;
use crate::error::{Error, Result};
use crate::inversions::Permutation;
use crate::seed::stream_rng;
use crate::statistic::{fast_total, hhg_statistic_fast, CenterWorkspace, StatisticKind};

pub const DEFAULT_REPLICATES: usize = 1000;

/// How the exceed count becomes a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Estimator {
    /// `(1 + exceed) / (1 + B)`; never 0.
    #[default]
    #[serde(rename = "add-one")]
    AddOne,
    /// `exceed / B`.
    #[serde(rename = "raw")]
    RawFraction,
}

impl Estimator {
    pub fn p_value(self, exceed: usize, replicates: usize) -> f64 {
        match self {
            Estimator::AddOne => (1 + exceed) as f64 / (1 + replicates) as f64,
            Estimator::RawFraction => exceed as f64 / replicates as f64,
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::AddOne => "add-one",
            Estimator::RawFraction => "raw",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "add-one" | "addone" => Ok(Estimator::AddOne),
            "raw" | "raw-fraction" => Ok(Estimator::RawFraction),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator `{other}` (expected add-one or raw)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub replicates: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl PermutationPlan {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            estimator: Estimator::AddOne,
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::ZeroReplicates);
        }
        Ok(())
    }
}

/// The statistic a permutation test is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "hhg-pearson")]
    HhgPearson,
    #[serde(rename = "hhg-lr")]
    HhgLr,
    #[serde(rename = "dcov")]
    Dcov,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::HhgPearson, Method::HhgLr, Method::Dcov];

    pub fn name(self) -> &'static str {
        match self {
            Method::HhgPearson => "hhg-pearson",
            Method::HhgLr => "hhg-lr",
            Method::Dcov => "dcov",
        }
    }

    pub fn statistic_kind(self) -> Option<StatisticKind> {
        match self {
            Method::HhgPearson => Some(StatisticKind::Pearson),
            Method::HhgLr => Some(StatisticKind::LikelihoodRatio),
            Method::Dcov => None,
        }
    }
}

impl From<StatisticKind> for Method {
    fn from(kind: StatisticKind) -> Self {
        match kind {
            StatisticKind::Pearson => Method::HhgPearson,
            StatisticKind::LikelihoodRatio => Method::HhgLr,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hhg" | "hhg-pearson" | "pearson" => Ok(Method::HhgPearson),
            "hhg-lr" | "lr" => Ok(Method::HhgLr),
            "dcov" => Ok(Method::Dcov),
            other => Err(Error::InvalidParameter(format!(
                "unknown method `{other}` (expected hhg, hhg-lr or dcov)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: Method,
    pub n: usize,
    pub observed: f64,
    pub exceed_count: usize,
    pub p_value: f64,
    pub plan: PermutationPlan,
    pub elapsed: Duration,
}

/// Uniform random permutation of `0..n` for replicate `replicate`.
pub fn draw_permutation(n: usize, seed: u64, replicate: u64) -> Vec<usize> {
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(&mut stream_rng(seed, replicate));
    sigma
}

/// Rank table of the dataset in which sample `sigma[i]` holds sample `i`'s
/// Y vector.
pub fn relabel_rank_table(ry: &RankTable, sigma: &Permutation) -> Result<RankTable> {
    if sigma.len() != ry.n() {
        return Err(Error::InvalidPermutation(format!(
            "length {} does not match {} samples",
            sigma.len(),
            ry.n()
        )));
    }
    let mut out = RankTable::default();
    out.relabel_from(ry, sigma.as_slice());
    Ok(out)
}

/// Replicates whose statistic is within this relative distance below the
/// observed value count as ties; summation order differs between relabelings.
const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn at_least(replicate: f64, observed: f64) -> bool {
    replicate >= observed - TIE_TOLERANCE * observed.abs()
}

/// Counts replicates in `0..replicates` for which `exceeds(b)` holds.
pub(crate) fn count_exceeding<W, I, F>(replicates: usize, init: I, exceeds: F) -> usize
where
    I: Fn() -> W + Sync + Send,
    F: Fn(&mut W, u64) -> bool + Sync + Send,
{
    (0..replicates as u64)
        .into_par_iter()
        .map_init(init, |w, b| exceeds(w, b) as usize)
        .sum()
}

/// Permutation p-value of the distance-rank statistic.
pub fn permutation_pvalue(
    rx: &RankTable,
    ry: &RankTable,
    kind: StatisticKind,
    plan: &PermutationPlan,
) -> Result<TestResult> {
    plan.validate()?;
    let start = Instant::now();
    let observed = hhg_statistic_fast(rx, ry, kind)?;
    let n = observed.n;

    let exceed_count = count_exceeding(
        plan.replicates,
        || (RankTable::default(), CenterWorkspace::default()),
        |(relabeled, ws), b| {
            let sigma = draw_permutation(n, plan.seed, b);
            relabeled.relabel_from(ry, &sigma);
            at_least(fast_total(rx, relabeled, kind, ws), observed.t)
        },
    );

    Ok(TestResult {
        method: kind.into(),
        n,
        observed: observed.t,
        exceed_count,
        p_value: plan.estimator.p_value(exceed_count, plan.replicates),
        plan: *plan,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{rank_dataset, Dataset, Metric};
    use crate::statistic::hhg_statistic_naive;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(seed: u64, n: usize, d: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new((0..n * d).map(|_| rng.random::<f64>()).collect(), n, d).unwrap()
    }

    #[test]
    fn estimators() {
        assert_eq!(Estimator::AddOne.p_value(0, 99), 0.01);
        assert_eq!(Estimator::AddOne.p_value(99, 99), 1.0);
        assert_eq!(Estimator::RawFraction.p_value(0, 50), 0.0);
        assert_eq!(Estimator::RawFraction.p_value(25, 50), 0.5);
    }

    #[test]
    fn zero_replicates_rejected() {
        let r = rank_dataset(&random_dataset(1, 5, 1), Metric::L2);
        let err = permutation_pvalue(&r, &r, StatisticKind::Pearson, &PermutationPlan::new(0, 1));
        assert!(matches!(err, Err(Error::ZeroReplicates)));
        let small = rank_dataset(&random_dataset(1, 2, 1), Metric::L2);
        assert!(permutation_pvalue(&small, &small, StatisticKind::Pearson, &PermutationPlan::new(5, 1)).is_err());
    }

    #[test]
    fn identity_relabel_is_noop() {
        let r = rank_dataset(&random_dataset(3, 12, 2), Metric::L2);
        assert_eq!(relabel_rank_table(&r, &Permutation::identity(12)).unwrap(), r);
        assert!(relabel_rank_table(&r, &Permutation::identity(11)).is_err());
    }

    #[test]
    fn transposition_matches_swapped_data() {
        let y = random_dataset(4, 4, 2);
        let r = rank_dataset(&y, Metric::L2);
        let sigma = Permutation::new(vec![0, 2, 1, 3]).unwrap();
        let swapped = y.permute_rows(sigma.as_slice()).unwrap();
        assert_eq!(relabel_rank_table(&r, &sigma).unwrap(), rank_dataset(&swapped, Metric::L2));
    }

    #[test]
    fn three_samples_always_give_p_one() {
        // every table holds a single sample, so T = 0 for all relabelings
        let x = rank_dataset(&random_dataset(5, 3, 1), Metric::L2);
        let y = rank_dataset(&random_dataset(6, 3, 1), Metric::L2);
        let res = permutation_pvalue(&x, &y, StatisticKind::Pearson, &PermutationPlan::new(50, 9)).unwrap();
        assert_eq!(res.observed, 0.0);
        assert_eq!(res.exceed_count, 50);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn strong_dependence_hits_add_one_floor() {
        let x = random_dataset(8, 30, 2);
        let rx = rank_dataset(&x, Metric::L2);
        let res = permutation_pvalue(&rx, &rx, StatisticKind::Pearson, &PermutationPlan::new(99, 3)).unwrap();
        assert_eq!(res.exceed_count, 0);
        assert_eq!(res.p_value, 0.01);
        let raw = PermutationPlan::new(99, 3).with_estimator(Estimator::RawFraction);
        assert_eq!(permutation_pvalue(&rx, &rx, StatisticKind::Pearson, &raw).unwrap().p_value, 0.0);
    }

    #[test]
    fn constant_y_is_handled() {
        let x = rank_dataset(&random_dataset(10, 15, 1), Metric::L2);
        let y = rank_dataset(&Dataset::from_column(&[2.0; 15]).unwrap(), Metric::L2);
        for i in 0..15 {
            let expected: Vec<u32> = (0..15u32).filter(|&k| k as usize != i).collect();
            assert_eq!(y.order(i), expected.as_slice());
        }
        // relabeling a constant sample changes nothing, so every replicate ties
        let res = permutation_pvalue(&x, &y, StatisticKind::Pearson, &PermutationPlan::new(40, 2)).unwrap();
        assert_eq!(res.exceed_count, 40);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn exceed_count_independent_of_worker_count() {
        let x = rank_dataset(&random_dataset(11, 25, 2), Metric::L2);
        let y = rank_dataset(&random_dataset(12, 25, 2), Metric::L2);
        let plan = PermutationPlan::new(200, 42);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| permutation_pvalue(&x, &y, StatisticKind::Pearson, &plan).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.exceed_count, b.exceed_count);
        assert_eq!(a.observed.to_bits(), b.observed.to_bits());
        // replicates evaluated in reverse order give the same count
        let n = 25;
        let reversed = (0..200u64)
            .rev()
            .filter(|&b| {
                let sigma = Permutation::new(draw_permutation(n, 42, b)).unwrap();
                let r = relabel_rank_table(&y, &sigma).unwrap();
                at_least(hhg_statistic_fast(&x, &r, StatisticKind::Pearson).unwrap().t, a.observed)
            })
            .count();
        assert_eq!(reversed, a.exceed_count);
    }

    #[test]
    fn draws_are_permutations() {
        for b in 0..20 {
            assert!(Permutation::new(draw_permutation(17, 5, b)).is_ok());
        }
        assert_ne!(draw_permutation(17, 5, 0), draw_permutation(17, 5, 1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn relabel_equals_recompute(seed in any::<u64>(), n in 3usize..31, b in any::<u64>(), ties in any::<bool>()) {
            let mut y = random_dataset(seed, n, 2);
            if ties {
                y = y.map(|v| (v * 3.0).round()).unwrap();
            }
            let x = random_dataset(seed ^ 1, n, 1);
            let sigma = Permutation::new(draw_permutation(n, seed, b)).unwrap();
            let relabeled = relabel_rank_table(&rank_dataset(&y, Metric::L2), &sigma).unwrap();
            let recomputed = rank_dataset(&y.permute_rows(sigma.as_slice()).unwrap(), Metric::L2);
            prop_assert_eq!(&relabeled, &recomputed);
            let rx = rank_dataset(&x, Metric::L2);
            let a = hhg_statistic_fast(&rx, &relabeled, StatisticKind::Pearson).unwrap().t;
            let c = hhg_statistic_naive(&rx, &recomputed, StatisticKind::Pearson).unwrap().t;
            prop_assert!((a - c).abs() <= 1e-9 * c.max(1.0));
        }
    }
}
