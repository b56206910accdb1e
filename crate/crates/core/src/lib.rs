//! Distance-rank test of independence between random vectors.
//!
//! The crate computes a statistic that sums 2x2 chi-square (or
//! likelihood-ratio) scores over every ordered pair of samples, where each
//! table cross-classifies the remaining samples by "closer than the probe in
//! X" and "closer than the probe in Y" around a center sample. It ships a
//! cubic reference implementation, an `O(n^2 log n)` implementation built on
//! merge-sort inversion counting, a permutation test, a distance covariance
//! baseline, synthetic scenarios and a Monte-Carlo power harness.
//!
//! ```
//! use hhg::{rank_dataset, permutation_pvalue, Dataset, Metric, PermutationPlan, StatisticKind};
//!
//! let x = Dataset::from_column(&[0.1, 0.5, 0.9, 1.3, 1.7, 2.1, 2.5, 2.9]).unwrap();
//! let y = x.map(|v| (v - 1.5).powi(2)).unwrap();
//! let (rx, ry) = (rank_dataset(&x, Metric::L2), rank_dataset(&y, Metric::L2));
//! let res = permutation_pvalue(&rx, &ry, StatisticKind::Pearson, &PermutationPlan::new(199, 7)).unwrap();
//! assert!(res.p_value <= 1.0);
//! ```

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod dcov;
pub mod error;
pub mod inversions;
pub mod permutation;
pub mod power;
pub mod scenarios;
pub mod seed;
pub mod selftest;
pub mod statistic;

pub use bench::{run_bench, BenchConfig, BenchRow};
pub use dataset::{distance_matrix, load_csv, parse_csv, rank_dataset, rank_table, Dataset, DistanceMatrix, Metric, RankTable};
pub use dcov::{dcov_pvalue, dcov_statistic, CenteredDistances};
pub use error::{Error, Result};
pub use inversions::{inversions_mergesort, inversions_naive, InversionCounts, Permutation};
pub use scenarios::{generate, BlockIndexSet, Generator, Noise, Scenario};
pub use power::{
    emit_table, estimate_power, estimate_power_with_progress, method_seed, parse_json_table, simulation_seed, structure_seed,
    PowerRow, PowerSpec, TableFormat,
};
pub use permutation::{permutation_pvalue, relabel_rank_table, Estimator, Method, PermutationPlan, TestResult};
pub use selftest::{run_selftest, run_selftest_with, SuiteReport};
pub use statistic::{
    contingency_counts_naive, hhg_statistic_fast, hhg_statistic_naive, lr_s, pearson_s, ContingencyCounts,
    StatisticKind, StatisticValue,
};
