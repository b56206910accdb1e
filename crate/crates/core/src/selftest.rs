//! Built-in verification suites: every fast path checked against a direct
//! reference computation on seeded random inputs.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{distance_matrix, rank_dataset, Dataset, Metric, RankTable};
use crate::dcov::dcov_statistic;
use crate::error::Result;
use crate::inversions::{inversions_mergesort, inversions_naive, Permutation};
use crate::permutation::{draw_permutation, relabel_rank_table};
use crate::seed::{derive, stream_rng, tag};
use crate::statistic::{center_counts_fast, contingency_counts_naive, hhg_statistic_fast, ContingencyCounts, StatisticKind};

/// Per-center table function under test; see [`center_counts_fast`].
pub type CenterCountsFn = dyn Fn(&RankTable, &RankTable, usize) -> Result<Vec<ContingencyCounts>>;

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "PASS  {:<22} {} checks", self.name, self.checks),
            Some(msg) => write!(f, "FAIL  {:<22} {msg}", self.name),
        }
    }
}

/// Runs all suites with the library's own fast path.
pub fn run_selftest(seed: u64) -> Vec<SuiteReport> {
    run_selftest_with(seed, &center_counts_fast)
}

/// Runs all suites, checking `counts` in place of the library fast path.
pub fn run_selftest_with(seed: u64, counts: &CenterCountsFn) -> Vec<SuiteReport> {
    vec![
        fast_vs_naive(derive(seed, &[tag("fast-vs-naive")]), counts),
        inversions(derive(seed, &[tag("inversions")])),
        relabel_vs_recompute(derive(seed, &[tag("relabel")])),
        dcov_vs_definition(derive(seed, &[tag("dcov")])),
    ]
}

struct Suite {
    name: &'static str,
    checks: usize,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self { name, checks: 0 }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
        self.checks += 1;
        if ok {
            Ok(())
        } else {
            Err(msg())
        }
    }

    fn finish(self, outcome: std::result::Result<(), String>) -> SuiteReport {
        SuiteReport {
            name: self.name,
            checks: self.checks,
            failure: outcome.err(),
        }
    }
}

fn random_dataset(rng: &mut impl Rng, n: usize, d: usize, coarse: bool) -> Dataset {
    // coarse values produce plenty of tied distances
    let values = (0..n * d)
        .map(|_| {
            if coarse {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    Dataset::new(values, n, d).expect("finite values")
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn fast_vs_naive(seed: u64, counts: &CenterCountsFn) -> SuiteReport {
    let mut suite = Suite::new("fast-vs-naive");
    let mut rng = stream_rng(seed, 0);
    let outcome = (|| {
        for case in 0..60 {
            let n = rng.random_range(3..=40);
            let metric = Metric::ALL[case % 3];
            let coarse = case % 4 == 3;
            let x = random_dataset(&mut rng, n, [1, 2, 5][case % 3], coarse);
            let y = random_dataset(&mut rng, n, [1, 2, 5][(case / 3) % 3], coarse);
            let (rx, ry) = (rank_dataset(&x, metric), rank_dataset(&y, metric));
            for kind in [StatisticKind::Pearson, StatisticKind::LikelihoodRatio] {
                let mut total = 0.0;
                let mut reference = 0.0;
                for i in 0..n {
                    let fast = counts(&rx, &ry, i).map_err(|e| e.to_string())?;
                    for j in (0..n).filter(|&j| j != i) {
                        let naive = contingency_counts_naive(&rx, &ry, i, j).map_err(|e| e.to_string())?;
                        suite.check(fast[j] == naive, || {
                            format!("case {case}: table ({i}, {j}) fast {:?} naive {:?}", fast[j], naive)
                        })?;
                        total += kind.score(&fast[j]);
                        reference += kind.score(&naive);
                    }
                }
                suite.check(close(total, reference, 1e-9), || {
                    format!("case {case}: {kind} total {total} vs {reference}")
                })?;
            }
        }
        Ok(())
    })();
    suite.finish(outcome)
}

fn inversions(seed: u64) -> SuiteReport {
    let mut suite = Suite::new("inversions");
    let mut rng = stream_rng(seed, 0);
    let outcome = (|| {
        let compare = |suite: &mut Suite, pi: Permutation| {
            let (fast, slow) = (inversions_mergesort(&pi), inversions_naive(&pi));
            suite.check(fast == slow, || format!("permutation {:?}: {:?} vs {:?}", pi.as_slice(), fast.0, slow.0))
        };
        for m in 1..=7 {
            // every permutation of length m, in lexicographic order
            let mut p: Vec<usize> = (0..m).collect();
            loop {
                compare(&mut suite, Permutation::new(p.clone()).expect("valid"))?;
                let Some(k) = (0..m.saturating_sub(1)).rev().find(|&k| p[k] < p[k + 1]) else {
                    break;
                };
                let l = (k + 1..m).rev().find(|&l| p[k] < p[l]).expect("successor exists");
                p.swap(k, l);
                p[k + 1..].reverse();
            }
        }
        for m in [10, 100, 1000] {
            for _ in 0..20 {
                let mut p: Vec<usize> = (0..m).collect();
                p.shuffle(&mut rng);
                compare(&mut suite, Permutation::new(p).expect("valid"))?;
            }
        }
        Ok(())
    })();
    suite.finish(outcome)
}

fn relabel_vs_recompute(seed: u64) -> SuiteReport {
    let mut suite = Suite::new("relabel-vs-recompute");
    let mut rng = stream_rng(seed, 0);
    let outcome = (|| {
        for case in 0..40u64 {
            let n = rng.random_range(3..=30);
            let metric = Metric::ALL[case as usize % 3];
            let x = random_dataset(&mut rng, n, 2, false);
            let y = random_dataset(&mut rng, n, 1 + case as usize % 3, case % 2 == 1);
            let rx = rank_dataset(&x, metric);
            let ry = rank_dataset(&y, metric);
            let sigma = draw_permutation(n, seed, case);
            let relabeled = relabel_rank_table(&ry, &Permutation::new(sigma.clone()).expect("valid"))
                .map_err(|e| e.to_string())?;
            let recomputed = rank_dataset(&y.permute_rows(&sigma).map_err(|e| e.to_string())?, metric);
            suite.check(relabeled == recomputed, || format!("case {case}: relabeled ranks differ from recomputed"))?;
            let a = hhg_statistic_fast(&rx, &relabeled, StatisticKind::Pearson).map_err(|e| e.to_string())?;
            let b = hhg_statistic_fast(&rx, &recomputed, StatisticKind::Pearson).map_err(|e| e.to_string())?;
            suite.check(a.t == b.t, || format!("case {case}: T {} vs {}", a.t, b.t))?;
        }
        Ok(())
    })();
    suite.finish(outcome)
}

// Direct V-statistic, each centered entry built from freshly summed means.
fn dcov_direct(x: &Dataset, y: &Dataset) -> f64 {
    let n = x.n();
    let nf = n as f64;
    let centered = |ds: &Dataset| {
        let d = |j: usize, k: usize| Metric::L2.distance(ds.row(j), ds.row(k));
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let row: f64 = (0..n).map(|l| d(j, l)).sum::<f64>() / nf;
                let col: f64 = (0..n).map(|l| d(l, k)).sum::<f64>() / nf;
                let all: f64 = (0..n).map(|l| (0..n).map(|m| d(l, m)).sum::<f64>()).sum::<f64>() / (nf * nf);
                out[j * n + k] = d(j, k) - row - col + all;
            }
        }
        out
    };
    let (a, b) = (centered(x), centered(y));
    a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>() / nf
}

fn dcov_vs_definition(seed: u64) -> SuiteReport {
    let mut suite = Suite::new("dcov-vs-definition");
    let mut rng = stream_rng(seed, 0);
    let outcome = (|| {
        for case in 0..20 {
            let n = rng.random_range(2..=12);
            let x = random_dataset(&mut rng, n, 1 + case % 3, false);
            let y = random_dataset(&mut rng, n, 1 + (case / 3) % 3, false);
            let fast = dcov_statistic(&distance_matrix(&x, Metric::L2), &distance_matrix(&y, Metric::L2))
                .map_err(|e| e.to_string())?;
            let direct = dcov_direct(&x, &y);
            suite.check((fast - direct).abs() <= 1e-10 * direct.abs().max(1.0), || {
                format!("case {case}: {fast} vs {direct}")
            })?;
        }
        Ok(())
    })();
    suite.finish(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_for_several_seeds() {
        for seed in [0, 1, 0xdead_beef] {
            for report in run_selftest(seed) {
                assert!(report.passed(), "{report}");
                assert!(report.checks > 0);
            }
        }
    }

    #[test]
    fn off_by_one_margins_are_caught() {
        // the lower-row cells as printed: a21 = q - a11, a22 = N - 1 - p - a21 (1-based p)
        let mutant = |rx: &RankTable, ry: &RankTable, center: usize| {
            let mut tables = center_counts_fast(rx, ry, center)?;
            let n = rx.n() as u32;
            for (probe, c) in tables.iter_mut().enumerate() {
                if probe == center {
                    continue;
                }
                let p = rx.rank(center, probe);
                let q = ry.rank(center, probe);
                c.a21 = q - c.a11;
                c.a22 = (n - 1).wrapping_sub(p).wrapping_sub(c.a21);
            }
            Ok(tables)
        };
        let reports = run_selftest_with(3, &mutant);
        let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
        assert_eq!(failed, ["fast-vs-naive"]);
    }

    #[test]
    fn report_lines() {
        let ok = SuiteReport { name: "inversions", checks: 3, failure: None };
        assert!(ok.to_string().starts_with("PASS  inversions"));
        let bad = SuiteReport { name: "inversions", checks: 1, failure: Some("boom".into()) };
        assert!(bad.to_string().starts_with("FAIL") && bad.to_string().ends_with("boom"));
    }
}
