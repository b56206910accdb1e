//! Wall-clock scaling of the fast and naive statistics.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{rank_dataset, Dataset, Metric, RankTable};
use crate::error::{Error, Result};
use crate::seed::stream_rng;
use crate::statistic::{hhg_statistic_fast, hhg_statistic_naive, StatisticKind};

pub const DEFAULT_SIZES: &[usize] = &[100, 200, 400, 800, 1600];
pub const DEFAULT_NAIVE_MAX: usize = 800;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub repeats: usize,
    pub naive_max: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repeats: 3,
            naive_max: DEFAULT_NAIVE_MAX,
            seed: 0,
        }
    }
}

/// Best-of-`repeats` timings at one sample size, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub fast_seconds: f64,
    pub naive_seconds: Option<f64>,
}

impl BenchRow {
    pub fn speedup(&self) -> Option<f64> {
        self.naive_seconds.map(|naive| naive / self.fast_seconds)
    }
}

fn tables(n: usize, seed: u64) -> Result<(RankTable, RankTable)> {
    let mut rng = stream_rng(seed, n as u64);
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x.chunks(2).map(|p| p[0] * p[1] + 0.1 * rng.random_range(-1.0..1.0)).collect();
    let x = Dataset::new(x, n, 2)?;
    let y = Dataset::from_column(&y)?;
    Ok((rank_dataset(&x, Metric::L2), rank_dataset(&y, Metric::L2)))
}

fn best_of(repeats: usize, mut f: impl FnMut() -> Result<f64>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        black_box(f()?);
        best = best.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Times the fast statistic at every size, and the naive one up to
/// `config.naive_max`. Ranking is excluded from the timings.
pub fn run_bench(sizes: &[usize], config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no sample sizes to time".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let (rx, ry) = tables(n, config.seed)?;
            let fast_seconds = best_of(config.repeats, || Ok(hhg_statistic_fast(&rx, &ry, StatisticKind::Pearson)?.t))?;
            let naive_seconds = if n <= config.naive_max {
                Some(best_of(1, || Ok(hhg_statistic_naive(&rx, &ry, StatisticKind::Pearson)?.t))?)
            } else {
                None
            };
            Ok(BenchRow { n, fast_seconds, naive_seconds })
        })
        .collect()
}

/// Ratio `time(n) / time(n / 2)` for every size whose half was also timed.
pub fn doubling_ratios(rows: &[BenchRow]) -> Vec<(usize, f64)> {
    rows.iter()
        .filter_map(|r| {
            let half = rows.iter().find(|h| 2 * h.n == r.n)?;
            Some((r.n, r.fast_seconds / half.fast_seconds))
        })
        .collect()
}

pub fn format_bench(rows: &[BenchRow]) -> String {
    let mut out = String::from("n\tfast_s\tnaive_s\tspeedup\tdoubling\n");
    let ratios = doubling_ratios(rows);
    for r in rows {
        let naive = r.naive_seconds.map_or("-".to_string(), |s| format!("{s:.6}"));
        let speedup = r.speedup().map_or("-".to_string(), |s| format!("{s:.1}"));
        let doubling = ratios
            .iter()
            .find(|(n, _)| *n == r.n)
            .map_or("-".to_string(), |(_, q)| format!("{q:.2}"));
        let _ = writeln!(out, "{}\t{:.6}\t{naive}\t{speedup}\t{doubling}", r.n, r.fast_seconds);
    }
    out
}
