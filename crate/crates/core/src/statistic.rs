//! The distance-rank association statistic.
//!
//! For a center `i` and a probe `j != i`, every remaining sample `k` is
//! classified by whether it precedes `j` in the X ordering around `i` and
//! whether it precedes `j` in the Y ordering around `i`. The 2x2 table of
//! those `n - 2` outcomes is scored with Pearson's chi-square (or the
//! likelihood-ratio statistic) and the scores are summed over all `n(n - 1)`
//! ordered pairs.
//!
//! [`hhg_statistic_naive`] builds every table by direct counting in
//! `O(n^3)`. [`hhg_statistic_fast`] gets the same tables in `O(n^2 log n)`:
//! around each center, walk the samples in X order, record each one's Y rank,
//! and read the off-diagonal cell from the inversion count at that position.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RankTable;
use crate::error::{Error, Result};
use crate::inversions::{count_inversions, MergeScratch};

/// Sample count from which the fast statistic fans centers out over the pool.
const PARALLEL_CENTERS_MIN_N: usize = 192;

/// Cells of the 2x2 table for center `i` and probe `j`.
///
/// Row 1: `k` precedes `j` around `i` in X. Column 1: same in Y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContingencyCounts {
    pub center: usize,
    pub probe: usize,
    pub a11: u32,
    pub a12: u32,
    pub a21: u32,
    pub a22: u32,
}

impl ContingencyCounts {
    pub fn total(&self) -> u32 {
        self.a11 + self.a12 + self.a21 + self.a22
    }

    pub fn row_margins(&self) -> (u32, u32) {
        (self.a11 + self.a12, self.a21 + self.a22)
    }

    pub fn col_margins(&self) -> (u32, u32) {
        (self.a11 + self.a21, self.a12 + self.a22)
    }

    fn has_zero_margin(&self) -> bool {
        let (r1, r2) = self.row_margins();
        let (c1, c2) = self.col_margins();
        r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0
    }
}

/// Which 2x2 score is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    #[default]
    Pearson,
    #[serde(rename = "lr")]
    LikelihoodRatio,
}

impl StatisticKind {
    #[inline]
    pub fn score(self, c: &ContingencyCounts) -> f64 {
        match self {
            StatisticKind::Pearson => pearson_s(c),
            StatisticKind::LikelihoodRatio => lr_s(c),
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatisticKind::Pearson => "pearson",
            StatisticKind::LikelihoodRatio => "lr",
        })
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" | "chisq" => Ok(StatisticKind::Pearson),
            "lr" | "likelihood-ratio" => Ok(StatisticKind::LikelihoodRatio),
            other => Err(Error::InvalidParameter(format!(
                "unknown statistic `{other}` (expected pearson or lr)"
            ))),
        }
    }
}

/// Value of the summed statistic for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub t: f64,
    pub n: usize,
    pub kind: StatisticKind,
}

/// Pearson chi-square of a 2x2 table; 0 when any margin is empty.
#[inline]
pub fn pearson_s(c: &ContingencyCounts) -> f64 {
    if c.has_zero_margin() {
        return 0.0;
    }
    let (r1, r2) = c.row_margins();
    let (c1, c2) = c.col_margins();
    let cross = c.a12 as i64 * c.a21 as i64 - c.a11 as i64 * c.a22 as i64;
    let cross = cross as f64;
    c.total() as f64 * cross * cross / (r1 as f64 * r2 as f64 * c1 as f64 * c2 as f64)
}

/// Likelihood-ratio (G) statistic of a 2x2 table; 0 when any margin is empty.
#[inline]
pub fn lr_s(c: &ContingencyCounts) -> f64 {
    if c.has_zero_margin() {
        return 0.0;
    }
    let total = c.total() as f64;
    let (r1, r2) = c.row_margins();
    let (c1, c2) = c.col_margins();
    let term = |a: u32, r: u32, col: u32| {
        if a == 0 {
            0.0
        } else {
            let a = a as f64;
            a * (a * total / (r as f64 * col as f64)).ln()
        }
    };
    let g = 2.0 * (term(c.a11, r1, c1) + term(c.a12, r1, c2) + term(c.a21, r2, c1) + term(c.a22, r2, c2));
    // rounding can leave an independent table a hair below zero
    g.max(0.0)
}

fn check_tables(rx: &RankTable, ry: &RankTable) -> Result<usize> {
    if rx.n() != ry.n() {
        return Err(Error::SampleSizeMismatch { x: rx.n(), y: ry.n() });
    }
    if rx.n() < 3 {
        return Err(Error::TooFewSamples { n: rx.n(), min: 3 });
    }
    Ok(rx.n())
}

/// Counts the table for `(center, probe)` by visiting every other sample.
pub fn contingency_counts_naive(
    rx: &RankTable,
    ry: &RankTable,
    center: usize,
    probe: usize,
) -> Result<ContingencyCounts> {
    let n = check_tables(rx, ry)?;
    for index in [center, probe] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    if center == probe {
        return Err(Error::SameIndex(center));
    }
    Ok(counts_unchecked(rx, ry, center, probe))
}

fn counts_unchecked(rx: &RankTable, ry: &RankTable, i: usize, j: usize) -> ContingencyCounts {
    let (xr, yr) = (rx.ranks(i), ry.ranks(i));
    let (xj, yj) = (xr[j], yr[j]);
    let mut cells = [0u32; 4];
    for k in 0..xr.len() {
        if k == i || k == j {
            continue;
        }
        let in_x = xr[k] < xj;
        let in_y = yr[k] < yj;
        cells[(!in_x as usize) * 2 + !in_y as usize] += 1;
    }
    ContingencyCounts {
        center: i,
        probe: j,
        a11: cells[0],
        a12: cells[1],
        a21: cells[2],
        a22: cells[3],
    }
}

/// Reference implementation: every table counted directly, `O(n^3)`.
pub fn hhg_statistic_naive(rx: &RankTable, ry: &RankTable, kind: StatisticKind) -> Result<StatisticValue> {
    let n = check_tables(rx, ry)?;
    let per_center: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = CompensatedSum::default();
            for j in (0..n).filter(|&j| j != i) {
                acc.add(kind.score(&counts_unchecked(rx, ry, i, j)));
            }
            acc.value()
        })
        .collect();
    Ok(StatisticValue {
        t: sum_in_order(&per_center),
        n,
        kind,
    })
}

/// All tables around `center`, indexed by probe (the `center` slot is unused
/// and left zeroed), computed from inversion counts.
pub fn center_counts_fast(rx: &RankTable, ry: &RankTable, center: usize) -> Result<Vec<ContingencyCounts>> {
    let n = check_tables(rx, ry)?;
    if center >= n {
        return Err(Error::IndexOutOfRange { index: center, n });
    }
    let mut out = vec![
        ContingencyCounts {
            center,
            probe: center,
            a11: 0,
            a12: 0,
            a21: 0,
            a22: 0,
        };
        n
    ];
    let mut ws = CenterWorkspace::default();
    ws.for_each_table(rx, ry, center, |c| out[c.probe] = c);
    Ok(out)
}

/// Fast path, `O(n^2 log n)`. Produces exactly the tables of the naive path.
pub fn hhg_statistic_fast(rx: &RankTable, ry: &RankTable, kind: StatisticKind) -> Result<StatisticValue> {
    let n = check_tables(rx, ry)?;
    let t = if n >= PARALLEL_CENTERS_MIN_N {
        let per_center: Vec<f64> = (0..n)
            .into_par_iter()
            .map_init(CenterWorkspace::default, |ws, i| ws.center_sum(rx, ry, i, kind))
            .collect();
        sum_in_order(&per_center)
    } else {
        fast_total(rx, ry, kind, &mut CenterWorkspace::default())
    };
    Ok(StatisticValue { t, n, kind })
}

/// Sequential fast statistic over validated tables. Bit-identical to
/// [`hhg_statistic_fast`] on the same input.
pub(crate) fn fast_total(rx: &RankTable, ry: &RankTable, kind: StatisticKind, ws: &mut CenterWorkspace) -> f64 {
    let mut total = CompensatedSum::default();
    for i in 0..rx.n() {
        total.add(ws.center_sum(rx, ry, i, kind));
    }
    total.value()
}

/// Scratch buffers for one center of the fast path.
#[derive(Debug, Default)]
pub(crate) struct CenterWorkspace {
    y_rank: Vec<u32>,
    inv: Vec<u32>,
    merge: MergeScratch,
}

impl CenterWorkspace {
    fn center_sum(&mut self, rx: &RankTable, ry: &RankTable, center: usize, kind: StatisticKind) -> f64 {
        let mut acc = CompensatedSum::default();
        self.for_each_table(rx, ry, center, |c| acc.add(kind.score(&c)));
        acc.value()
    }

    /// Visits the table of every probe around `center`, in X order.
    #[inline]
    pub(crate) fn for_each_table(
        &mut self,
        rx: &RankTable,
        ry: &RankTable,
        center: usize,
        mut visit: impl FnMut(ContingencyCounts),
    ) {
        let n = rx.n();
        let x_order = rx.order(center);
        let y_ranks = ry.ranks(center);
        self.y_rank.clear();
        self.y_rank.extend(x_order.iter().map(|&k| y_ranks[k as usize]));
        self.inv.resize(n - 1, 0);
        count_inversions(&self.y_rank, &mut self.inv, &mut self.merge);

        let rest = (n - 2) as u32;
        for (pos, (&probe, (&q, &inv))) in x_order
            .iter()
            .zip(self.y_rank.iter().zip(self.inv.iter()))
            .enumerate()
        {
            // X-preceders: pos; Y-preceders: q - 1; X-preceders later in Y: inv
            let row1 = pos as u32;
            let a12 = inv;
            let a11 = row1 - inv;
            let a21 = q - 1 - a11;
            let a22 = rest - row1 - a21;
            visit(ContingencyCounts {
                center,
                probe: probe as usize,
                a11,
                a12,
                a21,
                a22,
            });
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums per-center partials in index order so the total does not depend on
/// how the centers were scheduled.
pub(crate) fn sum_in_order(parts: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    parts.iter().for_each(|&p| acc.add(p));
    acc.value()
}
