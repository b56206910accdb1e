//! Samples, pairwise distances and per-center distance rankings.
//!
//! Every statistic in the crate consumes [`RankTable`]s. A rank table fixes a
//! strict total order of the other `n - 1` samples around each center: by
//! distance first, then by ascending sample index, so tied distances always
//! resolve the same way.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x d` matrix of finite reals, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    pub fn new(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Shape(format!("need n >= 1 and d >= 1, got {n}x{d}")));
        }
        if values.len() != n * d {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {n}x{d} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                column: pos % d,
            });
        }
        Ok(Self { values, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {d}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), d)
    }

    /// One-dimensional dataset.
    pub fn from_column(column: &[f64]) -> Result<Self> {
        Self::new(column.to_vec(), column.len(), 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    /// Applies `f` to every coordinate. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.n, self.d)
    }

    /// Returns the dataset whose row `sigma[i]` holds this dataset's row `i`.
    pub fn permute_rows(&self, sigma: &[usize]) -> Result<Self> {
        if sigma.len() != self.n {
            return Err(Error::InvalidPermutation(format!(
                "length {} does not match {} samples",
                sigma.len(),
                self.n
            )));
        }
        let mut values = vec![0.0; self.values.len()];
        for (i, &target) in sigma.iter().enumerate() {
            values[target * self.d..(target + 1) * self.d].copy_from_slice(self.row(i));
        }
        Self::new(values, self.n, self.d)
    }

    /// Writes the dataset as headerless comma-separated values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Loads a dataset from a delimited text file, one sample per line.
///
/// A single header line is skipped when any of its fields fails to parse as a
/// number. Blank lines are ignored.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file, delimiter, path)
}

/// Parses delimited text from any reader; `origin` only labels error messages.
pub fn parse_csv(reader: impl Read, delimiter: u8, origin: impl AsRef<Path>) -> Result<Dataset> {
    let origin = origin.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut n = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: origin.to_path_buf(),
            source,
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if n == 0 && width.is_none() && parsed.iter().any(Option::is_none) {
            // header line: fixes the width but contributes no data
            width = Some(parsed.len());
            continue;
        }
        let expected = *width.get_or_insert(parsed.len());
        if parsed.len() != expected {
            return Err(Error::RaggedRow {
                path: origin.to_path_buf(),
                line,
                expected,
                found: parsed.len(),
            });
        }
        for (column, (value, raw)) in parsed.into_iter().zip(record.iter()).enumerate() {
            match value {
                Some(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        path: origin.to_path_buf(),
                        line,
                        column: column + 1,
                        value: raw.to_string(),
                    })
                }
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyFile {
            path: origin.to_path_buf(),
        });
    }
    let d = width.unwrap_or(0);
    Dataset::new(values, n, d)
}

/// Norm used to measure distances between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L1,
    #[default]
    L2,
    LInf,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::L1 => diffs.sum(),
            Metric::L2 => diffs.map(|t| t * t).sum::<f64>().sqrt(),
            Metric::LInf => diffs.fold(0.0, f64::max),
        }
    }

    pub const ALL: [Metric; 3] = [Metric::L1, Metric::L2, Metric::LInf];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::LInf => "linf",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "manhattan" => Ok(Metric::L1),
            "l2" | "euclidean" => Ok(Metric::L2),
            "linf" | "max" | "chebyshev" => Ok(Metric::LInf),
            other => Err(Error::InvalidParameter(format!(
                "unknown metric `{other}` (expected l1, l2 or linf)"
            ))),
        }
    }
}

/// Symmetric `n x n` matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    dist: Vec<f64>,
    n: usize,
}

impl DistanceMatrix {
    /// Wraps a precomputed row-major matrix after checking its invariants.
    pub fn from_values(dist: Vec<f64>, n: usize) -> Result<Self> {
        if dist.len() != n * n {
            return Err(Error::Shape(format!("{} entries for a {n}x{n} matrix", dist.len())));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::Shape(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = dist[i * n + j];
                if !(v.is_finite() && v >= 0.0) || v != dist[j * n + i] {
                    return Err(Error::Shape(format!("entry ({i}, {j}) breaks symmetry or sign")));
                }
            }
        }
        Ok(Self { dist, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.dist
    }
}

/// Computes all pairwise distances of `data` under `metric`.
pub fn distance_matrix(data: &Dataset, metric: Metric) -> DistanceMatrix {
    let n = data.n();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        let a = data.row(i);
        for j in 0..i {
            let v = metric.distance(a, data.row(j));
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    DistanceMatrix { dist, n }
}

/// Per-center ordering of the other samples by distance.
///
/// Indices are zero-based; ranks run from 1 to `n - 1`. The rank of a center
/// relative to itself is stored as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankTable {
    n: usize,
    /// `n` rows of `n - 1` sample indices, nearest first.
    order: Vec<u32>,
    /// `rank[i * n + k]`: position of `k` in row `i` of `order`, 1-based.
    rank: Vec<u32>,
    /// Aligned with `order`: true where the distance equals the previous
    /// entry's. Empty when no distances tie anywhere.
    tied: Vec<bool>,
}

impl RankTable {
    /// Builds a table from explicit per-center orders, validating that each
    /// row is a permutation of the other indices.
    pub fn from_orders(orders: &[Vec<usize>]) -> Result<Self> {
        let n = orders.len();
        let mut order = Vec::with_capacity(n * n.saturating_sub(1));
        for (i, row) in orders.iter().enumerate() {
            if row.len() + 1 != n {
                return Err(Error::InvalidPermutation(format!(
                    "center {i} orders {} samples, expected {}",
                    row.len(),
                    n - 1
                )));
            }
            order.extend(row.iter().map(|&k| k as u32));
        }
        let table = Self::from_flat_order(n, order);
        for i in 0..n {
            let mut seen = vec![false; n];
            seen[i] = true;
            for &k in table.order(i) {
                let k = k as usize;
                if k >= n || seen[k] {
                    return Err(Error::InvalidPermutation(format!(
                        "center {i} lists index {k} twice or out of range"
                    )));
                }
                seen[k] = true;
            }
        }
        Ok(table)
    }

    pub(crate) fn from_flat_order(n: usize, order: Vec<u32>) -> Self {
        let mut table = Self {
            n,
            order,
            rank: vec![0; n * n],
            tied: Vec::new(),
        };
        for i in 0..n {
            table.fill_rank_row(i);
        }
        table
    }

    fn fill_rank_row(&mut self, i: usize) {
        let (n, w) = (self.n, self.n.saturating_sub(1));
        let rank = &mut self.rank[i * n..(i + 1) * n];
        rank[i] = 0;
        for (m, &k) in self.order[i * w..(i + 1) * w].iter().enumerate() {
            if let Some(slot) = rank.get_mut(k as usize) {
                *slot = m as u32 + 1;
            }
        }
    }

    /// Whether any center sees two samples at exactly the same distance.
    pub fn has_ties(&self) -> bool {
        !self.tied.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Overwrites `self` with `src` relabeled so that sample `sigma[i]` holds
    /// what sample `i` held. `sigma` must be a permutation of `0..src.n()`.
    ///
    /// Samples at tied distances are re-sorted by their new indices, so the
    /// result equals the table recomputed from the relabeled data.
    pub(crate) fn relabel_from(&mut self, src: &RankTable, sigma: &[usize]) {
        let n = src.n;
        let w = n.saturating_sub(1);
        self.n = n;
        self.order.resize(n * w, 0);
        self.rank.resize(n * n, 0);
        self.tied.clear();
        self.tied.resize(src.tied.len(), false);
        for i in 0..n {
            let to = sigma[i];
            let dst = &mut self.order[to * w..(to + 1) * w];
            for (slot, &k) in dst.iter_mut().zip(src.order(i)) {
                *slot = sigma[k as usize] as u32;
            }
            if src.has_ties() {
                let tied = &src.tied[i * w..(i + 1) * w];
                self.tied[to * w..(to + 1) * w].copy_from_slice(tied);
                let mut start = 0;
                while start < w {
                    let mut end = start + 1;
                    while end < w && tied[end] {
                        end += 1;
                    }
                    dst[start..end].sort_unstable();
                    start = end;
                }
            }
            self.fill_rank_row(to);
        }
    }

    /// Indices of the other samples, nearest to `center` first.
    #[inline]
    pub fn order(&self, center: usize) -> &[u32] {
        let w = self.n - 1;
        &self.order[center * w..(center + 1) * w]
    }

    /// Position (1-based) of `k` in the ordering around `center`.
    #[inline]
    pub fn rank(&self, center: usize, k: usize) -> u32 {
        self.rank[center * self.n + k]
    }

    /// Ranks of every sample around `center`, indexed by sample.
    #[inline]
    pub fn ranks(&self, center: usize) -> &[u32] {
        &self.rank[center * self.n..(center + 1) * self.n]
    }
}

/// Ranks every sample around every center by `(distance, index)`.
pub fn rank_table(dist: &DistanceMatrix) -> RankTable {
    let n = dist.n();
    let w = n.saturating_sub(1);
    let mut order = Vec::with_capacity(n * w);
    let mut tied = Vec::with_capacity(n * w);
    let mut row: Vec<u32> = Vec::with_capacity(n);
    for i in 0..n {
        let d = dist.row(i);
        row.clear();
        row.extend((0..n as u32).filter(|&k| k as usize != i));
        row.sort_unstable_by(|&a, &b| {
            d[a as usize]
                .total_cmp(&d[b as usize])
                .then_with(|| a.cmp(&b))
        });
        tied.push(false);
        tied.extend(row.windows(2).map(|p| d[p[0] as usize] == d[p[1] as usize]));
        tied.truncate(order.len() + w);
        order.extend_from_slice(&row);
    }
    let mut table = RankTable::from_flat_order(n, order);
    if tied.contains(&true) {
        table.tied = tied;
    }
    table
}

/// Convenience: distances then ranks.
pub fn rank_dataset(data: &Dataset, metric: Metric) -> RankTable {
    rank_table(&distance_matrix(data, metric))
}
