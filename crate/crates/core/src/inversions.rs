//! Per-position inversion counts of a permutation.
//!
//! For position `j`, `inv[j]` is the number of earlier positions holding a
//! larger value. The merge-sort routine computes all counts in `O(M log M)`;
//! the quadratic routine is kept as its oracle.

use crate::error::{Error, Result};

/// A permutation of `0..M`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let m = values.len();
        let mut seen = vec![false; m];
        for &v in &values {
            if v >= m || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} repeated or outside 0..{m}"
                )));
            }
        }
        Ok(Self(values))
    }

    /// Accepts the values `1..=M` in some order.
    pub fn from_one_based(values: &[usize]) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::InvalidPermutation("0 in a one-based permutation".into()));
        }
        Self::new(values.iter().map(|&v| v - 1).collect())
    }

    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }
}

/// `inv[j] = #{k < j : pi[k] > pi[j]}` for every position `j` of the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionCounts(pub Vec<u32>);

impl InversionCounts {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

/// Quadratic double loop straight from the definition.
pub fn inversions_naive(pi: &Permutation) -> InversionCounts {
    let p = pi.as_slice();
    InversionCounts(
        (0..p.len())
            .map(|j| p[..j].iter().filter(|&&v| v > p[j]).count() as u32)
            .collect(),
    )
}

/// Merge-sort inversion counting.
pub fn inversions_mergesort(pi: &Permutation) -> InversionCounts {
    let values: Vec<u32> = pi.as_slice().iter().map(|&v| v as u32).collect();
    let mut counts = vec![0u32; values.len()];
    let mut scratch = MergeScratch::default();
    count_inversions(&values, &mut counts, &mut scratch);
    InversionCounts(counts)
}

/// Reusable buffers for [`count_inversions`].
#[derive(Debug, Default, Clone)]
pub struct MergeScratch {
    items: Vec<u64>,
    buf: Vec<u64>,
}

/// Blocks up to this length are sorted by insertion.
const INSERTION_MAX: usize = 16;
const POS_MASK: u64 = u32::MAX as u64;

/// Writes per-position inversion counts of `values` into `counts`.
///
/// `values` must hold distinct integers; only their relative order matters.
/// Runs in `O(M log M)` and allocates nothing once `scratch` has grown.
pub fn count_inversions(values: &[u32], counts: &mut [u32], scratch: &mut MergeScratch) {
    debug_assert_eq!(values.len(), counts.len());
    counts.fill(0);
    // value in the high half, so items compare by value alone
    scratch.items.clear();
    scratch
        .items
        .extend(values.iter().enumerate().map(|(pos, &v)| (v as u64) << 32 | pos as u64));
    scratch.buf.clear();
    scratch.buf.resize(values.len(), 0);
    sort_counting(&mut scratch.items, &mut scratch.buf, counts);
}

// Sorts packed (value, source position) items; every element taken from the
// right half during a merge gains one inversion per left-half element not yet
// taken.
fn sort_counting(items: &mut [u64], buf: &mut [u64], counts: &mut [u32]) {
    let len = items.len();
    if len <= INSERTION_MAX {
        // each shift passes over one earlier, larger element
        for i in 1..len {
            let x = items[i];
            let mut j = i;
            while j > 0 && items[j - 1] > x {
                items[j] = items[j - 1];
                j -= 1;
            }
            items[j] = x;
            counts[(x & POS_MASK) as usize] += (i - j) as u32;
        }
        return;
    }
    let mid = len / 2;
    {
        let (left, right) = items.split_at_mut(mid);
        let (lbuf, rbuf) = buf.split_at_mut(mid);
        sort_counting(left, lbuf, counts);
        sort_counting(right, rbuf, counts);
    }
    let buf = &mut buf[..len];
    buf.copy_from_slice(items);
    let (left, right) = buf.split_at(mid);
    let (mut li, mut ri, mut k) = (0, 0, 0);
    while li < left.len() && ri < right.len() {
        let (l, r) = (left[li], right[ri]);
        let take_right = r < l;
        items[k] = if take_right { r } else { l };
        counts[(r & POS_MASK) as usize] += take_right as u32 * (left.len() - li) as u32;
        li += !take_right as usize;
        ri += take_right as usize;
        k += 1;
    }
    // leftovers: the right tail has no left element left to pass
    items[k..k + left.len() - li].copy_from_slice(&left[li..]);
    k += left.len() - li;
    items[k..].copy_from_slice(&right[ri..]);
}
