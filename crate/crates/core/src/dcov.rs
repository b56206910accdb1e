//! Distance covariance baseline.
//!
//! The statistic is `n * V^2` where `V^2 = (1/n^2) * sum_jk A[j][k] * B[j][k]`
//! and `A`, `B` are the double-centered X and Y distance matrices. Under a
//! relabeling of Y only the pairing of entries changes, so both matrices are
//! centered once and replicates just reindex `A`.

use std::time::Instant;

use crate::dataset::DistanceMatrix;
use crate::error::{Error, Result};
use crate::permutation::{at_least, count_exceeding, draw_permutation, Method, PermutationPlan, TestResult};

/// Distance matrix with row means, column means and grand mean removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredDistances {
    values: Vec<f64>,
    n: usize,
}

impl CenteredDistances {
    pub fn new(dist: &DistanceMatrix) -> Self {
        let n = dist.n();
        let nf = n as f64;
        // distance matrices are symmetric, so row means double as column means
        let means: Vec<f64> = (0..n).map(|i| dist.row(i).iter().sum::<f64>() / nf).collect();
        let grand = means.iter().sum::<f64>() / nf;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                values.push(dist.get(j, k) - means[j] - means[k] + grand);
            }
        }
        Self { values, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }
}

// sum_jk A[sigma j][sigma k] * B[j][k] / n
fn paired_sum(a: &CenteredDistances, b: &CenteredDistances, sigma: &[usize]) -> f64 {
    let n = a.n;
    let mut total = 0.0;
    for j in 0..n {
        let arow = a.row(sigma[j]);
        let brow = b.row(j);
        let mut acc = 0.0;
        for k in 0..n {
            acc += arow[sigma[k]] * brow[k];
        }
        total += acc;
    }
    total / n as f64
}

fn check_sizes(dx: &DistanceMatrix, dy: &DistanceMatrix, min: usize) -> Result<usize> {
    if dx.n() != dy.n() {
        return Err(Error::SampleSizeMismatch { x: dx.n(), y: dy.n() });
    }
    if dx.n() < min {
        return Err(Error::TooFewSamples { n: dx.n(), min });
    }
    Ok(dx.n())
}

/// `n * V^2` for the two samples.
pub fn dcov_statistic(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<f64> {
    let n = check_sizes(dx, dy, 2)?;
    let identity: Vec<usize> = (0..n).collect();
    Ok(paired_sum(&CenteredDistances::new(dx), &CenteredDistances::new(dy), &identity))
}

/// Permutation test of the distance covariance, relabeling Y exactly as the
/// rank-based test does for the same plan.
pub fn dcov_pvalue(dx: &DistanceMatrix, dy: &DistanceMatrix, plan: &PermutationPlan) -> Result<TestResult> {
    let n = check_sizes(dx, dy, 3)?;
    if plan.replicates == 0 {
        return Err(Error::ZeroReplicates);
    }
    let start = Instant::now();
    let a = CenteredDistances::new(dx);
    let b = CenteredDistances::new(dy);
    let identity: Vec<usize> = (0..n).collect();
    let observed = paired_sum(&a, &b, &identity);

    // moving y_j to slot sigma[j] pairs B[j][k] with A[sigma j][sigma k]
    let exceed_count = count_exceeding(
        plan.replicates,
        || (),
        |_, r| {
            let sigma = draw_permutation(n, plan.seed, r);
            at_least(paired_sum(&a, &b, &sigma), observed)
        },
    );

    Ok(TestResult {
        method: Method::Dcov,
        n,
        observed,
        exceed_count,
        p_value: plan.estimator.p_value(exceed_count, plan.replicates),
        plan: *plan,
        elapsed: start.elapsed(),
    })
}
